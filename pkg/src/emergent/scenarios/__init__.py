from .config import ScenarioConfig, dump_config, load_config, parse_config
from .generators import (gen_patches, gen_periodic, gen_points, gen_stripes, gen_symbol_stream,
                         gen_trajectory, read_lattice, read_patches_csv, read_xy_csv)
from .runner import RunResult, render_report, render_table, run_scenario, write_outputs

__all__ = [
    "ScenarioConfig", "dump_config", "load_config", "parse_config",
    "gen_patches", "gen_periodic", "gen_points", "gen_stripes", "gen_symbol_stream", "gen_trajectory",
    "read_lattice", "read_patches_csv", "read_xy_csv",
    "RunResult", "render_report", "render_table", "run_scenario", "write_outputs",
]
