import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from emergent.cli import main, oracle_audit
from emergent.errors import BadAlphabet, BadConic, ConfigError, ScenarioFailed
from emergent.monitor import EHS, ERM_SEMANTIC, ERM_SYNTACTIC, T1, T2, T3
from emergent.recognizers.conics import fit_focal_conic
from emergent.scenarios import load_config, parse_config, run_scenario
from emergent.scenarios.config import ConicSpec, SymbolsConfig, TrajectoryConfig, dump_config
from emergent.scenarios.generators import (gen_symbol_stream, gen_trajectory, read_lattice, read_patches_csv,
                                           read_xy_csv)
from emergent.scenarios.runner import TRACE_HEADER, _residual_tol, render_report, render_table

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SHIPPED = sorted(CONFIGS.glob("*.yaml"))


def cfg(name):
    return load_config(CONFIGS / f"{name}.yaml")


# ------------------------------------------------------------------ configuration

def test_unknown_keys_are_rejected():
    doc = yaml.safe_load((CONFIGS / "word_stream.yaml").read_text())
    doc["monitor"]["windw"] = 8
    with pytest.raises(ConfigError):
        parse_config(doc)
    doc = yaml.safe_load((CONFIGS / "word_stream.yaml").read_text())
    doc["colour"] = "blue"
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_kind_must_match_its_section():
    doc = yaml.safe_load((CONFIGS / "word_stream.yaml").read_text())
    doc["kind"] = "periodic"
    with pytest.raises(ConfigError):
        parse_config(doc)


@pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.stem)
def test_config_round_trip(path):
    c = load_config(path)
    again = parse_config(yaml.safe_load(dump_config(c)))
    assert again == c
    assert again.to_document() == c.to_document()


# ------------------------------------------------------------------ generators

def test_symbol_stream():
    c = SymbolsConfig(alphabet=["a", "b"], tokens=["ab"], repeat=4)
    assert "".join(gen_symbol_stream(c)) == "abababab"


def test_noisy_stream_is_reproducible():
    c = SymbolsConfig(alphabet=["a", "b"], tokens=["ab"], repeat=200, noise=0.25)
    one, two = gen_symbol_stream(c, seed=3), gen_symbol_stream(c, seed=3)
    assert one == two
    clean = "ab" * 200
    flips = sum(x != y for x, y in zip(one, clean))
    # substitutions draw from the other letters, so about a quarter of the symbols change
    assert 0.18 < flips / len(clean) < 0.32
    assert gen_symbol_stream(c, seed=4) != one


@pytest.mark.parametrize("kw", [dict(tokens=[]), dict(tokens=["ac"]), dict(alphabet=[])])
def test_bad_alphabet(kw):
    base = dict(alphabet=["a", "b"], tokens=["ab"])
    base.update(kw)
    with pytest.raises((BadAlphabet, ConfigError, ValueError)):
        gen_symbol_stream(SymbolsConfig(**base))


def test_bad_conic():
    tc = TrajectoryConfig(frames=10, switch=5, pre=ConicSpec(type="circle"))
    with pytest.raises(BadConic):
        gen_trajectory(tc)
    tc = TrajectoryConfig(frames=10, switch=5, pre=ConicSpec(type="hyperbola", a=1.0))
    with pytest.raises(BadConic):
        gen_trajectory(tc)


def _first_flags(tc, seed, sigma):
    d = gen_trajectory(tc, seed)
    n = tc.calibration
    m = fit_focal_conic(np.column_stack([d["x"][:n], d["y"][:n]]), tc.focus)
    tol = _residual_tol(m.distance(d["x"][:n], d["y"][:n]), 3, sigma)
    return np.flatnonzero(m.distance(d["x"], d["y"]) > tol), m, d


def test_unswitched_orbit_never_flags():
    c = cfg("kepler_syntactic")
    tc = c.trajectory.model_copy(update={"switch": 10**6})
    flags, m, d = _first_flags(tc, c.seed, c.monitor.tol_sigma)
    assert flags.size == 0
    # the same holds for any tolerance above three standard deviations of the sensor noise
    assert np.max(m.distance(d["x"], d["y"])) < 3 * tc.noise


def test_switch_is_flagged_promptly():
    c = cfg("kepler_syntactic")
    flags, _, _ = _first_flags(c.trajectory, c.seed, c.monitor.tol_sigma)
    assert c.trajectory.switch <= flags[0] <= c.trajectory.switch + c.monitor.failures


def test_switch_beyond_the_trace_is_a_pure_t1_run():
    c = cfg("kepler_syntactic")
    c = c.model_copy(update={"trajectory": c.trajectory.model_copy(update={"switch": 500})})
    r = run_scenario(c)
    assert set(r.phases) == {T1}
    assert r.events == []


# ------------------------------------------------------------------ runs

def test_word_stream_run():
    r = run_scenario(cfg("word_stream"), CONFIGS)
    [e] = r.events
    assert (e.frame, e.kind, e.bits_before, e.bits_after) == (9, EHS, 40, 28)
    assert r.hierarchy.detector(e.detector_id).name == "Dab"
    assert r.report["summary"]["event_count"] == 1
    assert r.report["scenario"]["scenario"] == "word_stream"


def _phase_sequence(phases):
    return [p for i, p in enumerate(phases) if i == 0 or phases[i - 1] != p]


@pytest.mark.parametrize("name, kind", [("kepler_syntactic", ERM_SYNTACTIC), ("kepler_semantic", ERM_SEMANTIC),
                                        ("periodic", ERM_SYNTACTIC)])
def test_erm_runs(name, kind):
    r = run_scenario(cfg(name), CONFIGS)
    assert _phase_sequence(r.phases) == [T1, T2, T3, T1]
    assert [e.kind for e in r.events] == [kind]
    bits = r.bits
    t2 = [b for b, p in zip(bits, r.phases) if p == T2 and b is not None]
    end_t1 = bits[r.phases.index(T2) - 1]
    assert max(t2) > end_t1
    after = [b for f, b in enumerate(bits) if f > r.phases.index(T3) and b is not None]
    assert min(after) < max(t2)


def test_semantic_run_logs_the_new_observables():
    r = run_scenario(cfg("kepler_semantic"), CONFIGS)
    added = [c for c in r.report["changes"] if c["kind"] == "sensor"]
    assert [c["frame"] for c in added] == [60, 60]
    assert {s["name"] for s in r.report["sensors"]} == {"x", "y", "vx", "vy"}


def test_static_runs():
    lat = run_scenario(cfg("stripes_lattice"), CONFIGS)
    assert lat.report["kd_shift"] == 2
    patches = run_scenario(cfg("forest_patches"), CONFIGS)
    assert 60 <= patches.report["dimension_shift"]["breakpoint_area"] <= 70
    shrubs = run_scenario(cfg("shrubs"), CONFIGS)
    assert (shrubs.report["pattern"]["regular"], shrubs.report["pattern"]["aggregated"]) == (True, True)


def test_module_errors_carry_the_scenario_name():
    c = cfg("word_stream")
    c = c.model_copy(update={"symbols": c.symbols.model_copy(update={"tokens": ["ax"]})})
    with pytest.raises(ScenarioFailed, match="word_stream"):
        run_scenario(c)


def _rows(text):
    return list(csv.reader(io.StringIO(text)))


@pytest.mark.parametrize("name", ["word_stream", "kepler_semantic", "periodic"])
def test_events_match_the_trace(name):
    r = run_scenario(cfg(name), CONFIGS)
    rows = _rows(render_table(r.table_header, r.table_rows))
    assert tuple(rows[0]) == TRACE_HEADER
    by_frame = {int(x[0]): x for x in rows[1:]}
    frames = [e["frame"] for e in r.report["events"]]
    assert frames == sorted(frames)
    for e in r.report["events"]:
        assert int(by_frame[e["baseline_frame"]][1]) == e["bits_before"]
        assert int(by_frame[e["compare_frame"]][1]) == e["bits_after"]
        assert by_frame[e["frame"]][4] == "1"


@pytest.mark.parametrize("path", SHIPPED, ids=lambda p: p.stem)
def test_runs_are_reproducible(path):
    one, two = run_scenario(load_config(path), CONFIGS), run_scenario(load_config(path), CONFIGS)
    assert render_table(one.table_header, one.table_rows) == render_table(two.table_header, two.table_rows)
    a, b = json.loads(render_report(one.report, "t.csv")), json.loads(render_report(two.report, "t.csv"))
    a.pop("generated_at"), b.pop("generated_at")
    assert a == b
    assert render_report(one.report, "t.csv", timestamp=False) == render_report(two.report, "t.csv", timestamp=False)


# ------------------------------------------------------------------ readers

def test_readers(tmp_path):
    (tmp_path / "pts.csv").write_text("x,y\n1,2\n3.5,4\n")
    assert read_xy_csv(tmp_path / "pts.csv").tolist() == [[1, 2], [3.5, 4]]
    (tmp_path / "p.csv").write_text("perimeter,area\n4,1\n8,4\n")
    assert read_patches_csv(tmp_path / "p.csv").tolist() == [[1, 4], [4, 8]]
    (tmp_path / "g.txt").write_text("0110\n1 0 0 1\n")
    assert read_lattice(tmp_path / "g.txt").tolist() == [[0, 1, 1, 0], [1, 0, 0, 1]]
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_xy_csv(tmp_path / "bad.csv")


# ------------------------------------------------------------------ CLI

def test_cli_run_writes_all_outputs(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("EMERGENT_OUT_DIR", str(tmp_path))
    assert main(["run", str(CONFIGS / "word_stream.yaml")]) == 0
    report = json.loads((tmp_path / "word_stream.report.json").read_text())
    assert report["summary"]["event_count"] == 1
    assert (tmp_path / "word_stream.trace.csv").read_text().startswith(",".join(TRACE_HEADER))
    assert (tmp_path / "word_stream.dat").exists()
    out = tmp_path / "elsewhere"
    assert main(["run", str(CONFIGS / "word_stream.yaml"), "--out", str(out / "r.json"),
                 "--trace", str(out / "t.csv"), "--plot", str(out / "p.dat")]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["p.dat", "r.json", "t.csv"]


def test_cli_validate(capsys):
    assert main(["validate", str(CONFIGS / "periodic.yaml")]) == 0
    assert "valid" in capsys.readouterr().out


def test_malformed_config_leaves_no_outputs(tmp_path, monkeypatch):
    monkeypatch.setenv("EMERGENT_OUT_DIR", str(tmp_path / "out"))
    bad = tmp_path / "bad.yaml"
    bad.write_text("scenario: broken\nkind: symbols\nsymbols: {alphabet: [a], tokens: [a]}\nbogus: 1\n")
    assert main(["run", str(bad)]) == 1
    assert main(["validate", str(bad)]) == 1
    assert not (tmp_path / "out").exists()
    (tmp_path / "syntax.yaml").write_text("scenario: [unclosed\n")
    assert main(["validate", str(tmp_path / "syntax.yaml")]) == 1


def test_runtime_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.setenv("EMERGENT_OUT_DIR", str(tmp_path / "out"))
    doc = yaml.safe_load((CONFIGS / "word_stream.yaml").read_text())
    doc["symbols"]["tokens"] = ["ax"]
    path = tmp_path / "runtime.yaml"
    path.write_text(yaml.safe_dump(doc))
    assert main(["run", str(path)]) == 2
    assert not (tmp_path / "out").exists()


def test_cli_oracle(capsys):
    assert main(["oracle", str(CONFIGS / "word_stream.yaml"), "--block", "4"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["greedy_below"] == 0
    assert stats["equal"] == stats["compared"] == stats["blocks"] == 4
    assert main(["oracle", str(CONFIGS / "shrubs.yaml")]) == 1


def test_oracle_audit_on_a_trajectory():
    r = run_scenario(cfg("kepler_syntactic"), CONFIGS)
    stats = oracle_audit(r, 1)
    assert stats["greedy_below"] == 0
    assert stats["compared"] + stats["skipped"] == stats["blocks"] == len(r.trace)
