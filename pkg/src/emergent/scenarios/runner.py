"""Run loop: generate data, evaluate the hierarchy, monitor, and emit artifacts.

Temporal scenarios (symbols, trajectory, periodic) produce a per-frame trace
with columns ``frame,bits,active_count,phase,event_flag``. Static scenarios
(lattice, patches, points) have no time axis and write their data table
instead.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .. import monitor
from ..complexity import kd_profile, kd_shift
from ..errors import EmergentError, ScenarioFailed, UnknownInput
from ..hierarchy import Hierarchy, SystemTrace, evaluate_trace
from ..monitor import Change, ErmPhase
from ..recognizers import Window, dimension_shift, fit_harmonic, fractal_dimension, pattern_stats
from ..recognizers.conics import fit_focal_conic
from ..rules import ConicRule, HarmonicRule, rule_from_dict
from . import generators as gen
from .config import ScenarioConfig

TRACE_HEADER = ("frame", "bits", "active_count", "phase", "event_flag")
NO_PHASE = "-"


@dataclass
class RunResult:
    report: dict
    table_header: tuple[str, ...]
    table_rows: list[tuple]
    plot_rows: list[tuple]
    events: list[monitor.EmergenceEvent] = field(default_factory=list)
    phases: list[str] = field(default_factory=list)
    bits: list[int | None] = field(default_factory=list)
    trace: SystemTrace | None = None
    hierarchy: Hierarchy | None = None


# ------------------------------------------------------------------ helpers

class _Frames:
    """Minimal evaluation context over per-frame readings keyed by sensor id."""

    def __init__(self, readings: list[dict[int, Any]]):
        self.readings = readings

    def reading(self, sensor, frame):
        if 0 <= frame < len(self.readings):
            return self.readings[frame].get(sensor)
        return None

    def is_active(self, detector, frame):
        return False


def _resolve(h: Hierarchy, rule: dict) -> dict:
    """Replace sensor and detector names in a rule declaration by ids."""

    def sensor(v):
        return h.sensor_by_name(v).id if isinstance(v, str) else int(v)

    def det(v):
        return h.detector_by_name(v).id if isinstance(v, str) else int(v)

    out = dict(rule)
    for key in ("sensor", "x", "y", "vx", "vy"):
        if key in out and out[key] is not None:
            out[key] = sensor(out[key])
    if "of" in out:
        out["of"] = [det(v) for v in out["of"]]
    if "pattern" in out:
        out["pattern"] = [[det(i), int(lag)] for i, lag in out["pattern"]]
    return out


def _residual_tol(residuals: np.ndarray, n_params: int, sigma: float) -> float:
    dof = max(len(residuals) - n_params, 1)
    rms = float(np.sqrt(np.sum(np.asarray(residuals) ** 2) / dof))
    return sigma * rms


def _event_dict(e: monitor.EmergenceEvent) -> dict:
    return asdict(e)


def _transitions(phases: list[str]) -> list[dict]:
    out = []
    for f, p in enumerate(phases):
        if p != NO_PHASE and (f == 0 or phases[f - 1] != p):
            out.append({"frame": f, "phase": p})
    return out


def _temporal_result(cfg: ScenarioConfig, h: Hierarchy, readings: list[dict], phases: list[str],
                     changes: list[Change], extra: dict | None = None) -> RunResult:
    trace = evaluate_trace(h, readings)
    w = cfg.monitor.window
    bits = monitor.complexity_trace(trace, h, w, cfg.accounting, cfg.codec.param_bits)
    events = monitor.detect_events(trace, h, w, cfg.monitor.dt, cfg.accounting, cfg.codec.param_bits, changes)
    flagged = {e.frame for e in events}
    rows = [(s.frame, "" if b is None else b, len(s.active), phases[s.frame], int(s.frame in flagged))
            for s, b in zip(trace, bits)]
    known = [b for b in bits if b is not None]
    report = {
        "events": [_event_dict(e) for e in events],
        "phase_log": _transitions(phases),
        "changes": [asdict(c) for c in changes],
        "detectors": [{"id": d.id, "name": d.name, "level": d.level, "since": d.since} for d in h.detectors],
        "sensors": [{"id": s.id, "name": s.name, "since": s.since} for s in h.sensors],
        "summary": {
            "frames": len(trace),
            "min_bits": min(known, default=None),
            "max_bits": max(known, default=None),
            "event_count": len(events),
        },
    }
    report.update(extra or {})
    plot = [(f, b) for f, b in enumerate(bits) if b is not None]
    return RunResult(report, TRACE_HEADER, rows, plot, events, phases, bits, trace, h)


# ------------------------------------------------------------------ temporal scenarios

def _run_symbols(cfg: ScenarioConfig, base: Path) -> RunResult:
    sc = cfg.symbols
    stream = gen.gen_symbol_stream(sc, cfg.seed)
    h = Hierarchy().register_sensor(sc.sensor, sc.alphabet)
    changes = []
    for decl in sc.detectors:
        h = h.register(decl.name, decl.level, rule_from_dict(_resolve(h, decl.rule)), decl.since)
        if decl.since > 0:
            changes.append(Change(decl.since, "detector", len(h.detectors)))
    readings = [{sc.sensor: c} for c in stream]
    phases = [NO_PHASE] * len(stream)
    return _temporal_result(cfg, h, readings, phases, changes, {"stream": "".join(stream)})


@dataclass
class _ErmModel:
    """Domain hooks for the model-based (ERM) loop."""

    calibrate: Callable[[int], Any]              # frames -> rule on frames [0, n)
    refit: Callable[[int, int, Hierarchy, float], Any]  # (first, last, h, tol) -> candidate rule
    name: str


def _erm_loop(cfg: ScenarioConfig, h: Hierarchy, readings_by_name: list[dict], model: _ErmModel,
              calibration: int, refit_points: int, sensor_additions: dict[int, list[str]],
              precision: int) -> tuple[Hierarchy, list[str], list[Change]]:
    m = cfg.monitor
    changes: list[Change] = []
    rule = model.calibrate(calibration)
    h = h.register(model.name, 1, rule)
    phase = ErmPhase(monitor.T1, len(h.detectors), 0, 0, frozenset(s.id for s in h.sensors))
    by_id: list[dict[int, Any]] = []
    ctx = _Frames(by_id)
    phases: list[str] = []
    candidate = None
    fail_start = None
    generation = 1
    for f, row in enumerate(readings_by_name):
        for name in sensor_additions.get(f, ()):
            h = h.register_sensor(name, precision_bits=precision, since=f)
            changes.append(Change(f, "sensor", len(h.sensors)))
            phase = replace(phase, observable_set=phase.observable_set | {len(h.sensors)})
        by_id.append({h.sensor_by_name(k).id: v for k, v in row.items() if _has(h, k)})

        if phase.phase == monitor.T1:
            err = rule.error(ctx, f)
            nxt = monitor.erm_step(phase, err, 1.0, m.failures, m.validation)
            if phase.consecutive_failures == 0 and nxt.consecutive_failures == 1:
                fail_start = f
        elif phase.phase == monitor.T2:
            # the candidate, fitted on earlier frames only, must predict frame f
            err = None if candidate is None else candidate.error(ctx, f)
            nxt = monitor.erm_step(phase, err, 1.0, m.failures, m.validation)
            if nxt.phase == monitor.T3:
                generation += 1
                h = h.register(f"{model.name}{generation}", 1, candidate, since=f)
                changes.append(Change(f, "detector", len(h.detectors)))
                nxt = replace(nxt, model_detector_id=len(h.detectors))
                rule, candidate = candidate, None
            elif f - fail_start + 1 >= refit_points:
                # refit on every frame since the failures began (one-step-ahead validation)
                try:
                    candidate = model.refit(fail_start, f, h, rule.tol)
                except EmergentError:
                    candidate = None
        else:
            nxt = monitor.erm_step(phase, None, 1.0, m.failures, m.validation)
        phase = nxt
        phases.append(phase.phase)
    return h, phases, changes


def _has(h: Hierarchy, name: str) -> bool:
    try:
        h.sensor_by_name(name)
        return True
    except UnknownInput:
        return False


def _run_trajectory(cfg: ScenarioConfig, base: Path) -> RunResult:
    tc = cfg.trajectory
    data = gen.gen_trajectory(tc, cfg.seed)
    prec = cfg.codec.precision_bits
    h = Hierarchy().register_sensor("x", precision_bits=prec).register_sensor("y", precision_bits=prec)
    sigma = cfg.monitor.tol_sigma
    xs, ys = data["x"], data["y"]

    def calibrate(n):
        cm = fit_focal_conic(np.column_stack([xs[:n], ys[:n]]), tc.focus)
        return ConicRule(1, 2, cm, _residual_tol(cm.distance(xs[:n], ys[:n]), 3, sigma))

    def refit(first, last, hh, tol):
        sl = slice(first, last + 1)
        cm = fit_focal_conic(np.column_stack([xs[sl], ys[sl]]), tc.focus)
        if _has(hh, "vx"):
            return ConicRule(1, 2, cm, tol, hh.sensor_by_name("vx").id, hh.sensor_by_name("vy").id, tc.angle_tol)
        return ConicRule(1, 2, cm, tol)

    names = ["x", "y", "vx", "vy"]
    rows = [{k: float(data[k][f]) for k in names} for f in range(tc.frames)]
    adds = {} if tc.add_velocity_at is None else {tc.add_velocity_at: ["vx", "vy"]}
    h, phases, changes = _erm_loop(cfg, h, rows, _ErmModel(calibrate, refit, "orbit"),
                                   tc.calibration, tc.refit_points, adds, prec)
    readings = [{k: v for k, v in r.items() if _has(h, k)} for r in rows]
    return _temporal_result(cfg, h, readings, phases, changes, _models(h))


def _run_periodic(cfg: ScenarioConfig, base: Path) -> RunResult:
    pc = cfg.periodic
    x = gen.gen_periodic(pc, cfg.seed)
    t = np.arange(pc.frames, dtype=float)
    prec = cfg.codec.precision_bits
    h = Hierarchy().register_sensor("x", precision_bits=prec)
    sigma = cfg.monitor.tol_sigma

    def calibrate(n):
        hm = fit_harmonic(t[:n], x[:n], pc.periods)
        return HarmonicRule(1, hm, _residual_tol(hm.residuals(t[:n], x[:n]), 1 + 2 * len(pc.periods), sigma))

    def refit(first, last, hh, tol):
        sl = slice(first, last + 1)
        return HarmonicRule(1, fit_harmonic(t[sl], x[sl], list(pc.periods) + list(pc.extra_periods)), tol)

    rows = [{"x": float(v)} for v in x]
    h, phases, changes = _erm_loop(cfg, h, rows, _ErmModel(calibrate, refit, "cycle"),
                                   pc.calibration, pc.refit_points, {}, prec)
    return _temporal_result(cfg, h, rows, phases, changes, _models(h))


def _models(h: Hierarchy) -> dict:
    return {"models": [{"detector": d.id, "since": d.since, "rule": d.rule.to_dict()} for d in h.detectors]}


# ------------------------------------------------------------------ static scenarios

def _path(base: Path, p: str) -> Path:
    q = Path(p)
    return q if q.is_absolute() else base / q


def _run_lattice(cfg: ScenarioConfig, base: Path) -> RunResult:
    lc = cfg.lattice
    grid = gen.read_lattice(_path(base, lc.path)) if lc.path else gen.gen_stripes(lc, cfg.seed)
    prof = kd_profile(grid, lc.diameters)
    report = {
        "shape": list(grid.shape),
        "kd_profile": [list(e) for e in prof.entries],
        "kd_shift": kd_shift(prof) if len(prof.entries) >= 2 else None,
        "summary": {"min_bits": min(prof.bits), "max_bits": max(prof.bits), "event_count": 0},
    }
    rows = list(prof.entries)
    return RunResult(report, ("diameter", "bits"), rows, rows)


def _run_patches(cfg: ScenarioConfig, base: Path) -> RunResult:
    pc = cfg.patches
    data = gen.read_patches_csv(_path(base, pc.path)) if pc.path else gen.gen_patches(pc, cfg.seed)
    single = fractal_dimension(data)
    shift = dimension_shift(data)
    report = {
        "patches": len(data),
        "dimension": single.dimension,
        "dimension_shift": {
            "breakpoint_area": shift.breakpoint_area,
            "d_low": shift.low.dimension,
            "d_high": shift.high.dimension,
            "sse_single": shift.sse_single,
            "sse_split": shift.sse_split,
        },
        "summary": {"event_count": 0},
    }
    rows = [tuple(float(v) for v in r) for r in data]
    plot = [(float(np.log(a)), float(np.log(p))) for a, p in rows]
    return RunResult(report, ("area", "perimeter"), rows, plot)


def _run_points(cfg: ScenarioConfig, base: Path) -> RunResult:
    pc = cfg.points
    pts = gen.read_xy_csv(_path(base, pc.path)) if pc.path else gen.gen_points(pc, cfg.seed)
    st = pattern_stats(pts, pc.small_r, pc.quadrat_size, window=Window(*pc.window))
    report = {"points": len(pts), "pattern": asdict(st), "summary": {"event_count": 0}}
    rows = [tuple(float(v) for v in r) for r in pts]
    return RunResult(report, ("x", "y"), rows, rows)


_RUNNERS = {
    "symbols": _run_symbols,
    "trajectory": _run_trajectory,
    "periodic": _run_periodic,
    "lattice": _run_lattice,
    "patches": _run_patches,
    "points": _run_points,
}


def run_scenario(cfg: ScenarioConfig, base_dir: str | Path = ".") -> RunResult:
    """Run one validated scenario in memory; nothing is written."""
    try:
        result = _RUNNERS[cfg.kind](cfg, Path(base_dir))
    except (EmergentError, ValueError, OSError) as exc:
        raise ScenarioFailed(f"scenario {cfg.scenario!r}: {type(exc).__name__}: {exc}") from exc
    result.report = {"scenario": cfg.to_document(), **result.report}
    return result


# ------------------------------------------------------------------ artifacts

def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render_table(header, rows) -> str:
    lines = [",".join(header)] + [",".join(_cell(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def render_plot(rows) -> str:
    return "".join(" ".join(_cell(v) for v in r) + "\n" for r in rows)


def render_report(report: dict, trace_path: str | None, timestamp: bool = True) -> str:
    doc = dict(report)
    doc["trace"] = trace_path
    if timestamp:
        doc["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_outputs(result: RunResult, report_path: str | Path, trace_path: str | Path,
                  plot_path: str | Path | None = None) -> None:
    texts = {Path(trace_path): render_table(result.table_header, result.table_rows),
             Path(report_path): render_report(result.report, str(trace_path))}
    if plot_path is not None:
        texts[Path(plot_path)] = render_plot(result.plot_rows)
    for p, text in texts.items():
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
