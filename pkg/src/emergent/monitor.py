"""Emergence events: strict drops in windowed relative complexity upon activation.

A detector k that first fires at frame f, after at least ``w`` silent
frames, is checked by comparing two adjacent windows of ``w`` frames: the
baseline ending just before k's earliest implied frame (described without
k) and the window right after it (described with k). An event requires a
strict decrease.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from . import codec
from .complexity import STATE_ONLY, window_bits
from .errors import BaselineViolation, EmergentError, WindowTooLong
from .hierarchy import Hierarchy, SystemTrace

EHS = "EHS"
ERM_SYNTACTIC = "ERM-syntactic"
ERM_SEMANTIC = "ERM-semantic"

T1, T2, T3 = "T1", "T2", "T3"

DEFAULT_WINDOW = 16
DEFAULT_FAILURES = 3
DEFAULT_VALIDATION = 5


@dataclass(frozen=True)
class EmergenceEvent:
    frame: int
    detector_id: int
    bits_before: int
    bits_after: int
    baseline_frame: int
    compare_frame: int
    kind: str | None = None


@dataclass(frozen=True)
class Change:
    """One entry of the repertoire/observable change log."""

    frame: int
    kind: str  # "sensor" or "detector"
    id: int


@dataclass(frozen=True)
class ErmPhase:
    phase: str = T1
    model_detector_id: int | None = None
    consecutive_failures: int = 0
    validations: int = 0
    observable_set: frozenset[int] = frozenset()


def check_emergence(trace: SystemTrace, h: Hierarchy, k: int, t: int, dt: int, w: int,
                    mode: str = STATE_ONLY, param_bits: int = codec.DEFAULT_PARAM_BITS) -> EmergenceEvent | None:
    """Compare the window ending at ``t`` (without k) to the window ending at ``t + dt`` (with k)."""
    base = (t - w + 1, t)
    after = (t + dt - w + 1, t + dt)
    first, last = trace.start, trace.start + len(trace) - 1
    if base[0] < first or after[1] > last:
        raise WindowTooLong(f"windows {base} and {after} do not fit in frames {first}..{last}")
    if any(k in trace[f - first].active for f in range(base[0], base[1] + 1)):
        raise BaselineViolation(f"detector {k} is already active in the baseline window {base}")
    active_after = [f for f in range(after[0], after[1] + 1) if k in trace[f - first].active]
    if not active_after:
        raise BaselineViolation(f"detector {k} never fires in the window {after}")

    before = window_bits(trace, h, *base, mode=mode, param_bits=param_bits, exclude=(k,))
    with_k = window_bits(trace, h, *base, mode=mode, param_bits=param_bits)
    if with_k != before:
        raise EmergentError(f"an inactive detector changed the baseline description ({with_k} != {before})")
    bits_after = window_bits(trace, h, *after, mode=mode, param_bits=param_bits)
    if bits_after < before:
        return EmergenceEvent(active_after[0], k, before, bits_after, t, t + dt)
    return None


def newly_activated(trace: SystemTrace, h: Hierarchy, w: int) -> list[tuple[int, int]]:
    """(detector, frame) pairs where a detector fires after at least ``w`` silent frames."""
    out = []
    first = trace.start
    for d in h.detectors:
        silent = 0
        for s in trace:
            if d.id in s.active:
                if silent >= w and s.frame - first >= w:
                    out.append((d.id, s.frame))
                silent = 0
            else:
                silent += 1
    return sorted(out, key=lambda x: (x[1], x[0]))


def detect_events(trace: SystemTrace, h: Hierarchy, w: int = DEFAULT_WINDOW, dt: int | None = None,
                  mode: str = STATE_ONLY, param_bits: int = codec.DEFAULT_PARAM_BITS,
                  changes: Sequence[Change] = ()) -> list[EmergenceEvent]:
    """Scan a trace for emergence events and classify them.

    The baseline ends at the last frame before the earliest frame implied by
    the new activation (``f - window``), so the two windows do not share the
    frames the detector explains. Activations too close to either end of the
    trace for two full windows are skipped.
    """
    dt = w if dt is None else dt
    events = []
    last = trace.start + len(trace) - 1
    for k, f in newly_activated(trace, h, w):
        t = f - h.detector(k).window
        if t - w + 1 < trace.start or t + dt > last:
            continue
        try:
            e = check_emergence(trace, h, k, t, dt, w, mode, param_bits)
        except BaselineViolation:
            continue
        if e is not None:
            events.append(replace(e, kind=classify_event(e, changes)))
    return events


def classify_event(e: EmergenceEvent, changes: Sequence[Change], run_start: int = 0) -> str:
    """EHS for detectors present from the start; otherwise ERM, semantic when a
    sensor was added since the previous repertoire change and before the activation."""
    registered = [c.frame for c in changes if c.kind == "detector" and c.id == e.detector_id]
    if not registered or min(registered) <= run_start:
        return EHS
    reg = min(registered)
    earlier = [c.frame for c in changes if c.kind == "detector" and c.frame < reg]
    since = max(earlier, default=run_start)
    if any(c.kind == "sensor" and since < c.frame <= e.frame for c in changes):
        return ERM_SEMANTIC
    return ERM_SYNTACTIC


def erm_step(phase: ErmPhase, error: float | None, tol: float, r: int = DEFAULT_FAILURES,
             v: int = DEFAULT_VALIDATION) -> ErmPhase:
    """Advance the T1 -> T2 -> T3 -> T1 cycle by one frame.

    In T1 ``error`` is the current model's prediction error; in T2 it is the
    candidate model's (None while no candidate exists).
    """
    if phase.phase == T3:
        return replace(phase, phase=T1, consecutive_failures=0, validations=0)
    if phase.phase == T1:
        if error is not None and error <= tol:
            return replace(phase, consecutive_failures=0)
        failures = phase.consecutive_failures + 1
        return replace(phase, phase=T2 if failures >= r else T1, consecutive_failures=failures, validations=0)
    if error is None or error > tol:
        return replace(phase, validations=0)
    n = phase.validations + 1
    return replace(phase, phase=T3 if n >= v else T2, validations=n)


def complexity_trace(trace: SystemTrace, h: Hierarchy, w: int = DEFAULT_WINDOW, mode: str = STATE_ONLY,
                     param_bits: int = codec.DEFAULT_PARAM_BITS) -> list[int | None]:
    """Bits of the ``w``-frame window ending at each frame; None until the first full window."""
    if w < 1:
        raise ValueError("window must be >= 1")
    if w > len(trace):
        raise WindowTooLong(f"window {w} longer than the trace ({len(trace)} frames)")
    out: list[int | None] = []
    for k, s in enumerate(trace):
        if k < w - 1:
            out.append(None)
        else:
            out.append(window_bits(trace, h, s.frame - w + 1, s.frame, mode, param_bits))
    return out
