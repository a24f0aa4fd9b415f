"""Perimeter-area fractal dimension of patches and two-regime shift detection.

For patches whose boundary has dimension D, perimeter scales as
P ~ A^(D/2), so D is twice the slope of log P against log A.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import NoSpan, NonPositive, TooFew

MIN_SEGMENT = 3


@dataclass(frozen=True)
class DimensionEstimate:
    slope: float
    intercept: float
    dimension: float
    sse: float
    n_patches: int

    @property
    def in_range(self) -> bool:
        return 1.0 <= self.dimension <= 2.0


@dataclass(frozen=True)
class DimensionShift:
    breakpoint_area: float
    low: DimensionEstimate
    high: DimensionEstimate
    sse_single: float
    sse_split: float

    @property
    def gain(self) -> float:
        return self.sse_single - self.sse_split


def _log_columns(patches) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(patches, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("patches must be a sequence of (area, perimeter) pairs")
    if np.any(arr <= 0):
        raise NonPositive("areas and perimeters must be positive")
    return np.log(arr[:, 0]), np.log(arr[:, 1])


def _line_fit(la: np.ndarray, lp: np.ndarray) -> DimensionEstimate:
    slope, intercept = np.polyfit(la, lp, 1)
    sse = float(np.sum((lp - (slope * la + intercept)) ** 2))
    return DimensionEstimate(float(slope), float(intercept), 2.0 * float(slope), sse, len(la))


def fractal_dimension(patches: Sequence[Sequence[float]]) -> DimensionEstimate:
    if len(patches) < 3:
        raise TooFew("need at least three patches")
    la, lp = _log_columns(patches)
    if np.ptp(la) == 0:
        raise NoSpan("all patches have the same area")
    return _line_fit(la, lp)


def _hinge_fit(la: np.ndarray, lp: np.ndarray, k: int) -> tuple[float, DimensionEstimate, DimensionEstimate]:
    """Two lines joined at la[k]; returns total SSE and the two segments."""
    lb = la[k]
    design = np.column_stack([np.ones_like(la), np.minimum(la - lb, 0.0), np.maximum(la - lb, 0.0)])
    (c, s1, s2), *_ = np.linalg.lstsq(design, lp, rcond=None)
    res = lp - design @ np.array([c, s1, s2])
    low = DimensionEstimate(float(s1), float(c - s1 * lb), 2.0 * float(s1), float(np.sum(res[:k] ** 2)), k)
    high = DimensionEstimate(float(s2), float(c - s2 * lb), 2.0 * float(s2), float(np.sum(res[k:] ** 2)),
                             len(la) - k)
    return float(np.sum(res**2)), low, high


def dimension_shift(patches: Sequence[Sequence[float]], min_segment: int = MIN_SEGMENT,
                    continuous: bool = True) -> DimensionShift:
    """Two-segment log-log regression; the split minimizing total SSE wins.

    Candidate splits are the observed areas, so the breakpoint is the area of
    the smallest patch in the upper segment. By default the two lines meet at
    the breakpoint (a perimeter-area law does not jump between scales);
    ``continuous=False`` fits the segments independently.
    """
    if len(patches) < 8:
        raise TooFew("need at least eight patches")
    la, lp = _log_columns(patches)
    order = np.argsort(la, kind="stable")
    la, lp = la[order], lp[order]
    if la[-1] - la[0] < np.log(10.0):
        raise NoSpan("patch areas must span at least one decade")

    single = _line_fit(la, lp)
    best = None
    for k in range(min_segment, len(la) - min_segment + 1):
        if la[k] == la[k - 1] or np.ptp(la[:k]) == 0 or np.ptp(la[k:]) == 0:
            continue
        if continuous:
            total, low, high = _hinge_fit(la, lp, k)
        else:
            low, high = _line_fit(la[:k], lp[:k]), _line_fit(la[k:], lp[k:])
            total = low.sse + high.sse
        if best is None or total < best[0]:
            best = (total, k, low, high)
    if best is None:
        raise TooFew("no admissible split position")
    total, k, low, high = best
    return DimensionShift(float(np.exp(la[k])), low, high, single.sse, total)
