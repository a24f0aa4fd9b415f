"""Two-scale point-pattern statistics: local regularity and quadrat aggregation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gammaln

from ..errors import TooFew

NEIGHBOURS = 6


@dataclass(frozen=True)
class Window:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    @classmethod
    def bounding(cls, pts: np.ndarray) -> "Window":
        return cls(pts[:, 0].min(), pts[:, 0].max(), pts[:, 1].min(), pts[:, 1].max())


@dataclass(frozen=True)
class PatternStats:
    nn_ratio: float
    dispersion_index: float
    regular: bool
    aggregated: bool


def _csr_ratio_mean(k: int) -> float:
    """E[d1 / dk] under complete spatial randomness, where (d1 / dk)^2 ~ Beta(1, k - 1)."""
    return float(np.exp(gammaln(1.5) + gammaln(k) - gammaln(k + 0.5)))


def nn_ratio(pts: np.ndarray, window: Window, small_r: float | None = None,
             neighbours: int = NEIGHBOURS) -> float:
    """Nearest-neighbour distance relative to what complete randomness predicts.

    Without ``small_r`` this is the Clark-Evans ratio: mean nearest-neighbour
    distance over 0.5/sqrt(lambda) with a global intensity. A global intensity
    cannot separate small-scale regularity from large-scale clustering, so with
    ``small_r`` each point is compared to its own neighbourhood instead: the
    mean of d1/dk (first over k-th neighbour distance) divided by its
    expectation under complete randomness, which does not depend on the
    intensity. Only points at least ``small_r`` from the window border count.
    Both versions are 1 in expectation for a Poisson pattern and grow with
    inhibition.
    """
    tree = cKDTree(pts)
    if small_r is None:
        dist, _ = tree.query(pts, k=2)
        lam = len(pts) / window.area
        return float(dist[:, 1].mean() / (0.5 / np.sqrt(lam)))
    inner = (
        (pts[:, 0] - window.xmin >= small_r) & (window.xmax - pts[:, 0] >= small_r)
        & (pts[:, 1] - window.ymin >= small_r) & (window.ymax - pts[:, 1] >= small_r)
    )
    if not inner.any():
        raise TooFew("no points farther than small_r from the window border")
    if len(pts) <= neighbours:
        raise TooFew(f"need more than {neighbours} points")
    dist, _ = tree.query(pts[inner], k=neighbours + 1)
    d1, dk = dist[:, 1], dist[:, neighbours]
    ratios = np.divide(d1, dk, out=np.ones_like(d1), where=dk > 0)
    return float(ratios.mean() / _csr_ratio_mean(neighbours))


def dispersion_index(pts: np.ndarray, window: Window, quadrat_size: float) -> float:
    """Variance-to-mean ratio of quadrat counts (ragged border quadrats dropped)."""
    nx = int((window.xmax - window.xmin) // quadrat_size)
    ny = int((window.ymax - window.ymin) // quadrat_size)
    if nx < 1 or ny < 1 or nx * ny < 2:
        raise TooFew("window holds fewer than two quadrats")
    ix = np.floor((pts[:, 0] - window.xmin) / quadrat_size).astype(int)
    iy = np.floor((pts[:, 1] - window.ymin) / quadrat_size).astype(int)
    keep = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
    counts = np.bincount(ix[keep] * ny + iy[keep], minlength=nx * ny)
    mean = counts.mean()
    if mean == 0:
        return 0.0
    return float(counts.var(ddof=1) / mean)


def pattern_stats(points: Sequence[Sequence[float]], small_r: float | None, quadrat_size: float,
                  window: Window | None = None, regular_factor: float = 1.1,
                  aggregation_ratio: float = 1.5) -> PatternStats:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 30:
        raise TooFew("need at least 30 points")
    window = window or Window.bounding(pts)
    r = nn_ratio(pts, window, small_r)
    q = dispersion_index(pts, window, quadrat_size)
    return PatternStats(r, q, r >= regular_factor, q >= aggregation_ratio)
