"""Correlation-based periodicity detection and harmonic prediction models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import Degenerate, TooShort


def autocorrelation(signal: Sequence[float], lag: int) -> float:
    """Pearson correlation between the signal and itself shifted by ``lag``.

    Returns 0.0 when either overlapping segment is constant.
    """
    x = np.asarray(signal, dtype=float)
    a, b = x[:-lag], x[lag:]
    a = a - a.mean()
    b = b - b.mean()
    denom = np.sqrt(np.dot(a, a) * np.dot(b, b))
    if denom <= 1e-12 * max(1.0, len(a)):
        return 0.0
    return float(np.dot(a, b) / denom)


def detect_period(signal: Sequence[float], max_lag: int, threshold: float = 0.9,
                  atol: float = 1e-9) -> int | None:
    """Smallest lag whose autocorrelation is the global maximum over ``1..max_lag``.

    Returns None when that maximum is below ``threshold``.
    """
    if max_lag < 1 or len(signal) < 2 * max_lag:
        raise TooShort(f"need at least {2 * max_lag} samples for max_lag={max_lag}")
    r = np.array([autocorrelation(signal, p) for p in range(1, max_lag + 1)])
    best = r.max()
    if best < threshold:
        return None
    return int(np.flatnonzero(r >= best - atol)[0]) + 1


@dataclass(frozen=True)
class HarmonicModel:
    """x(t) = offset + sum_i a_i cos(2 pi t / p_i) + b_i sin(2 pi t / p_i)."""

    periods: tuple[float, ...]
    offset: float
    cos_coef: tuple[float, ...]
    sin_coef: tuple[float, ...]

    def predict(self, t) -> np.ndarray | float:
        t = np.asarray(t, dtype=float)
        out = np.full(t.shape, self.offset)
        for p, a, b in zip(self.periods, self.cos_coef, self.sin_coef):
            w = 2.0 * np.pi * t / p
            out = out + a * np.cos(w) + b * np.sin(w)
        return out if out.shape else float(out)

    def residuals(self, t, x) -> np.ndarray:
        return np.abs(np.asarray(x, dtype=float) - self.predict(t))

    def to_dict(self) -> dict:
        return {
            "periods": list(self.periods),
            "offset": self.offset,
            "cos": list(self.cos_coef),
            "sin": list(self.sin_coef),
        }

    @classmethod
    def from_dict(cls, d) -> "HarmonicModel":
        return cls(tuple(d["periods"]), float(d["offset"]), tuple(d["cos"]), tuple(d["sin"]))


def fit_harmonic(t: Sequence[float], x: Sequence[float], periods: Sequence[float]) -> HarmonicModel:
    """Linear least squares for offset and per-period quadrature amplitudes."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    cols = [np.ones_like(t)]
    for p in periods:
        w = 2.0 * np.pi * t / p
        cols += [np.cos(w), np.sin(w)]
    design = np.column_stack(cols)
    if len(t) < design.shape[1] or np.linalg.matrix_rank(design) < design.shape[1]:
        raise Degenerate("not enough distinct samples to fit the harmonic model")
    coef, *_ = np.linalg.lstsq(design, x, rcond=None)
    return HarmonicModel(
        periods=tuple(float(p) for p in periods),
        offset=float(coef[0]),
        cos_coef=tuple(float(c) for c in coef[1::2]),
        sin_coef=tuple(float(c) for c in coef[2::2]),
    )
