"""Algebraic least-squares conic fitting and classification.

A conic is ``a x^2 + b xy + c y^2 + d x + e y + f = 0`` with the coefficient
vector scaled to unit Euclidean norm. The fit minimizes the algebraic
residual, which has a closed form (smallest right singular vector of the
design matrix); it is biased compared to a geometric fit but deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import Degenerate

ELLIPSE = "ellipse"
PARABOLA = "parabola"
HYPERBOLA = "hyperbola"
DEGENERATE = "degenerate"

EPS_CLASS = 1e-6
EPS_DEGENERATE = 1e-9


def _design(x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)])


def _canonical_sign(c: np.ndarray) -> np.ndarray:
    c = c / np.linalg.norm(c)
    k = int(np.argmax(np.abs(c)))
    return -c if c[k] < 0 else c


def classify(coef: Sequence[float], eps_class: float = EPS_CLASS,
             eps_degenerate: float = EPS_DEGENERATE) -> str:
    a, b, c, d, e, f = coef
    full = np.array([[a, b / 2, d / 2], [b / 2, c, e / 2], [d / 2, e / 2, f]])
    scale = np.linalg.norm(full)
    if scale == 0 or abs(np.linalg.det(full)) <= eps_degenerate * scale**3:
        return DEGENERATE
    quad_scale = a * a + b * b / 2 + c * c
    if quad_scale == 0:
        return DEGENERATE
    disc = (b * b - 4 * a * c) / quad_scale
    if abs(disc) <= eps_class:
        return PARABOLA
    return ELLIPSE if disc < 0 else HYPERBOLA


@dataclass(frozen=True)
class ConicModel:
    coef: tuple[float, float, float, float, float, float]
    kind: str

    @classmethod
    def from_coefficients(cls, coef: Sequence[float], eps_class: float = EPS_CLASS) -> "ConicModel":
        c = np.asarray(coef, dtype=float)
        if c.shape != (6,) or not np.any(c):
            raise Degenerate("a conic needs six coefficients, not all zero")
        c = _canonical_sign(c)
        return cls(tuple(float(v) for v in c), classify(c, eps_class))

    @property
    def discriminant(self) -> float:
        a, b, c = self.coef[:3]
        return b * b - 4 * a * c

    def residual(self, x, y) -> np.ndarray | float:
        r = np.abs(_design(np.atleast_1d(x), np.atleast_1d(y)) @ np.asarray(self.coef))
        return r if np.ndim(x) else float(r[0])

    def distance(self, x, y) -> np.ndarray | float:
        """First-order geometric distance |Q| / |grad Q| (Sampson distance)."""
        xa, ya = np.atleast_1d(np.asarray(x, dtype=float)), np.atleast_1d(np.asarray(y, dtype=float))
        a, b, c, d, e, _ = self.coef
        g = np.hypot(2 * a * xa + b * ya + d, b * xa + 2 * c * ya + e)
        q = np.abs(_design(xa, ya) @ np.asarray(self.coef))
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(g > 0, q / np.where(g > 0, g, 1.0), np.where(q > 0, np.inf, 0.0))
        return r if np.ndim(x) else float(r[0])

    def gradient(self, x: float, y: float) -> tuple[float, float]:
        a, b, c, d, e, _ = self.coef
        return 2 * a * x + b * y + d, b * x + 2 * c * y + e

    def tangency_error(self, x: float, y: float, vx: float, vy: float) -> float:
        """|cos| of the angle between the velocity and the conic normal; 0 when tangent."""
        gx, gy = self.gradient(x, y)
        denom = np.hypot(gx, gy) * np.hypot(vx, vy)
        if denom == 0:
            return 0.0
        return float(abs(gx * vx + gy * vy) / denom)

    def to_dict(self) -> dict:
        return {"coef": list(self.coef), "kind": self.kind}

    @classmethod
    def from_dict(cls, d) -> "ConicModel":
        return cls(tuple(float(v) for v in d["coef"]), d["kind"])


def fit_conic(points: Sequence[Sequence[float]], eps_class: float = EPS_CLASS) -> ConicModel:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 6:
        raise Degenerate("need at least six (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    if np.linalg.matrix_rank(np.column_stack([x, y, np.ones_like(x)])) < 3:
        raise Degenerate("points are collinear")
    _, s, vt = np.linalg.svd(_design(x, y), full_matrices=False)
    # a second (near-)null direction means the conic is not determined by the data
    if s[-2] <= 1e-10 * s[0]:
        raise Degenerate("points do not determine a unique conic")
    return ConicModel.from_coefficients(vt[-1], eps_class)


def fit_focal_conic(points: Sequence[Sequence[float]], focus: Sequence[float] = (0.0, 0.0),
                    eps_class: float = EPS_CLASS) -> ConicModel:
    """Least-squares conic with one focus fixed (an orbit about a known centre of attraction).

    In polar form about the focus ``r = p - e (x cos w + y sin w)``, which is
    linear in (p, e cos w, e sin w). Three parameters instead of five make
    the fit far better conditioned on short arcs.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise Degenerate("need at least three (x, y) points")
    x, y = pts[:, 0] - focus[0], pts[:, 1] - focus[1]
    r = np.hypot(x, y)
    design = np.column_stack([np.ones_like(x), -x, -y])
    if np.linalg.matrix_rank(design) < 3:
        raise Degenerate("points do not determine a focal conic")
    (p, ca, sa), *_ = np.linalg.lstsq(design, r, rcond=None)
    # x^2 + y^2 = (p - ca x - sa y)^2, then shift back from the focus
    a, b, c = 1 - ca**2, -2 * ca * sa, 1 - sa**2
    d, e, f = 2 * p * ca, 2 * p * sa, -p**2
    fx, fy = focus
    coef = np.array([
        a, b, c,
        d - 2 * a * fx - b * fy,
        e - 2 * c * fy - b * fx,
        f + a * fx**2 + b * fx * fy + c * fy**2 - d * fx - e * fy,
    ])
    return ConicModel.from_coefficients(coef / np.linalg.norm(coef), eps_class)


def conic_flag(model: ConicModel, point: Sequence[float], tol: float) -> bool:
    """True when the point's algebraic residual exceeds ``tol`` (the model fails)."""
    return model.residual(point[0], point[1]) > tol
