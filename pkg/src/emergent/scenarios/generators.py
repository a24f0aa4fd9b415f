"""Seeded synthetic data for the shipped scenarios, plus flat-file readers."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..errors import BadAlphabet, BadConic
from .config import (ConicSpec, LatticeConfig, PatchesConfig, PeriodicConfig, PointsConfig,
                     SymbolsConfig, TrajectoryConfig)


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


# ------------------------------------------------------------------ symbols

def gen_symbol_stream(cfg: SymbolsConfig, seed: int = 0) -> list[str]:
    """``prefix`` followed by the concatenated tokens ``repeat`` times.

    With noise rate rho each symbol is independently replaced, with
    probability rho, by a different symbol drawn uniformly from the alphabet.
    """
    alphabet = list(cfg.alphabet)
    if not alphabet or len(set(alphabet)) != len(alphabet):
        raise BadAlphabet("alphabet must be non-empty with distinct symbols")
    if not cfg.tokens or any(not t for t in cfg.tokens):
        raise BadAlphabet("token list must be non-empty and contain no empty token")
    stream = list(cfg.prefix) + list("".join(cfg.tokens)) * cfg.repeat
    bad = sorted(set(stream) - set(alphabet))
    if bad:
        raise BadAlphabet(f"symbols {bad} are not in the alphabet")
    if cfg.noise > 0:
        if len(alphabet) < 2:
            raise BadAlphabet("substitution noise needs at least two symbols")
        rng = _rng(seed)
        hit = rng.random(len(stream)) < cfg.noise
        picks = rng.integers(0, len(alphabet) - 1, size=len(stream))
        for i in np.flatnonzero(hit):
            others = [a for a in alphabet if a != stream[i]]
            stream[i] = others[picks[i]]
    return stream


# ------------------------------------------------------------------ trajectories

def _conic_path(spec: ConicSpec, s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Points and derivatives along a conic for curve parameter ``s``."""
    cx, cy = spec.center
    if spec.type == "circle":
        if spec.radius is None or spec.radius <= 0:
            raise BadConic("circle needs a positive radius")
        a = b = spec.radius
    if spec.type in ("ellipse", "hyperbola"):
        if spec.a is None or spec.b is None or spec.a <= 0 or spec.b <= 0:
            raise BadConic(f"{spec.type} needs positive a and b")
        a, b = spec.a, spec.b
    if spec.type in ("circle", "ellipse"):
        return (cx + a * np.cos(s), cy + b * np.sin(s), -a * np.sin(s), b * np.cos(s))
    if spec.type == "hyperbola":
        return (cx + a * np.cosh(s), cy + b * np.sinh(s), a * np.sinh(s), b * np.cosh(s))
    if spec.k is None or spec.k == 0:
        raise BadConic("parabola needs a non-zero k")
    # y = k x^2 around the vertex
    return (cx + s, cy + spec.k * s**2, np.ones_like(s), 2 * spec.k * s)


def gen_trajectory(cfg: TrajectoryConfig, seed: int = 0) -> dict[str, np.ndarray]:
    """(x, y) samples on ``pre`` until the switch frame, then on ``post``.

    Velocities are per-frame displacements along the true curve. Gaussian
    noise of standard deviation ``noise`` is added to every channel.
    """
    frames = np.arange(cfg.frames)
    pre = frames < cfg.switch
    post_spec = cfg.post or cfg.pre
    s_pre = (cfg.pre.start or 0.0) + cfg.step * frames
    post_step = cfg.post_step or cfg.step
    s_post = (post_spec.start or 0.0) + post_step * np.maximum(frames - cfg.switch, 0)
    x0, y0, vx0, vy0 = _conic_path(cfg.pre, s_pre)
    x1, y1, vx1, vy1 = _conic_path(post_spec, s_post)
    out = {
        "x": np.where(pre, x0, x1),
        "y": np.where(pre, y0, y1),
        "vx": np.where(pre, cfg.step * vx0, post_step * vx1),
        "vy": np.where(pre, cfg.step * vy0, post_step * vy1),
    }
    if cfg.noise > 0:
        rng = _rng(seed)
        for key in ("x", "y", "vx", "vy"):
            out[key] = out[key] + rng.normal(0.0, cfg.noise, cfg.frames)
    return out


def gen_periodic(cfg: PeriodicConfig, seed: int = 0) -> np.ndarray:
    """Sum of sinusoids; the extra components switch on at ``switch``."""
    if len(cfg.periods) != len(cfg.amplitudes) or len(cfg.extra_periods) != len(cfg.extra_amplitudes):
        raise ValueError("each period needs an amplitude")
    t = np.arange(cfg.frames, dtype=float)
    x = np.zeros_like(t)
    for p, a in zip(cfg.periods, cfg.amplitudes):
        x += a * np.sin(2 * np.pi * t / p)
    phases = list(cfg.extra_phases) + [0.0] * (len(cfg.extra_periods) - len(cfg.extra_phases))
    for p, a, ph in zip(cfg.extra_periods, cfg.extra_amplitudes, phases):
        x += np.where(t >= cfg.switch, a * np.sin(2 * np.pi * t / p + ph), 0.0)
    if cfg.noise > 0:
        x = x + _rng(seed).normal(0.0, cfg.noise, cfg.frames)
    return x


# ------------------------------------------------------------------ static data

def gen_stripes(cfg: LatticeConfig, seed: int = 0) -> np.ndarray:
    """Vertical stripes of width ``stripe`` with independent cell flips."""
    cols = (np.arange(cfg.width) // cfg.stripe) % 2
    grid = np.tile(cols, (cfg.height, 1)).astype(np.uint8)
    if cfg.flip > 0:
        grid ^= (_rng(seed).random(grid.shape) < cfg.flip).astype(np.uint8)
    return grid


def gen_patches(cfg: PatchesConfig, seed: int = 0) -> np.ndarray:
    """(area, perimeter) rows following a continuous two-slope perimeter-area law.

    Areas are log-uniform; log perimeter has slope ``exponents[0]`` below the
    breakpoint and ``exponents[1]`` above, with multiplicative log-normal
    noise.
    """
    rng = _rng(seed)
    lo, hi = cfg.area_range
    if not 0 < lo < hi:
        raise ValueError("area range must be increasing and positive")
    area = np.exp(rng.uniform(np.log(lo), np.log(hi), cfg.n))
    e1, e2 = cfg.exponents
    bp = cfg.breakpoint
    perim = np.where(area < bp, cfg.k * area**e1, cfg.k * bp**e1 * (area / bp) ** e2)
    perim = perim * np.exp(rng.normal(0.0, cfg.noise, cfg.n))
    return np.column_stack([area, perim])


def gen_points(cfg: PointsConfig, seed: int = 0) -> np.ndarray:
    """Complete spatial randomness, inhibited clusters, or a jittered grid."""
    rng = _rng(seed)
    x0, x1, y0, y1 = cfg.window
    if cfg.generator == "csr":
        return np.column_stack([rng.uniform(x0, x1, cfg.n), rng.uniform(y0, y1, cfg.n)])
    if cfg.generator == "grid":
        xs = np.arange(x0 + cfg.spacing / 2, x1, cfg.spacing)
        ys = np.arange(y0 + cfg.spacing / 2, y1, cfg.spacing)
        gx, gy = np.meshgrid(xs, ys)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        return pts + rng.normal(0.0, 0.05 * cfg.spacing, pts.shape)
    # clusters of points that keep a minimum spacing from each other
    margin = cfg.cluster_radius
    centers = np.column_stack([rng.uniform(x0 + margin, x1 - margin, cfg.clusters),
                               rng.uniform(y0 + margin, y1 - margin, cfg.clusters)])
    pts: list[np.ndarray] = []
    tries = 0
    while len(pts) < cfg.n:
        tries += 1
        if tries > 200 * cfg.n:
            raise ValueError("cannot place points with this spacing; lower min_spacing or n")
        c = centers[rng.integers(cfg.clusters)]
        r = cfg.cluster_radius * np.sqrt(rng.random())
        a = rng.uniform(0, 2 * np.pi)
        p = c + r * np.array([np.cos(a), np.sin(a)])
        if pts and np.min(np.hypot(*(np.asarray(pts) - p).T)) < cfg.min_spacing:
            continue
        pts.append(p)
    return np.asarray(pts)


# ------------------------------------------------------------------ readers

def read_xy_csv(path: str | Path) -> np.ndarray:
    """Point set from a CSV with columns ``x,y``."""
    return _read_columns(path, ("x", "y"))


def read_patches_csv(path: str | Path) -> np.ndarray:
    """Patch table from a CSV with columns ``area,perimeter``."""
    return _read_columns(path, ("area", "perimeter"))


def _read_columns(path, names) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [n for n in names if n not in (reader.fieldnames or ())]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        rows = [[float(row[n]) for n in names] for row in reader]
    return np.asarray(rows, dtype=float).reshape(-1, len(names))


def read_lattice(path: str | Path) -> np.ndarray:
    """0/1 grid from a text file, one row per line (whitespace optional)."""
    rows = []
    for line in Path(path).read_text().splitlines():
        cells = line.replace(" ", "").replace(",", "")
        if cells:
            if set(cells) - {"0", "1"}:
                raise ValueError(f"{path}: lattice cells must be 0 or 1")
            rows.append([int(c) for c in cells])
    if not rows or len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: lattice rows must be non-empty and of equal length")
    return np.asarray(rows, dtype=np.uint8)
