"""Canonical description tools: exact code lengths for activation records.

Integers (detector indices, counts, positions, run lengths) use the Elias
gamma code. Detector ids are coded by registration index, so an atom's length
never depends on how many detectors exist; registering a detector that stays
silent therefore changes no description length.
"""

from __future__ import annotations

import math
import zlib
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyLattice, LossySelection, NonPositive, UnknownId, UnknownInput
from .hierarchy import ActivationState, Hierarchy, SystemTrace, reevaluate_upper

ACTIVATION = "detector-activation"
LITERAL = "literal-symbol"
CORRECTION = "residual-correction"
PARAMETER = "model-parameter"

DEFAULT_PARAM_BITS = 16


# ------------------------------------------------------------------ integers

def gamma_length(n: int) -> int:
    if n < 1:
        raise NonPositive(f"gamma code needs a positive integer, got {n}")
    return 2 * (int(n).bit_length() - 1) + 1


def gamma_encode(n: int) -> str:
    if n < 1:
        raise NonPositive(f"gamma code needs a positive integer, got {n}")
    b = bin(n)[2:]
    return "0" * (len(b) - 1) + b


def gamma_decode(bits: str, pos: int = 0) -> tuple[int, int]:
    """Decode one gamma codeword starting at ``pos``; returns (value, next position)."""
    zeros = 0
    while bits[pos + zeros] == "0":
        zeros += 1
    end = pos + 2 * zeros + 1
    if end > len(bits):
        raise ValueError("truncated gamma codeword")
    return int(bits[pos + zeros:end], 2), end


# ------------------------------------------------------------------ atoms

@dataclass(frozen=True, order=True)
class DescriptionAtom:
    frame: int
    kind: str
    detector: int = 0      # activation / correction owner / parameter owner
    sensor: int = 0        # literal / correction
    position: int = 0      # correction slot (1-based) or parameter index
    value: Any = None


def literal_length(h: Hierarchy, sensor: int) -> int:
    s = h.sensor(sensor)
    if s.discrete:
        return math.ceil(math.log2(len(s.alphabet))) if len(s.alphabet) > 1 else 0
    return s.precision_bits


def atom_length(a: DescriptionAtom, h: Hierarchy, param_bits: int = DEFAULT_PARAM_BITS) -> int:
    try:
        if a.kind == ACTIVATION:
            h.detector(a.detector)
            return gamma_length(a.detector)
        if a.kind == LITERAL:
            return literal_length(h, a.sensor)
        if a.kind == CORRECTION:
            return gamma_length(a.position) + literal_length(h, a.sensor)
        if a.kind == PARAMETER:
            return param_bits
    except UnknownInput as exc:
        raise UnknownId(str(exc)) from exc
    raise ValueError(f"unknown atom kind {a.kind!r}")


@dataclass(frozen=True)
class Description:
    frames: tuple[tuple[int, tuple[DescriptionAtom, ...]], ...]
    per_frame_bits: tuple[int, ...]
    total_bits: int

    @property
    def atoms(self) -> list[DescriptionAtom]:
        return [a for _, atoms in self.frames for a in atoms]


def frame_bits(atoms: Sequence[DescriptionAtom], h: Hierarchy, param_bits: int = DEFAULT_PARAM_BITS) -> int:
    return gamma_length(len(atoms) + 1) + sum(atom_length(a, h, param_bits) for a in atoms)


# ------------------------------------------------------------------ decoding

@dataclass(frozen=True)
class DecodedRecord:
    level1: dict[int, frozenset[int]]
    upper: dict[int, frozenset[int]]
    residual: dict[int, dict[int, Any]]


def _reach(h: Hierarchy, did: int, memo: dict[int, int]) -> int:
    if did not in memo:
        d = h.detector(did)
        below = 0 if d.level == 1 else max(_reach(h, i, memo) for i in d.inputs)
        memo[did] = d.window - 1 + below
    return memo[did]


def decode(atoms: Iterable[DescriptionAtom], h: Hierarchy, frames: Sequence[int]) -> DecodedRecord:
    """Rebuild the activation record of ``frames`` from a selection of atoms.

    Activations expand through the slots their rule implies, skipping
    corrected slots; literal and correction values restore sensor readings,
    from which single-frame level-1 detectors are recomputed. Levels >= 2
    are then re-derived from level-1 activity.
    """
    frameset = set(frames)
    atoms = list(atoms)
    corrections: dict[tuple[int, int], dict[int, DescriptionAtom]] = defaultdict(dict)
    supplied: dict[tuple[int, int], Any] = {}
    for a in atoms:
        if a.kind == CORRECTION:
            corrections[(a.detector, a.frame)][a.position] = a
            supplied[(a.sensor, a.frame - _slot_lag(h, a))] = a.value
        elif a.kind == LITERAL:
            supplied[(a.sensor, a.frame)] = a.value

    level1: dict[int, set[int]] = defaultdict(set)
    seen: set[tuple[int, int]] = set()

    def expand(did: int, t: int):
        if (did, t) in seen or t not in frameset:
            return
        seen.add((did, t))
        d = h.detector(did)
        if d.level == 1:
            level1[t].add(did)
            return
        fixed = corrections.get((did, t), {})
        for pos, (child, lag) in enumerate(d.rule.slots(), start=1):
            if pos not in fixed:
                expand(child, t - lag)

    for a in atoms:
        if a.kind == ACTIVATION:
            expand(a.detector, a.frame)

    singles = [d for d in h.detectors if d.level == 1 and d.window == 1 and len(d.inputs) == 1]
    for (s, t), value in supplied.items():
        if t not in frameset:
            continue
        ctx = _OneReading(s, t, value)
        for d in singles:
            if d.inputs[0] == s and d.since <= t and d.rule.evaluate(ctx, t):
                level1[t].add(d.id)

    residual: dict[int, dict[int, Any]] = defaultdict(dict)
    for (s, t), value in supplied.items():
        if t not in frameset:
            continue
        if not any(s in h.detector(d).inputs for d in level1.get(t, ())):
            residual[t][s] = value

    ordered = sorted(frameset)
    upper_all = reevaluate_upper(h, level1, ordered)
    memo: dict[int, int] = {}
    first = ordered[0] if ordered else 0
    upper = {}
    for t in ordered:
        upper[t] = frozenset(
            d for d in upper_all[t]
            if h.detector(d).level >= 2 and t - _reach(h, d, memo) >= first)
    return DecodedRecord(
        {t: frozenset(level1.get(t, ())) for t in ordered},
        upper,
        {t: dict(residual.get(t, {})) for t in ordered},
    )


def _slot_lag(h: Hierarchy, a: DescriptionAtom) -> int:
    return h.detector(a.detector).rule.slots()[a.position - 1][1]


class _OneReading:
    def __init__(self, s, t, v):
        self.s, self.t, self.v = s, t, v

    def reading(self, sensor, frame):
        return self.v if (sensor, frame) == (self.s, self.t) else None

    def is_active(self, detector, frame):
        return False


def check_lossless(states: Sequence[ActivationState], atoms: Iterable[DescriptionAtom], h: Hierarchy) -> bool:
    frames = [s.frame for s in states]
    rec = decode(atoms, h, frames)
    memo: dict[int, int] = {}
    first = frames[0] if frames else 0
    for s in states:
        l1 = frozenset(d for d in s.active if h.detector(d).level == 1)
        if rec.level1[s.frame] != l1:
            return False
        up = frozenset(d for d in s.active
                       if h.detector(d).level >= 2 and s.frame - _reach(h, d, memo) >= first)
        if rec.upper[s.frame] != up:
            return False
        if rec.residual[s.frame] != dict(s.residual_readings):
            return False
    return True


def _as_states(x) -> list[ActivationState]:
    if isinstance(x, ActivationState):
        return [x]
    return list(x)


def encode_state(s: ActivationState | SystemTrace | Sequence[ActivationState],
                 selection: Iterable[DescriptionAtom], h: Hierarchy,
                 param_bits: int = DEFAULT_PARAM_BITS) -> Description:
    """Length of the description of ``s`` by ``selection``; raises LossySelection if it does not decode back."""
    states = _as_states(s)
    atoms = sorted(selection)
    if not check_lossless(states, atoms, h):
        raise LossySelection("selection does not reconstruct the activation record")
    by_frame: dict[int, list[DescriptionAtom]] = defaultdict(list)
    for a in atoms:
        by_frame[a.frame].append(a)
    frames, bits = [], []
    for st in states:
        fa = tuple(by_frame.get(st.frame, ()))
        frames.append((st.frame, fa))
        bits.append(frame_bits(fa, h, param_bits))
    return Description(tuple(frames), tuple(bits), sum(bits))


# ------------------------------------------------------------------ lattices

def _check_lattice(lattice) -> np.ndarray:
    arr = np.asarray(lattice)
    if arr.ndim != 2 or arr.size == 0:
        raise EmptyLattice("lattice must be a non-empty 2-D grid")
    return (arr != 0).astype(np.uint8)


def _serpentine(arr: np.ndarray) -> np.ndarray:
    out = arr.copy()
    out[1::2] = out[1::2, ::-1]
    return out.ravel()


def _unserpentine(flat: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    out = flat.reshape(shape).copy()
    out[1::2] = out[1::2, ::-1]
    return out


def lattice_runs(lattice) -> tuple[int, list[int]]:
    """Initial value and run lengths along a boustrophedon raster scan.

    Odd rows are read right to left so that consecutive cells in the scan are
    always spatial neighbours.
    """
    flat = _serpentine(_check_lattice(lattice))
    change = np.flatnonzero(np.diff(flat)) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    return int(flat[0]), [int(r) for r in np.diff(bounds)]


def encode_lattice_rle(lattice) -> int:
    """1 bit for the first cell plus gamma-coded run lengths of the scan."""
    _, runs = lattice_runs(lattice)
    return 1 + sum(gamma_length(r) for r in runs)


def lattice_to_bits(lattice) -> str:
    first, runs = lattice_runs(lattice)
    return str(first) + "".join(gamma_encode(r) for r in runs)


def lattice_from_bits(bits: str, shape: tuple[int, int]) -> np.ndarray:
    value, pos = int(bits[0]), 1
    cells: list[int] = []
    total = shape[0] * shape[1]
    while len(cells) < total:
        run, pos = gamma_decode(bits, pos)
        cells.extend([value] * run)
        value ^= 1
    if len(cells) != total or pos != len(bits):
        raise ValueError("bit string does not match the lattice shape")
    return _unserpentine(np.array(cells, dtype=np.uint8), shape)


# ------------------------------------------------------------------ approximate

def compressed_bits(data: bytes, level: int = 9) -> int:
    """zlib-compressed size in bits; an approximate, compressor-backed complexity estimate."""
    return 8 * len(zlib.compress(data, level))
