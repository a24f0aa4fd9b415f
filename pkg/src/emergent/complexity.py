"""Relative complexity of activation records, redundancy elimination, Kd profiles.

A description of a run of frames is a selection of atoms (see ``codec``).
Choosing a higher-level activation lets the description omit every
lower-level activation it implies; mismatched slots of tolerant detectors
stay in the description as residual corrections.
"""

from __future__ import annotations

import itertools
import sys
from collections import defaultdict
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import codec
from .codec import ACTIVATION, CORRECTION, LITERAL, PARAMETER, DescriptionAtom, gamma_length
from .errors import DiameterTooLarge, TooLarge, TooShort
from .hierarchy import ActivationState, Hierarchy, SystemTrace

STATE_ONLY = "state-only"
WITH_DEVICE_COST = "with-device-cost"
ORACLE_LIMIT = 12


@dataclass(frozen=True)
class ComplexityReport:
    frames: tuple[int, ...]
    per_frame_bits: tuple[int, ...]
    device_bits: int
    total_bits: int
    accounting_mode: str
    selection: tuple[DescriptionAtom, ...]


# ------------------------------------------------------------------ problem

def _dependents(h: Hierarchy, ids: Iterable[int]) -> set[int]:
    out = set(ids)
    for d in sorted(h.detectors, key=lambda d: d.level):
        if d.level > 1 and out.intersection(d.inputs):
            out.add(d.id)
    return out


def _without(h: Hierarchy, states: Sequence[ActivationState],
             exclude: Iterable[int]) -> tuple[Hierarchy, list[ActivationState]]:
    """The record as seen without the excluded detectors (and anything built on them).

    Excluded detectors keep their registration index, so no atom length
    changes, but are marked as never available so decoding cannot derive them.
    """
    drop = _dependents(h, exclude)
    if not drop:
        return h, list(states)
    masked = replace(h, detectors=tuple(replace(d, since=sys.maxsize) if d.id in drop else d
                                        for d in h.detectors))
    out = []
    for s in states:
        active = frozenset(s.active - drop)
        explained = {x for d in active if h.detector(d).level == 1 for x in h.detector(d).inputs}
        residual = {x: v for x, v in s.readings.items() if x not in explained}
        out.append(replace(s, active=active, residual_readings=residual))
    return masked, out


class _Problem:
    """Active instances of one run of frames and the implications between them."""

    def __init__(self, h: Hierarchy, states: Sequence[ActivationState], param_bits: int):
        self.h = h
        self.states = list(states)
        self.param_bits = param_bits
        self.frames = [s.frame for s in self.states]
        frameset = set(self.frames)
        by_frame = {s.frame: s for s in self.states}

        self.inst: list[tuple[int, int]] = []
        for s in self.states:
            for d in sorted(s.active, key=lambda d: (h.detector(d).level, d)):
                self.inst.append((d, s.frame))
        self.index = {x: k for k, x in enumerate(self.inst)}
        self.level = [h.detector(d).level for d, _ in self.inst]
        self.l1 = [k for k, lv in enumerate(self.level) if lv == 1]
        self.upper = [k for k, lv in enumerate(self.level) if lv > 1]

        self.lits: list[DescriptionAtom] = []
        self.lit_at: dict[tuple[int, int], int] = {}
        for s in self.states:
            for sensor in sorted(s.residual_readings):
                self.lit_at[(sensor, s.frame)] = len(self.lits)
                self.lits.append(DescriptionAtom(s.frame, LITERAL, sensor=sensor,
                                                 value=s.residual_readings[sensor]))

        self.singles_at: dict[tuple[int, int], list[int]] = defaultdict(list)
        for k in self.l1:
            d, t = self.inst[k]
            det = h.detector(d)
            if det.window == 1 and len(det.inputs) == 1:
                self.singles_at[(det.inputs[0], t)].append(k)

        self.children: dict[int, list[int]] = {}
        self.companions: dict[int, tuple[DescriptionAtom, ...]] = {}
        self.supplies: dict[int, list[tuple[int, int]]] = {}
        for k, (d, t) in enumerate(self.inst):
            det = h.detector(d)
            comps: list[DescriptionAtom] = []
            kids: list[int] = []
            sup: list[tuple[int, int]] = []
            if det.level == 1:
                for j in range(det.rule.n_params):
                    comps.append(DescriptionAtom(t, PARAMETER, detector=d, position=j + 1))
            else:
                for pos, (child, lag) in enumerate(det.rule.slots(), start=1):
                    tc = t - lag
                    if tc not in frameset:
                        continue
                    if (child, tc) in self.index:
                        kids.append(self.index[(child, tc)])
                    elif det.rule.tolerance:
                        sensor = h.detector(child).inputs[0]
                        comps.append(DescriptionAtom(t, CORRECTION, detector=d, sensor=sensor,
                                                     position=pos, value=by_frame[tc].readings.get(sensor)))
                        sup.append((sensor, tc))
            self.children[k] = kids
            self.companions[k] = tuple(comps)
            self.supplies[k] = sup

    # ------------------------------------------------------------------
    @cached_property
    def closure(self) -> list[frozenset[int]]:
        memo: dict[int, frozenset[int]] = {}

        def walk(k):
            if k not in memo:
                memo[k] = frozenset([k]).union(*(walk(c) for c in self.children[k]))
            return memo[k]

        return [walk(k) for k in range(len(self.inst))]

    def closure_companions(self, k: int) -> frozenset[DescriptionAtom]:
        return frozenset(a for j in self.closure[k] for a in self.companions[j])

    def closure_supplies(self, k: int) -> set[tuple[int, int]]:
        return {sf for j in self.closure[k] for sf in self.supplies[j]}

    def atom_bits(self, a: DescriptionAtom) -> int:
        return codec.atom_length(a, self.h, self.param_bits)

    def complete(self, chosen: Iterable[int]) -> list[DescriptionAtom]:
        """Cheapest lossless atom set that contains the chosen upper activations."""
        chosen = sorted(set(chosen))
        covered: set[int] = set()
        comps: set[DescriptionAtom] = set()
        supplied: set[tuple[int, int]] = set()
        for k in chosen:
            covered |= self.closure[k]
        for k in covered:
            comps.update(self.companions[k])
            supplied.update(self.supplies[k])
        recomputed = {j for sf in supplied for j in self.singles_at.get(sf, ())}
        atoms = [DescriptionAtom(self.inst[k][1], ACTIVATION, detector=self.inst[k][0]) for k in chosen]
        for k in self.l1:
            if k not in covered and k not in recomputed:
                d, t = self.inst[k]
                atoms.append(DescriptionAtom(t, ACTIVATION, detector=d))
                comps.update(self.companions[k])
        atoms.extend(comps)
        atoms.extend(a for a in self.lits if (a.sensor, a.frame) not in supplied)
        return sorted(atoms)

    def bits(self, atoms: Sequence[DescriptionAtom]) -> int:
        counts: dict[int, int] = defaultdict(int)
        total = 0
        for a in atoms:
            counts[a.frame] += 1
            total += self.atom_bits(a)
        return total + sum(gamma_length(counts.get(t, 0) + 1) for t in self.frames)


# ------------------------------------------------------------------ reduction

Key = tuple[tuple[int, int], ...]  # sorted (frame, atom count) pairs


def _add_keys(a: Key, b: Key) -> Key:
    if not a:
        return b
    if not b:
        return a
    acc = dict(a)
    for f, c in b:
        acc[f] = acc.get(f, 0) + c
    return tuple(sorted(acc.items()))


def _convolve(x: dict, y: dict) -> dict:
    out: dict = {}
    for (k1, (b1, c1)), (k2, (b2, c2)) in itertools.product(x.items(), y.items()):
        key = _add_keys(k1, k2)
        cand = (b1 + b2, c1 | c2)
        if key not in out or cand[0] < out[key][0]:
            out[key] = cand
    return out


def _select(p: _Problem) -> frozenset[int]:
    """Choose upper activations by optimal cover over an ownership forest.

    Each lower instance is owned by the first (highest, earliest) active
    instance that implies it. Per node, the table maps per-frame atom counts
    to the cheapest atom bits either by taking the node's own activation or
    by describing what it owns. Single-frame subtrees are combined exactly,
    count codes included; subtrees spanning several frames are settled by
    coordinate descent. On single-parent hierarchies within one frame the
    result is a true minimum.
    """
    owner: dict[tuple[str, int], int] = {}
    owned: dict[int, list[tuple[str, int]]] = defaultdict(list)
    for k in sorted(p.upper, key=lambda k: (-p.level[k], p.inst[k][1], p.inst[k][0])):
        items = [("i", c) for c in p.children[k]]
        for sf in p.supplies[k]:
            items += [("i", j) for j in p.singles_at.get(sf, ())]
            if sf in p.lit_at:
                items.append(("l", p.lit_at[sf]))
        for it in items:
            if it not in owner:
                owner[it] = k
                owned[k].append(it)

    def count_key(atoms: Iterable[DescriptionAtom]) -> Key:
        acc: dict[int, int] = defaultdict(int)
        for a in atoms:
            acc[a.frame] += 1
        return tuple(sorted(acc.items()))

    tables: dict[tuple[str, int], dict] = {}

    def table(node: tuple[str, int]) -> dict:
        if node in tables:
            return tables[node]
        kind, k = node
        if kind == "l":
            a = p.lits[k]
            t = {((a.frame, 1),): (p.atom_bits(a), frozenset())}
        elif p.level[k] == 1:
            d, f = p.inst[k]
            atoms = [DescriptionAtom(f, ACTIVATION, detector=d), *p.companions[k]]
            t = {count_key(atoms): (sum(p.atom_bits(a) for a in atoms), frozenset())}
        else:
            d, f = p.inst[k]
            t = {(): (0, frozenset())}
            for child in owned[k]:
                t = _convolve(t, table(child))
            atoms = [DescriptionAtom(f, ACTIVATION, detector=d), *p.closure_companions(k)]
            key = count_key(atoms)
            bits = sum(p.atom_bits(a) for a in atoms)
            if key not in t or bits < t[key][0]:
                t[key] = (bits, frozenset([k]))
        tables[node] = t
        return t

    roots = [("l", j) for j in range(len(p.lits)) if ("l", j) not in owner]
    roots += [("i", k) for k in range(len(p.inst)) if ("i", k) not in owner]

    single: dict[int, dict[int, tuple[int, frozenset]]] = {f: {0: (0, frozenset())} for f in p.frames}
    multi: list[list[tuple[Key, int, frozenset]]] = []
    for r in roots:
        t = table(r)
        frames = {f for key in t for f, _ in key}
        if len(frames) <= 1:
            if not frames:
                continue
            (f,) = frames
            scalar = {(key[0][1] if key else 0): v for key, v in t.items()}
            acc: dict[int, tuple[int, frozenset]] = {}
            for (m1, (b1, c1)), (m2, (b2, c2)) in itertools.product(single[f].items(), scalar.items()):
                if m1 + m2 not in acc or b1 + b2 < acc[m1 + m2][0]:
                    acc[m1 + m2] = (b1 + b2, c1 | c2)
            single[f] = acc
        else:
            opts = sorted(((key, b, c) for key, (b, c) in t.items()),
                          key=lambda o: (o[1], len(o[2]), sum(n for _, n in o[0])))
            multi.append(opts)

    def frame_cost(f: int, offset: int) -> tuple[int, frozenset]:
        best = None
        for m, (b, c) in single[f].items():
            cand = (gamma_length(offset + m + 1) + b, c)
            if best is None or cand[0] < best[0]:
                best = cand
        return best

    pick = [0] * len(multi)
    cur: dict[int, int] = defaultdict(int)
    for opts in multi:
        for f, n in opts[0][0]:
            cur[f] += n
    for _ in range(20):
        changed = False
        for r, opts in enumerate(multi):
            old_key = opts[pick[r]][0]
            touched = {f for f, _ in old_key} | {f for key, _, _ in opts for f, _ in key}
            for f, n in old_key:
                cur[f] -= n

            def score(o):
                extra = dict(o[0])
                return o[1] + sum(frame_cost(f, cur[f] + extra.get(f, 0))[0] for f in touched)

            scores = [score(o) for o in opts]
            best = min(range(len(opts)), key=lambda j: (scores[j], j))
            if scores[best] < scores[pick[r]]:
                pick[r] = best
                changed = True
            for f, n in opts[pick[r]][0]:
                cur[f] += n
        if not changed:
            break

    chosen: set[int] = set()
    for r, opts in enumerate(multi):
        chosen |= opts[pick[r]][2]
    for f in p.frames:
        chosen |= frame_cost(f, cur[f])[1]
    return frozenset(chosen)


def _refine(p: _Problem, chosen: frozenset[int], passes: int = 4) -> frozenset[int]:
    """Single toggles of higher activations, kept only when the exact total drops.

    Recovers cheaper covers that the ownership forest misses when lower
    instances are shared between several parents.
    """
    best = p.bits(p.complete(chosen))
    for _ in range(passes):
        improved = False
        for k in sorted(p.upper, key=lambda k: (-p.level[k], p.inst[k][1], p.inst[k][0])):
            cand = chosen ^ {k}
            bits = p.bits(p.complete(cand))
            if bits < best:
                chosen, best, improved = cand, bits, True
        if not improved:
            break
    return chosen


def _states(x) -> list[ActivationState]:
    if isinstance(x, ActivationState):
        return [x]
    return list(x)


def reduce_redundant(h: Hierarchy, s: ActivationState | SystemTrace | Sequence[ActivationState],
                     param_bits: int = codec.DEFAULT_PARAM_BITS) -> list[DescriptionAtom]:
    """Lossless atom selection for one state or a run of consecutive states."""
    p = _Problem(h, _states(s), param_bits)
    return p.complete(_refine(p, _select(p)))


def all_active_selection(h: Hierarchy, s, param_bits: int = codec.DEFAULT_PARAM_BITS) -> list[DescriptionAtom]:
    """The unreduced description: every level-1 activation plus residual literals."""
    p = _Problem(h, _states(s), param_bits)
    return p.complete(())


def minimal_description_oracle(h: Hierarchy, s, param_bits: int = codec.DEFAULT_PARAM_BITS,
                               limit: int = ORACLE_LIMIT) -> list[DescriptionAtom]:
    """Exhaustive search over every set of higher-level activations.

    Given the chosen higher activations, the rest of a minimal lossless
    description is forced (uncovered level-1 activations, unsupplied
    literals, required corrections and parameters), so enumerating those
    sets covers every non-dominated selection.
    """
    p = _Problem(h, _states(s), param_bits)
    if len(p.inst) > limit:
        raise TooLarge(f"{len(p.inst)} active detectors exceed the oracle limit of {limit}")
    best = None
    for r in range(len(p.upper) + 1):
        for combo in itertools.combinations(p.upper, r):
            atoms = p.complete(combo)
            cand = (p.bits(atoms), r)
            if best is None or cand < best[0]:
                best = (cand, atoms)
    return best[1]


def selection_bits(h: Hierarchy, s, atoms: Sequence[DescriptionAtom],
                   param_bits: int = codec.DEFAULT_PARAM_BITS) -> int:
    return codec.encode_state(_states(s), atoms, h, param_bits).total_bits


# ------------------------------------------------------------------ relative complexity

def relative_complexity(trace: SystemTrace | Sequence[ActivationState], h: Hierarchy,
                        mode: str = STATE_ONLY, param_bits: int = codec.DEFAULT_PARAM_BITS,
                        exclude: Iterable[int] = ()) -> ComplexityReport:
    if mode not in (STATE_ONLY, WITH_DEVICE_COST):
        raise ValueError(f"unknown accounting mode {mode!r}")
    h, states = _without(h, _states(trace), exclude)
    if not states:
        return ComplexityReport((), (), 0, 0, mode, ())
    atoms = reduce_redundant(h, states, param_bits)
    desc = codec.encode_state(states, atoms, h, param_bits)
    device = 0
    if mode == WITH_DEVICE_COST:
        used = sorted({a.detector for a in atoms if a.kind == ACTIVATION})
        device = sum(h.detector(d).device_cost_bits for d in used)
    return ComplexityReport(
        frames=tuple(f for f, _ in desc.frames),
        per_frame_bits=desc.per_frame_bits,
        device_bits=device,
        total_bits=desc.total_bits + device,
        accounting_mode=mode,
        selection=tuple(atoms),
    )


def window_bits(trace: SystemTrace, h: Hierarchy, first: int, last: int, mode: str = STATE_ONLY,
                param_bits: int = codec.DEFAULT_PARAM_BITS, exclude: Iterable[int] = ()) -> int:
    """Complexity of the frames ``first..last`` described on their own."""
    return relative_complexity(trace.segment(first, last), h, mode, param_bits, exclude).total_bits


# ------------------------------------------------------------------ Kd profiles

@dataclass(frozen=True)
class KdProfile:
    entries: tuple[tuple[int, int], ...]

    @property
    def diameters(self) -> tuple[int, ...]:
        return tuple(d for d, _ in self.entries)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(b for _, b in self.entries)


def coarse_grain(lattice, d: int) -> np.ndarray:
    """Majority vote over d x d blocks; ties go to 0 and ragged edges are dropped."""
    arr = (np.asarray(lattice) != 0).astype(np.int64)
    rows, cols = arr.shape[0] // d, arr.shape[1] // d
    blocks = arr[: rows * d, : cols * d].reshape(rows, d, cols, d).sum(axis=(1, 3))
    return (2 * blocks > d * d).astype(np.uint8)


def kd_profile(lattice, diameters: Sequence[int]) -> KdProfile:
    arr = np.asarray(lattice)
    if arr.ndim != 2 or arr.size == 0:
        raise codec.EmptyLattice("lattice must be a non-empty 2-D grid")
    ds = sorted(set(int(d) for d in diameters))
    for d in ds:
        if d < 1:
            raise DiameterTooLarge(f"diameter {d} must be >= 1")
        if d > min(arr.shape):
            raise DiameterTooLarge(f"diameter {d} exceeds grid size {arr.shape}")
    return KdProfile(tuple((d, codec.encode_lattice_rle(coarse_grain(arr, d))) for d in ds))


def kd_shift(profile: KdProfile) -> int:
    """Diameter at which the largest drop in bits happens (smallest on ties)."""
    e = profile.entries
    if len(e) < 2:
        raise TooShort("a Kd profile needs at least two diameters")
    drops = [(e[i - 1][1] - e[i][1], -e[i][0]) for i in range(1, len(e))]
    best = max(range(len(drops)), key=lambda i: drops[i])
    return e[best + 1][0]
