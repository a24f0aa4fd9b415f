"""The closed recognition-rule language used by detectors.

Level-1 rules read sensors; higher rules read only the binary activations of
their inputs (possibly over a declared window of past frames). Each rule
serializes to a canonical dict, whose encoded size is the device cost of
the detector carrying it.
"""

from __future__ import annotations

import json
import math
import operator
from dataclasses import dataclass, field
from typing import Any, Callable, ClassVar, Mapping, Protocol

from .errors import DegenerateRule
from .recognizers.automata import DFA, PDA, automaton_from_dict
from .recognizers.conics import ConicModel
from .recognizers.periodic import HarmonicModel


class EvalContext(Protocol):
    def reading(self, sensor: int, frame: int) -> Any: ...

    def is_active(self, detector: int, frame: int) -> bool: ...


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


class Rule:
    type: ClassVar[str]
    reads_sensors: ClassVar[bool] = False
    window: int = 1
    n_params: int = 0

    @property
    def sensors(self) -> tuple[int, ...]:
        return ()

    @property
    def inputs(self) -> tuple[int, ...]:
        return ()

    def slots(self) -> tuple[tuple[int, int], ...]:
        """(input, lag) pairs whose activity an activation of this rule implies."""
        return ()

    tolerance: int = 0

    def evaluate(self, ctx: EvalContext, t: int) -> bool:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


# ---------------------------------------------------------------- level 1

@dataclass(frozen=True)
class SymbolRule(Rule):
    sensor: int
    symbol: str
    type: ClassVar[str] = "symbol"
    reads_sensors: ClassVar[bool] = True

    @property
    def sensors(self):
        return (self.sensor,)

    def evaluate(self, ctx, t):
        return ctx.reading(self.sensor, t) == self.symbol

    def to_dict(self):
        return {"type": self.type, "sensor": self.sensor, "symbol": self.symbol}


_OPS: dict[str, Callable[[float, float], bool]] = {
    ">": operator.gt, ">=": operator.ge, "<": operator.lt, "<=": operator.le,
}


@dataclass(frozen=True)
class ThresholdRule(Rule):
    sensor: int
    op: str
    value: float
    type: ClassVar[str] = "threshold"
    reads_sensors: ClassVar[bool] = True

    def __post_init__(self):
        if self.op not in _OPS:
            raise DegenerateRule(f"unknown comparison {self.op!r}")

    @property
    def sensors(self):
        return (self.sensor,)

    def evaluate(self, ctx, t):
        v = ctx.reading(self.sensor, t)
        return v is not None and _OPS[self.op](float(v), self.value)

    def to_dict(self):
        return {"type": self.type, "sensor": self.sensor, "op": self.op, "value": self.value}


@dataclass(frozen=True)
class AutomatonRule(Rule):
    """Active when the machine accepts the last ``window`` symbols of the sensor."""

    sensor: int
    automaton: DFA | PDA
    window: int
    type: ClassVar[str] = "automaton"
    reads_sensors: ClassVar[bool] = True

    def __post_init__(self):
        if self.window < 1:
            raise DegenerateRule("automaton window must be >= 1")

    @property
    def sensors(self):
        return (self.sensor,)

    def evaluate(self, ctx, t):
        if t - self.window + 1 < 0:
            return False
        word = [ctx.reading(self.sensor, f) for f in range(t - self.window + 1, t + 1)]
        if any(w is None or w not in self.automaton.alphabet for w in word):
            return False
        return self.automaton.accepts(word)

    def to_dict(self):
        return {"type": self.type, "sensor": self.sensor, "window": self.window,
                "automaton": self.automaton.to_dict()}


@dataclass(frozen=True)
class ConicRule(Rule):
    """Model-fit flag: the (x, y) reading lies within geometric distance ``tol`` of the conic.

    With velocity sensors the velocity must also be tangent to the conic
    (|cos| of the angle to the normal at most ``angle_tol``). One model
    parameter (position along the curve) is charged per activation, plus one
    for speed when velocity is modelled.
    """

    x: int
    y: int
    model: ConicModel
    tol: float
    vx: int | None = None
    vy: int | None = None
    angle_tol: float = 0.1
    type: ClassVar[str] = "conic"
    reads_sensors: ClassVar[bool] = True

    def __post_init__(self):
        if (self.vx is None) != (self.vy is None):
            raise DegenerateRule("velocity needs both components")

    @property
    def n_params(self):
        return 1 if self.vx is None else 2

    @property
    def sensors(self):
        return (self.x, self.y) if self.vx is None else (self.x, self.y, self.vx, self.vy)

    def error(self, ctx, t) -> float:
        """Normalized failure score: <= 1 means the model explains the frame."""
        vals = [ctx.reading(s, t) for s in self.sensors]
        if any(v is None for v in vals):
            return math.inf
        err = self.model.distance(vals[0], vals[1]) / self.tol if self.tol > 0 else math.inf
        if self.vx is not None:
            err = max(err, self.model.tangency_error(*vals) / self.angle_tol)
        return float(err)

    def evaluate(self, ctx, t):
        return self.error(ctx, t) <= 1.0

    def to_dict(self):
        d = {"type": self.type, "x": self.x, "y": self.y, "model": self.model.to_dict(), "tol": self.tol}
        if self.vx is not None:
            d.update(vx=self.vx, vy=self.vy, angle_tol=self.angle_tol)
        return d


@dataclass(frozen=True)
class HarmonicRule(Rule):
    """Model-fit flag for a sum of sinusoids evaluated at the frame index."""

    sensor: int
    model: HarmonicModel
    tol: float
    type: ClassVar[str] = "harmonic"
    reads_sensors: ClassVar[bool] = True

    @property
    def sensors(self):
        return (self.sensor,)

    def error(self, ctx, t) -> float:
        v = ctx.reading(self.sensor, t)
        if v is None:
            return math.inf
        if self.tol <= 0:
            return math.inf
        return float(abs(float(v) - self.model.predict(t)) / self.tol)

    def evaluate(self, ctx, t):
        return self.error(ctx, t) <= 1.0

    def to_dict(self):
        return {"type": self.type, "sensor": self.sensor, "model": self.model.to_dict(), "tol": self.tol}


# ---------------------------------------------------------------- level >= 2

@dataclass(frozen=True)
class AllOf(Rule):
    of: tuple[int, ...]
    type: ClassVar[str] = "all"

    def __post_init__(self):
        if len(set(self.of)) != len(self.of):
            raise DegenerateRule("repeated input")

    @property
    def inputs(self):
        return self.of

    def slots(self):
        return tuple((i, 0) for i in self.of)

    def evaluate(self, ctx, t):
        return all(ctx.is_active(i, t) for i in self.of)

    def to_dict(self):
        return {"type": self.type, "of": list(self.of)}


@dataclass(frozen=True)
class AnyOf(Rule):
    """Disjunction; implies nothing about which input fired."""

    of: tuple[int, ...]
    type: ClassVar[str] = "any"

    @property
    def inputs(self):
        return self.of

    def evaluate(self, ctx, t):
        return any(ctx.is_active(i, t) for i in self.of)

    def to_dict(self):
        return {"type": self.type, "of": list(self.of)}


@dataclass(frozen=True)
class SequenceRule(Rule):
    """Windowed match of (input, lag) slots, tolerating up to ``tolerance`` misses.

    Slot positions are 1-based in declaration order; lag 0 is the current
    frame.
    """

    pattern: tuple[tuple[int, int], ...]
    tolerance: int = 0
    type: ClassVar[str] = "sequence"

    def __post_init__(self):
        if any(lag < 0 for _, lag in self.pattern):
            raise DegenerateRule("lags must be non-negative")
        if len(set(self.pattern)) != len(self.pattern):
            raise DegenerateRule("repeated slot")
        if not 0 <= self.tolerance <= len(self.pattern):
            raise DegenerateRule("tolerance must lie in [0, pattern length]")

    @property
    def window(self):
        return max(lag for _, lag in self.pattern) + 1

    @property
    def inputs(self):
        return tuple(dict.fromkeys(i for i, _ in self.pattern))

    def slots(self):
        return self.pattern

    def evaluate(self, ctx, t):
        misses = 0
        for i, lag in self.pattern:
            if t - lag < 0 or not ctx.is_active(i, t - lag):
                misses += 1
        return misses <= self.tolerance

    def to_dict(self):
        return {"type": self.type, "pattern": [list(p) for p in self.pattern], "tolerance": self.tolerance}


RULE_TYPES: dict[str, type[Rule]] = {
    r.type: r for r in (SymbolRule, ThresholdRule, AutomatonRule, ConicRule, HarmonicRule,
                        AllOf, AnyOf, SequenceRule)
}


def rule_from_dict(d: Mapping) -> Rule:
    kind = d.get("type")
    if kind == "symbol":
        return SymbolRule(int(d["sensor"]), str(d["symbol"]))
    if kind == "threshold":
        return ThresholdRule(int(d["sensor"]), d["op"], float(d["value"]))
    if kind == "automaton":
        return AutomatonRule(int(d["sensor"]), automaton_from_dict(d["automaton"]), int(d["window"]))
    if kind == "conic":
        return ConicRule(int(d["x"]), int(d["y"]), ConicModel.from_dict(d["model"]), float(d["tol"]),
                         d.get("vx"), d.get("vy"), float(d.get("angle_tol", 0.1)))
    if kind == "harmonic":
        return HarmonicRule(int(d["sensor"]), HarmonicModel.from_dict(d["model"]), float(d["tol"]))
    if kind == "all":
        return AllOf(tuple(int(i) for i in d["of"]))
    if kind == "any":
        return AnyOf(tuple(int(i) for i in d["of"]))
    if kind == "sequence":
        return SequenceRule(tuple((int(i), int(lag)) for i, lag in d["pattern"]), int(d.get("tolerance", 0)))
    raise DegenerateRule(f"unknown rule type {kind!r}")


def device_cost_bits(rule: Rule) -> int:
    """Size of the canonical serialization of the rule, in bits."""
    return 8 * len(canonical_json(rule.to_dict()))
