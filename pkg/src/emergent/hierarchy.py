"""Sensors, detectors, the strictly layered detection hierarchy, and evaluation.

Hierarchies are immutable: registering returns a new hierarchy and never
renumbers what is already there. Detector ids are registration indices
starting at 1; sensors are numbered separately, also from 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

from .errors import AlphabetViolation, DegenerateRule, DuplicateId, LevelViolation, MissingReading, UnknownInput
from .rules import Rule, device_cost_bits

DEFAULT_PRECISION = 16


@dataclass(frozen=True)
class Sensor:
    id: int
    name: str
    alphabet: tuple[str, ...] | None = None  # None for real-valued sensors
    precision_bits: int = DEFAULT_PRECISION
    since: int = 0

    @property
    def discrete(self) -> bool:
        return self.alphabet is not None


@dataclass(frozen=True)
class SensorReading:
    sensor_id: int
    value: Any
    frame: int


@dataclass(frozen=True)
class Detector:
    id: int
    name: str
    level: int
    rule: Rule
    since: int = 0

    @property
    def inputs(self) -> tuple[int, ...]:
        return self.rule.sensors if self.level == 1 else self.rule.inputs

    @property
    def window(self) -> int:
        return self.rule.window

    @property
    def device_cost_bits(self) -> int:
        return device_cost_bits(self.rule)


@dataclass(frozen=True)
class Hierarchy:
    sensors: tuple[Sensor, ...] = ()
    detectors: tuple[Detector, ...] = ()

    # lookups -------------------------------------------------------------
    def sensor(self, sid: int) -> Sensor:
        if not 1 <= sid <= len(self.sensors):
            raise UnknownInput(f"no sensor {sid}")
        return self.sensors[sid - 1]

    def detector(self, did: int) -> Detector:
        if not 1 <= did <= len(self.detectors):
            raise UnknownInput(f"no detector {did}")
        return self.detectors[did - 1]

    def sensor_by_name(self, name: str) -> Sensor:
        for s in self.sensors:
            if s.name == name:
                return s
        raise UnknownInput(f"no sensor named {name!r}")

    def detector_by_name(self, name: str) -> Detector:
        for d in self.detectors:
            if d.name == name:
                return d
        raise UnknownInput(f"no detector named {name!r}")

    @property
    def max_level(self) -> int:
        return max((d.level for d in self.detectors), default=0)

    def by_level(self) -> list[Detector]:
        return sorted(self.detectors, key=lambda d: (d.level, d.id))

    def parents_of(self, did: int) -> list[Detector]:
        return [d for d in self.detectors if d.level > 1 and did in d.inputs]

    # registration --------------------------------------------------------
    def register_sensor(self, name: str, alphabet: Sequence[str] | None = None,
                        precision_bits: int = DEFAULT_PRECISION, since: int = 0) -> "Hierarchy":
        if any(s.name == name for s in self.sensors):
            raise DuplicateId(f"sensor {name!r} already registered")
        if alphabet is not None:
            alphabet = tuple(alphabet)
            if not alphabet or len(set(alphabet)) != len(alphabet):
                raise DegenerateRule("alphabet must be non-empty with distinct symbols")
        s = Sensor(len(self.sensors) + 1, name, alphabet, precision_bits, since)
        return replace(self, sensors=self.sensors + (s,))

    def register(self, name: str, level: int, rule: Rule, since: int = 0) -> "Hierarchy":
        return register_detector(self, Detector(len(self.detectors) + 1, name, level, rule, since))


def register_detector(h: Hierarchy, d: Detector) -> Hierarchy:
    expected = len(h.detectors) + 1
    if d.id != expected or any(x.name == d.name for x in h.detectors):
        raise DuplicateId(f"detector {d.name!r} (id {d.id}) clashes; next free id is {expected}")
    if d.level < 1:
        raise LevelViolation("levels start at 1")
    if d.level == 1:
        if not d.rule.reads_sensors:
            raise LevelViolation("a level-1 detector reads sensors only")
        for s in d.rule.sensors:
            h.sensor(s)
    else:
        if d.rule.reads_sensors:
            raise LevelViolation(f"a level-{d.level} detector cannot read sensors")
        for i in d.rule.inputs:
            if not 1 <= i <= len(h.detectors):
                raise UnknownInput(f"detector {i} is not registered")
            if h.detector(i).level != d.level - 1:
                raise LevelViolation(
                    f"input {i} is at level {h.detector(i).level}, expected {d.level - 1}")
        if d.rule.tolerance:
            for i in d.rule.inputs:
                child = h.detector(i)
                if child.level != 1 or child.window != 1 or len(child.rule.sensors) != 1 \
                        or not h.sensor(child.rule.sensors[0]).discrete:
                    raise DegenerateRule(
                        "tolerant patterns must be built from single-frame detectors on one symbolic sensor")
    if not d.inputs:
        raise DegenerateRule("a detector must have at least one input")
    return replace(h, detectors=h.detectors + (d,))


@dataclass(frozen=True)
class ActivationState:
    frame: int
    active: frozenset[int]
    readings: Mapping[int, Any] = field(default_factory=dict)
    residual_readings: Mapping[int, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class SystemTrace:
    frames: tuple[ActivationState, ...] = ()

    def __post_init__(self):
        for k, s in enumerate(self.frames):
            if s.frame != self.frames[0].frame + k:
                raise ValueError("trace frames must be consecutive")

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, k):
        return self.frames[k]

    @property
    def start(self) -> int:
        return self.frames[0].frame if self.frames else 0

    def segment(self, first: int, last: int) -> "SystemTrace":
        """Frames with index in [first, last] (absolute frame numbers)."""
        return SystemTrace(tuple(s for s in self.frames if first <= s.frame <= last))


class _History:
    """Evaluation context over readings and activations seen so far."""

    def __init__(self, h: Hierarchy):
        self.h = h
        self.readings: dict[int, Mapping[int, Any]] = {}
        self.active: dict[int, set[int]] = {}

    def reading(self, sensor, frame):
        return self.readings.get(frame, {}).get(sensor)

    def is_active(self, detector, frame):
        return detector in self.active.get(frame, ())


def _normalize_readings(h: Hierarchy, readings: Mapping, frame: int) -> dict[int, Any]:
    out: dict[int, Any] = {}
    for key, value in readings.items():
        s = h.sensor_by_name(key) if isinstance(key, str) else h.sensor(int(key))
        out[s.id] = value
    for s in h.sensors:
        if s.since > frame:
            out.pop(s.id, None)
            continue
        if s.id not in out:
            raise MissingReading(f"frame {frame}: no reading for sensor {s.name!r}")
        if s.discrete and out[s.id] not in s.alphabet:
            raise AlphabetViolation(f"frame {frame}: {out[s.id]!r} not in alphabet of {s.name!r}")
    return out


def _step(h: Hierarchy, ctx: _History, readings: Mapping, frame: int) -> ActivationState:
    values = _normalize_readings(h, readings, frame)
    ctx.readings[frame] = values
    active: set[int] = set()
    ctx.active[frame] = active
    for d in h.by_level():
        if d.since <= frame and d.rule.evaluate(ctx, frame):
            active.add(d.id)
    explained = {s for d in active if h.detector(d).level == 1 for s in h.detector(d).inputs}
    residual = {s: v for s, v in values.items() if s not in explained}
    return ActivationState(frame, frozenset(active), values, residual)


def evaluate_frame(h: Hierarchy, readings: Mapping, frame: int,
                   history: SystemTrace | None = None) -> ActivationState:
    """Evaluate every detector on one frame, level by level.

    ``history`` supplies earlier frames for windowed rules; without it those
    rules see no past activity.
    """
    ctx = _History(h)
    for s in history or ():
        ctx.readings[s.frame] = s.readings
        ctx.active[s.frame] = set(s.active)
    return _step(h, ctx, readings, frame)


def evaluate_trace(h: Hierarchy, readings_per_frame: Iterable[Mapping]) -> SystemTrace:
    ctx = _History(h)
    states = [_step(h, ctx, r, t) for t, r in enumerate(readings_per_frame)]
    return SystemTrace(tuple(states))


def reevaluate_upper(h: Hierarchy, level1: Mapping[int, Iterable[int]], frames: Sequence[int]) -> dict[int, frozenset[int]]:
    """Recompute levels >= 2 from level-1 activations alone.

    Higher outputs are a pure function of their inputs' binary activity, so
    this reproduces them without any sensor values.
    """
    ctx = _History(h)
    out = {}
    for t in frames:
        active = set(level1.get(t, ()))
        ctx.active[t] = active
        for d in h.by_level():
            if d.level >= 2 and d.since <= t and d.rule.evaluate(ctx, t):
                active.add(d.id)
        out[t] = frozenset(active)
    return out
