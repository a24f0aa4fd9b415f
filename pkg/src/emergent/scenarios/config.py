"""Scenario configuration schema (YAML or JSON documents).

Unknown keys are rejected everywhere. Exactly one generator section must be
present, matching ``kind``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import ConfigError

KINDS = ("symbols", "trajectory", "periodic", "lattice", "patches", "points")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MonitorConfig(_Strict):
    window: int = Field(16, ge=1)
    failures: int = Field(3, ge=1)
    validation: int = Field(5, ge=1)
    tol_sigma: float = Field(4.0, gt=0)
    dt: int | None = Field(None, ge=1)


class CodecConfig(_Strict):
    precision_bits: int = Field(16, ge=1)
    param_bits: int = Field(16, ge=1)


class OutputConfig(_Strict):
    report: str | None = None
    trace: str | None = None
    plot: str | None = None


class DetectorDecl(_Strict):
    name: str
    level: int = Field(ge=1)
    rule: dict[str, Any]
    since: int = Field(0, ge=0)


class SymbolsConfig(_Strict):
    sensor: str = "s"
    alphabet: list[str]
    tokens: list[str]
    repeat: int = Field(1, ge=1)
    prefix: str = ""
    noise: float = Field(0.0, ge=0, le=1)
    detectors: list[DetectorDecl] = []


class ConicSpec(_Strict):
    type: Literal["circle", "ellipse", "hyperbola", "parabola"]
    radius: float | None = None
    a: float | None = None
    b: float | None = None
    k: float | None = None
    center: tuple[float, float] = (0.0, 0.0)
    start: float | None = None


class TrajectoryConfig(_Strict):
    frames: int = Field(ge=2)
    switch: int = Field(ge=0)
    pre: ConicSpec
    post: ConicSpec | None = None
    noise: float = Field(0.0, ge=0)
    step: float = Field(0.1, gt=0)
    post_step: float | None = Field(None, gt=0)
    focus: tuple[float, float] = (0.0, 0.0)
    calibration: int = Field(24, ge=6)
    refit_points: int = Field(12, ge=6)
    add_velocity_at: int | None = Field(None, ge=0)
    angle_tol: float = Field(0.1, gt=0)


class PeriodicConfig(_Strict):
    frames: int = Field(ge=2)
    switch: int = Field(ge=0)
    periods: list[float]
    amplitudes: list[float]
    extra_periods: list[float] = []
    extra_amplitudes: list[float] = []
    extra_phases: list[float] = []
    noise: float = Field(0.0, ge=0)
    calibration: int = Field(32, ge=4)
    refit_points: int = Field(16, ge=4)


class LatticeConfig(_Strict):
    path: str | None = None
    width: int = Field(64, ge=1)
    height: int = Field(64, ge=1)
    stripe: int = Field(4, ge=1)
    flip: float = Field(0.0, ge=0, le=1)
    diameters: list[int] = [1, 2, 4, 8]


class PatchesConfig(_Strict):
    path: str | None = None
    n: int = Field(200, ge=8)
    breakpoint: float = Field(65.0, gt=0)
    exponents: tuple[float, float] = (0.6, 0.75)
    noise: float = Field(0.05, ge=0)
    area_range: tuple[float, float] = (1.0, 5000.0)
    k: float = Field(4.0, gt=0)


class PointsConfig(_Strict):
    path: str | None = None
    generator: Literal["csr", "clustered", "grid"] = "clustered"
    window: tuple[float, float, float, float] = (0.0, 100.0, 0.0, 100.0)
    n: int = Field(300, ge=30)
    clusters: int = Field(8, ge=1)
    cluster_radius: float = Field(8.0, gt=0)
    min_spacing: float = Field(1.5, ge=0)
    spacing: float = Field(5.0, gt=0)
    small_r: float | None = 3.0
    quadrat_size: float = Field(10.0, gt=0)


class ScenarioConfig(_Strict):
    scenario: str
    kind: Literal["symbols", "trajectory", "periodic", "lattice", "patches", "points"]
    seed: int = 0
    accounting: Literal["state-only", "with-device-cost"] = "state-only"
    monitor: MonitorConfig = MonitorConfig()
    codec: CodecConfig = CodecConfig()
    outputs: OutputConfig = OutputConfig()
    symbols: SymbolsConfig | None = None
    trajectory: TrajectoryConfig | None = None
    periodic: PeriodicConfig | None = None
    lattice: LatticeConfig | None = None
    patches: PatchesConfig | None = None
    points: PointsConfig | None = None

    @model_validator(mode="after")
    def _one_section(self):
        present = [k for k in KINDS if getattr(self, k) is not None]
        if present != [self.kind]:
            raise ValueError(f"kind {self.kind!r} needs exactly the {self.kind!r} section, found {present}")
        return self

    def to_document(self) -> dict:
        return self.model_dump(mode="json", exclude_none=True)


def parse_config(doc: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(doc)


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_document(), sort_keys=False)
