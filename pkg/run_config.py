"""Run documents: one JSON file describing the chain, the sector, a protocol, a sweep and outputs.

All energies are in units of J, times in units of 1/J, linear detuning rates in J² and
quadratic rates in J³.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from basis import OPEN, PERIODIC
from errors import ConfigError
from hamiltonian import LINEAR, SHAPES, ChainSpec
from protocols import BOUND_PAIR, FRAMES, FULL_CHAIN, KINDS, LEFT, RIGHT, SWEEP_PARAMETERS, ProtocolSpec

# Bump when the document layout changes; documents must share the major component.
SCHEMA_VERSION = "1.0.0"
# Version of the simulator itself, stamped into run logs.
API_VERSION = "1.0.0"


def format_version(version: str) -> str:
    """Convert version string to XXX.YYY.ZZZ format for comparison."""
    parts = version.split(".")
    if len(parts) != 3 or not all(p.isdigit() for p in parts):
        raise ValueError(f"version {version!r} is not of the form X.Y.Z")
    return f"{int(parts[0]):03d}.{int(parts[1]):03d}.{int(parts[2]):03d}"


def compare_versions(version1: str, version2: str) -> int:
    """-1 if version1 < version2, 0 if equal, 1 if version1 > version2."""
    v1, v2 = format_version(version1), format_version(version2)
    return (v1 > v2) - (v1 < v2)


def normalize_frame(frame: str) -> str:
    """``full`` is accepted as shorthand for ``full_chain``."""
    frame = "full_chain" if frame == "full" else frame
    if frame not in FRAMES:
        raise ValueError(f"frame must be one of {FRAMES} (or 'full'), got {frame!r}")
    return frame


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ChainConfig(_Strict):
    L: int
    J: float = 1.0
    Delta: float = 1.0
    epsilon: float = 1000.0
    defects: dict[int, float] = Field(default_factory=dict)
    boundary: str = PERIODIC

    @field_validator("boundary")
    @classmethod
    def _check_boundary(cls, v):
        if v not in (PERIODIC, OPEN):
            raise ValueError(f"boundary must be '{PERIODIC}' or '{OPEN}'")
        return v

    def to_spec(self) -> ChainSpec:
        return ChainSpec(L=self.L, J=self.J, Delta=self.Delta, epsilon=self.epsilon,
                         defects=dict(self.defects), boundary=self.boundary)


class ProtocolConfig(_Strict):
    kind: str
    defect_sites: list[int]
    shape: str = LINEAR
    D: float = 0.0
    D1: float = 0.0
    D2: float = 0.0
    detuned_site: str = LEFT
    frame: str = "effective"
    horizon: Optional[float] = None
    snapshots: int = 200
    tolerance: float = 1e-6

    @field_validator("kind")
    @classmethod
    def _check_kind(cls, v):
        if v not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        return v

    @field_validator("shape")
    @classmethod
    def _check_shape(cls, v):
        if v not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}")
        return v

    @field_validator("detuned_site")
    @classmethod
    def _check_detuned_site(cls, v):
        if v not in (LEFT, RIGHT):
            raise ValueError(f"detuned_site must be '{LEFT}' or '{RIGHT}'")
        return v

    @field_validator("frame", mode="before")
    @classmethod
    def _check_frame(cls, v):
        return normalize_frame(v)


class SweepConfig(_Strict):
    parameter: str
    values: list[float]

    @field_validator("parameter")
    @classmethod
    def _check_parameter(cls, v):
        if v not in SWEEP_PARAMETERS:
            raise ValueError(f"parameter must be one of {', '.join(SWEEP_PARAMETERS)}")
        return v


class OutputConfig(_Strict):
    dir: str = "results"
    prefix: str = ""


class RunConfig(_Strict):
    schema_version: str
    chain: ChainConfig
    N: Optional[int] = None
    protocol: Optional[ProtocolConfig] = None
    sweep: Optional[SweepConfig] = None
    output: OutputConfig = Field(default_factory=OutputConfig)

    @field_validator("schema_version")
    @classmethod
    def _check_schema_version(cls, v):
        formatted = format_version(v)
        if formatted[:3] != format_version(SCHEMA_VERSION)[:3]:
            raise ValueError(f"schema version {v} is not compatible with {SCHEMA_VERSION}")
        return v

    @model_validator(mode="after")
    def _check_sector(self):
        if self.protocol is not None and self.N is not None:
            expected = 2 if self.protocol.kind == BOUND_PAIR else 1
            if self.N != expected:
                raise ValueError(f"a {self.protocol.kind} protocol runs in the N={expected} sector, got N={self.N}")
        return self

    def chain_spec(self) -> ChainSpec:
        return self.chain.to_spec()

    def sector(self) -> int:
        if self.N is not None:
            return self.N
        if self.protocol is not None:
            return 2 if self.protocol.kind == BOUND_PAIR else 1
        raise ConfigError("N: required when no protocol is given")

    def protocol_spec(self, frame: Optional[str] = None) -> ProtocolSpec:
        if self.protocol is None:
            raise ConfigError("protocol: section required for this command")
        p = self.protocol
        try:
            frame = normalize_frame(frame) if frame else p.frame
        except ValueError as exc:
            raise ConfigError(f"--frame: {exc}") from exc
        return ProtocolSpec(
            kind=p.kind,
            chain=self.chain_spec(),
            defect_sites=tuple(p.defect_sites),
            shape=p.shape,
            D=p.D,
            D1=p.D1,
            D2=p.D2,
            detuned_site=p.detuned_site,
            frame=frame,
            horizon=p.horizon,
            snapshots=p.snapshots,
            tolerance=p.tolerance,
        )


def _describe(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        key = ".".join(str(part) for part in err["loc"]) or "<document>"
        lines.append(f"{key}: {err['msg']}")
    return "; ".join(lines)


def parse_config(data) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from exc


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read configuration ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_config(data)
