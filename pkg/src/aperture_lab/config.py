"""Experiment configuration schemas for the command-line runs.

Every config is a JSON object with a top-level ``schema_version``; unknown
fields are rejected.  :func:`load_config` reports validation failures with
the dotted path of the offending field.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

SCHEMA_VERSION = 1

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "MatrixSpec",
    "UnitarySpec",
    "StateSpec",
    "SearchConfig",
    "BoundaryConfig",
    "RecordConfig",
    "BellConfig",
    "TraceConfig",
    "CONFIG_MODELS",
    "load_config",
]


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class _Versioned(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    seed: int = Field(0, ge=0, lt=2**64)


class MatrixSpec(_Strict):
    shape: tuple[int, int]
    data: list[tuple[float, float]]


class UnitarySpec(_Strict):
    kind: Literal["identity", "sector_swap", "seeded_haar", "matrix"] = "identity"
    sectors: Optional[list[int]] = None
    seed: Optional[int] = Field(None, ge=0, lt=2**64)
    matrix: Optional[MatrixSpec] = None

    @model_validator(mode="after")
    def _fields_for_kind(self):
        if self.kind == "matrix" and self.matrix is None:
            raise ValueError("kind 'matrix' requires a matrix")
        if self.kind == "sector_swap" and (self.sectors is None or len(self.sectors) != 2):
            raise ValueError("kind 'sector_swap' requires sectors [a, b]")
        return self


class StateSpec(_Strict):
    kind: Literal["maximally_mixed", "pure_sector", "sector_mixed", "matrix"] = "maximally_mixed"
    sector: Optional[int] = None
    matrix: Optional[MatrixSpec] = None


class SearchConfig(_Versioned):
    max_disc: int = Field(144, ge=1)
    max_summands: int = Field(12, ge=1)
    gen_size: int = Field(16, ge=1)
    n_min: int = Field(2, ge=0)
    n_max: int = Field(12, ge=0)
    workers: Optional[int] = Field(None, ge=1)


class BoundaryConfig(_Versioned):
    algebra: str = "M1(C) + M1(H) + M3(C)"
    n_b: int = Field(3, ge=0)
    H_bulk: Optional[int] = Field(None, ge=1)
    central_sets: list[list[int]] = Field(default_factory=lambda: [[0], [0, 2], [1], [0, 1, 2]])
    invariance_trials: int = Field(1000, ge=1)
    noncentral_projections: int = Field(100, ge=0)
    counterexample_trials: int = Field(10, ge=1)
    tol: float = Field(1e-12, gt=0)


class RecordConfig(_Versioned):
    sector_dims: list[int] = Field(default_factory=lambda: [1, 2, 3], min_length=1)
    steps: int = Field(3, ge=1)
    unitaries: list[UnitarySpec] = Field(
        default_factory=lambda: [UnitarySpec(kind="seeded_haar", sectors=[1, 2])]
    )
    initial_state: StateSpec = Field(default_factory=StateSpec)
    mode: Literal["exact", "sample"] = "exact"
    num_samples: int = Field(100_000, ge=1)
    depth: Optional[int] = Field(None, ge=2)
    witness_tol: float = Field(1e-6, gt=0)

    @model_validator(mode="after")
    def _unitary_count(self):
        if len(self.unitaries) not in (1, self.steps):
            raise ValueError("give one unitary (reused every step) or exactly `steps` unitaries")
        return self


class BellConfig(_Versioned):
    correlation_angles: int = Field(17, ge=2)
    scan_configs: int = Field(10_000, ge=1)
    scan_grid: int = Field(8, ge=1)
    channels: int = Field(50, ge=0)
    states_per_channel: int = Field(20, ge=0)
    interference_dim: int = Field(6, ge=1)


class TraceConfig(_Versioned):
    tests_dir: Optional[str] = None
    junit_path: Optional[str] = None


CONFIG_MODELS: dict[str, type[_Versioned]] = {
    "search": SearchConfig,
    "boundary": BoundaryConfig,
    "record": RecordConfig,
    "bell": BellConfig,
    "trace": TraceConfig,
}

AnyConfig = Union[SearchConfig, BoundaryConfig, RecordConfig, BellConfig, TraceConfig]


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "; ".join(lines)


def load_config(command: str, source: Union[str, Path, dict, None] = None) -> AnyConfig:
    model = CONFIG_MODELS[command]
    if source is None:
        data: Any = {}
    elif isinstance(source, dict):
        data = source
    else:
        try:
            data = json.loads(Path(source).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError("<root>: configuration must be a JSON object")
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None
