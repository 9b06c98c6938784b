"""Run configuration: a JSON file whose unknown fields are errors."""

from __future__ import annotations

import json
import re
from pathlib import Path

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from .errors import ConfigError
from .scalar_kernels import HarmonicInvariant, ModelParams


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridConfig(_Strict):
    c_modulus_range: tuple[float, float] = (0.05, 0.45)
    c_arg_range: tuple[float, float] = (-3.0, 3.0)
    n_c: int = Field(10, ge=1)
    fiber_samples: int = Field(4, ge=1)

    @field_validator("c_modulus_range")
    @classmethod
    def _modulus(cls, v):
        lo, hi = v
        if not 0 < lo <= hi:
            raise ValueError("need 0 < min <= max; the grid must avoid |c| = 0")
        return v

    @field_validator("c_arg_range")
    @classmethod
    def _arg(cls, v):
        if v[0] > v[1]:
            raise ValueError("need min <= max")
        return v


class QuadratureConfig(_Strict):
    target_tol: float = Field(1e-13, gt=0)
    angular_margin_delta: float = Field(0.2, gt=0, lt=1.5)


class TruncationConfig(_Strict):
    series_tol: float = Field(1e-18, gt=0)
    max_terms: int = Field(100000, ge=1)


class RunConfig(_Strict):
    R: float = Field(1.0, gt=0)
    epsilon: float = Field(0.5, gt=0, lt=1)
    S_coefficients: list[tuple[float, float]] = Field(default_factory=list)
    grid: GridConfig = GridConfig()
    quadrature: QuadratureConfig = QuadratureConfig()
    truncation: TruncationConfig = TruncationConfig()
    seed: int = 0
    output_dir: str = "reports"

    @model_validator(mode="after")
    def _grid_inside_disc(self):
        if self.grid.c_modulus_range[1] >= self.epsilon:
            raise ValueError(
                f"grid.c_modulus_range reaches {self.grid.c_modulus_range[1]}, outside |c| < epsilon = {self.epsilon}"
            )
        return self

    @property
    def params(self) -> ModelParams:
        t = self.truncation
        return ModelParams(self.R, self.epsilon, t.series_tol, t.max_terms)

    @property
    def invariant(self) -> HarmonicInvariant:
        return HarmonicInvariant.from_pairs(self.S_coefficients)

    def with_points(self, n: int) -> RunConfig:
        return self.model_copy(update={"grid": self.grid.model_copy(update={"n_c": int(n)})})


def _line_of(text: str, key: str):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def parse_config(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            keys = [p for p in err["loc"] if isinstance(p, str)]
            line = _line_of(text, keys[-1]) if keys else None
            where = f"line {line}, field {loc}" if line else f"field {loc}"
            msgs.append(f"{where}: {err['msg']}")
        raise ConfigError("; ".join(msgs)) from exc


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
