import math
from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .prior import PriorKind

GRID_TOLERANCE = 1e-9
FAULTS = ("gram-diagonal",)


def parse_grid(text: str) -> List[float]:
    """
    Parses `a:b:step` (inclusive of b within 1e-9) or a comma-separated list.

    Grid points are generated as a + i*step so that repeated runs agree bit for bit.
    """
    text = text.strip()
    if not text:
        raise ValueError('empty grid')
    if ':' in text:
        parts = text.split(':')
        if len(parts) != 3:
            raise ValueError(f'grid {text!r} is not of the form a:b:step')
        start, stop, step = (float(x) for x in parts)
        if not step > 0:
            raise ValueError('grid step must be positive')
        if stop < start:
            raise ValueError('grid end must not precede its start')
        count = int(math.floor((stop - start) / step + GRID_TOLERANCE)) + 1
        return [start + i * step for i in range(count)]
    return [float(x) for x in text.split(',') if x.strip()]


def _coerce_grid(value):
    if isinstance(value, str):
        return parse_grid(value)
    return value


class SweepConfig(BaseModel):
    """Effective configuration of one CLI run (flags over config file over defaults)."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    prior: PriorKind = PriorKind.ORTHOGONAL
    p: Optional[int] = Field(default=None, ge=1)
    k: Optional[int] = Field(default=None, ge=1)
    m: int = Field(default=64, ge=1)
    d: int = Field(default=1, ge=1)
    beta_grid: List[float] = Field(default_factory=lambda: parse_grid("0:2:0.125"))
    trials: int = Field(default=1000, ge=1)
    seed: int = Field(default=2024, ge=0, lt=2**64)
    threads: int = Field(default=1, ge=1)
    out: Optional[Path] = None
    t_grid: Optional[List[float]] = None
    lambda_grid: List[float] = Field(default_factory=lambda: [1e2, 1e3, 1e4])
    rho_grid: List[float] = Field(default_factory=lambda: [-1.0, -0.5, 0.0, 0.25, 0.5, 0.75, 1.0])
    gram_cap: int = Field(default=4096, ge=1)
    ambient_cap: int = Field(default=4_000_000, ge=1)
    enumeration_cap: int = Field(default=5_000_000, ge=1)
    inject_fault: Optional[str] = None

    @field_validator('beta_grid', 't_grid', 'lambda_grid', 'rho_grid', mode='before')
    @classmethod
    def parse_grids(cls, v):
        return _coerce_grid(v)

    @field_validator('beta_grid')
    @classmethod
    def validate_beta_grid(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError('beta grid must not be empty')
        if any(b < 0 for b in v):
            raise ValueError('beta values must be nonnegative')
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError('beta grid must be sorted ascending')
        return v

    @field_validator('t_grid')
    @classmethod
    def validate_t_grid(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and any(not 0.0 <= t <= 1.0 for t in v):
            raise ValueError('t grid must lie in [0, 1]')
        return v

    @field_validator('lambda_grid')
    @classmethod
    def validate_lambda_grid(cls, v: List[float]) -> List[float]:
        if not v or any(not lam > 0 for lam in v):
            raise ValueError('lambda grid must be nonempty and positive')
        return v

    @field_validator('rho_grid')
    @classmethod
    def validate_rho_grid(cls, v: List[float]) -> List[float]:
        if not v or any(not -1.0 <= r <= 1.0 for r in v):
            raise ValueError('rho grid must lie in [-1, 1]')
        return v

    @field_validator('inject_fault')
    @classmethod
    def validate_fault(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v not in FAULTS:
            raise ValueError(f'unknown fault {v!r}; known faults: {", ".join(FAULTS)}')
        return v

    @model_validator(mode='after')
    def validate_prior_parameters(self):
        if self.prior != PriorKind.ORTHOGONAL and (self.p is None or self.k is None):
            raise ValueError(f'{self.prior.value} prior needs --p and --k')
        return self


class SweepRecord(BaseModel):
    """One beta of a sweep; field order is the CSV column order."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    beta: float
    lam: float = Field(..., alias="lambda")
    mmse_hat: float
    mmse_se: float
    kl_hat: float
    kl_se: float
    kl_normalized: float
    prop1_target: float
    n_trials: int
    seed: int


class CheckResult(BaseModel):
    """Outcome of one invariant check of the verification suite."""

    model_config = ConfigDict(frozen=True)

    module: str
    name: str
    passed: bool
    detail: str = ""
