from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class MonteCarloEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    standard_error: float = Field(..., ge=0.0)
    n_trials: int = Field(..., ge=1)

    def within(self, target: float, n_sigma: float = 3.0, floor: float = 1e-12) -> bool:
        """True when |value - target| <= n_sigma standard errors."""
        return abs(self.value - target) <= n_sigma * self.standard_error + floor


class PosteriorSummary(BaseModel):
    """Posterior weights and the Gram-identity statistics of the posterior mean."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    weights: np.ndarray
    overlap_true: float
    norm_sq_est: float
    sq_error: float

    @model_validator(mode='after')
    def validate_ranges(self):
        if np.any(self.weights < 0) or abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise ValueError('weights must lie on the simplex')
        if not (-1e-10 <= self.norm_sq_est <= 1.0 + 1e-10):
            raise ValueError(f'norm_sq_est={self.norm_sq_est} outside [0, 1]')
        if not (0.0 <= self.sq_error <= 4.0):
            raise ValueError(f'sq_error={self.sq_error} outside [0, 4]')
        return self


class DivergenceKind(str, Enum):
    KL = "KL"
    MI = "MI"
    CHI2_EXACT = "CHI2_EXACT"
    CHI2_MONTE_CARLO = "CHI2_MONTE_CARLO"
    BINARY = "BINARY"


class DivergenceEstimate(BaseModel):
    """A divergence in nats with its Monte-Carlo standard error (0 when exact)."""

    model_config = ConfigDict(frozen=True)

    value: float
    standard_error: float = Field(default=0.0, ge=0.0)
    n_trials: int = Field(default=0, ge=0)
    lam: float = Field(..., ge=0.0)
    kind: DivergenceKind


class MutualInformationCheck(BaseModel):
    """I_direct + KL - lambda/2 with its pooled standard error."""

    model_config = ConfigDict(frozen=True)

    lam: float
    n_trials: int
    i_direct: float
    i_se: float
    kl: float
    kl_se: float
    residual: float
    residual_se: float

    def passes(self, n_sigma: float = 3.0) -> bool:
        return abs(self.residual) <= n_sigma * self.residual_se + 1e-12


class ChiSquareValue(BaseModel):
    """
    chi^2 = E exp(lambda <X,X'>) - 1.

    log_moment = log(1 + chi^2) is always finite; value is +inf when the linear
    scale overflows (overflow=True).
    """

    model_config = ConfigDict(frozen=True)

    lam: float
    value: float
    log_moment: float
    log_value: float
    overflow: bool = False


class MaxProjectionEstimate(BaseModel):
    """E max_i <x_i, Z>^2 against the union-bound reference 2 log M + 2."""

    model_config = ConfigDict(frozen=True)

    value: float
    standard_error: float
    n_trials: int
    log_m: float
    reference: float
    ratio: Optional[float] = None  # value / log M, undefined for M = 1


class BayesMapComparison(BaseModel):
    """Paired comparison of the posterior mean and the MAP point estimate."""

    model_config = ConfigDict(frozen=True)

    lam: float
    n_trials: int
    bayes_mse: float
    bayes_se: float
    map_mse: float
    map_se: float
    difference: float  # map - bayes, per trial
    difference_se: float
    map_accuracy: float  # fraction of trials with map == J


class KlCurvePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta: float
    lam: float
    kl: float
    kl_se: float
    kl_normalized: float
    kl_normalized_se: float
    lower_bound: float  # lambda/2 - log M
    prop1_target: float


class ImmseRow(BaseModel):
    """One grid point of the I-MMSE consistency table."""

    model_config = ConfigDict(frozen=True)

    beta: float
    lam: float
    kl_normalized: float
    kl_normalized_se: float
    mmse: float
    mmse_se: float
    derivative: Optional[float] = None  # central difference, interior points only
    target: float  # 1/2 - mmse/2
    residual: Optional[float] = None
    prop1_target: float


class BetaGridSimulation(BaseModel):
    """
    Per-trial outputs of one common-random-numbers run over an SNR grid.

    Every array has shape (n_trials, n_lambdas); trial i used the same J and noise
    at every lambda.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    lambdas: np.ndarray
    sq_error: np.ndarray
    log_z: np.ndarray
    planted_score: np.ndarray  # sqrt(lambda) u_J - lambda/2
    map_sq_error: np.ndarray
    map_hit: np.ndarray

    @property
    def n_trials(self) -> int:
        return int(self.sq_error.shape[0])
