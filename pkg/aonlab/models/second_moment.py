from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class TruncationEvent(BaseModel):
    """
    High-probability event |<X,Y> - sqrt(lambda)| <= lambda^{1/4}.

    In the normalized coordinates w = <X,Y>/sqrt(lambda) it is the square
    [1 - h, 1 + h]^2 with h = lambda^{-1/4}.
    """

    model_config = ConfigDict(frozen=True)

    lam: float = Field(..., gt=0.0)
    half_width: float = Field(..., gt=0.0)  # lambda^{1/4}
    h: float = Field(..., gt=0.0)  # lambda^{-1/4}
    lower: float
    upper: float

    @model_validator(mode='after')
    def validate_rect(self):
        if not self.lower < self.upper:
            raise ValueError('truncation rectangle must be nonempty')
        return self

    @property
    def rect(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        return (self.lower, self.upper), (self.lower, self.upper)


class Prop5Row(BaseModel):
    """(1/lambda) log m(rho) against (rho/(1+rho))_+, raw and scaled by lambda^{1/4}."""

    model_config = ConfigDict(frozen=True)

    rho: float
    lam: float
    log_m: float
    normalized: float
    target: float
    margin: float
    scaled_margin: float


class ConditionalChiSquareBound(BaseModel):
    model_config = ConfigDict(frozen=True)

    lam: float
    expected_m: float
    log_expected_m: float
    normalized: float  # (1/lambda) log E[m]
    omega_probability: float
    corrected_normalized: float  # (1/lambda) log(E[m] / P[Omega])


class Prop5Calibration(BaseModel):
    model_config = ConfigDict(frozen=True)

    constant: float
    argmax_rho: float
    argmax_lambda: float
    n_points: int
