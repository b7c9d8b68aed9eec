from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .prior import DiscretePrior, SupportArrays
from .signal import TensorSignal


class GramFactorization(BaseModel):
    """Gram matrix G_ij = <x_i, x_j>^d of the support and L with L L^T = G + jitter I."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    gram: np.ndarray
    factor: np.ndarray
    jitter: float = Field(default=0.0, ge=0.0)

    @property
    def size(self) -> int:
        return int(self.gram.shape[0])


class ChannelInstance(BaseModel):
    """
    A prior, an SNR and the projection backend that simulates <Y, x_i^{⊗d}>.

    Immutable and shared across worker threads; with_lambda returns a copy that
    shares the (expensive) backend.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    prior: DiscretePrior
    lam: float = Field(..., ge=0.0)
    support: SupportArrays
    backend: Any
    log_m: float = Field(..., description="log M_N used for lambda scaling")

    @property
    def size(self) -> int:
        return self.support.size

    @property
    def gram(self) -> Optional[np.ndarray]:
        return getattr(self.backend, "gram", None)

    def with_lambda(self, lam: float) -> "ChannelInstance":
        return self.model_copy(update={"lam": float(lam)})


class ProjectionObservation(BaseModel):
    """Sufficient statistic u_i = <Y, x_i^{⊗d}> of one observation."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    u: np.ndarray
    true_index: int = Field(..., ge=0)
    lam: float = Field(..., ge=0.0)


class DenseObservation(BaseModel):
    """Full observation Y = sqrt(lambda) X + Z in R^{p^d}."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    y: np.ndarray
    true_index: int = Field(..., ge=0)
    lam: float = Field(..., ge=0.0)
    signal: TensorSignal
