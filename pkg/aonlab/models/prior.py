from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class PriorKind(str, Enum):
    ORTHOGONAL = "orthogonal"
    BERNOULLI = "bernoulli"
    BERNOULLI_RADEMACHER = "bernoulli-rademacher"


class DiscretePrior(BaseModel):
    """
    Uniform prior on an enumerable set of unit vectors in R^p, lifted to order d.

    The orthogonal prior on M basis vectors is stored with p = M and k = 1.
    """

    model_config = ConfigDict(frozen=True)

    kind: PriorKind
    p: int = Field(..., ge=1, description="Base dimension")
    k: int = Field(..., ge=1, description="Sparsity")
    d: int = Field(default=1, ge=1, description="Tensor order")

    @model_validator(mode='after')
    def validate_ranges(self):
        if self.k > self.p:
            raise ValueError(f'k={self.k} exceeds p={self.p}')
        if self.kind == PriorKind.ORTHOGONAL:
            if self.k != 1:
                raise ValueError('orthogonal prior has k = 1')
            if self.p < 2:
                raise ValueError('orthogonal prior needs M >= 2')
        return self

    @property
    def is_signed(self) -> bool:
        return self.kind == PriorKind.BERNOULLI_RADEMACHER

    @property
    def sign_quotient(self) -> bool:
        """Whether x and -x give the same tensor (signed prior, even order)."""
        return self.is_signed and self.d % 2 == 0

    @property
    def label(self) -> str:
        if self.kind == PriorKind.ORTHOGONAL:
            return f"orthogonal(M={self.p},d={self.d})"
        return f"{self.kind.value}(p={self.p},k={self.k},d={self.d})"


class SupportArrays(BaseModel):
    """
    Array form of the enumerated support, in enumeration order.

    indices has shape (size, k) with sorted rows; signs has the same shape with
    entries +1/-1.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    p: int
    k: int
    indices: np.ndarray
    signs: np.ndarray

    @property
    def size(self) -> int:
        return int(self.indices.shape[0])
