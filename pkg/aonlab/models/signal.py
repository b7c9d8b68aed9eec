import math
from typing import Dict, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class SignalVector(BaseModel):
    """
    A unit vector with k nonzero entries, each of magnitude 1/sqrt(k).

    Stored sparsely as sorted 0-based indices plus a sign per index.
    """

    model_config = ConfigDict(frozen=True)

    dim: int = Field(..., ge=1, description="Ambient dimension p")
    indices: Tuple[int, ...] = Field(..., min_length=1)
    signs: Tuple[int, ...] = Field(..., min_length=1)

    @model_validator(mode='after')
    def validate_support(self):
        if len(self.indices) != len(self.signs):
            raise ValueError('indices and signs must have the same length')
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError('indices must be strictly increasing')
        if self.indices[0] < 0 or self.indices[-1] >= self.dim:
            raise ValueError(f'indices must lie in [0, {self.dim})')
        if any(s not in (-1, 1) for s in self.signs):
            raise ValueError('signs must be +1 or -1')
        return self

    @property
    def k(self) -> int:
        return len(self.indices)

    @property
    def magnitude(self) -> float:
        return 1.0 / math.sqrt(self.k)

    @property
    def entries(self) -> Dict[int, float]:
        """Sparse map index -> value."""
        return {i: s * self.magnitude for i, s in zip(self.indices, self.signs)}

    def values(self) -> np.ndarray:
        return np.asarray(self.signs, dtype=np.float64) * self.magnitude

    def norm_sq(self) -> float:
        values = self.values()
        return float(values @ values)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim, dtype=np.float64)
        dense[list(self.indices)] = self.values()
        return dense


class TensorSignal(BaseModel):
    """Rank-one tensor x^{⊗d}; never stored densely unless materialized."""

    model_config = ConfigDict(frozen=True)

    base: SignalVector
    order: int = Field(..., ge=1)

    @property
    def ambient_dim(self) -> int:
        return self.base.dim ** self.order
