import math
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import logsumexp

Probability = Union[Fraction, float]

OVERLAP_TOLERANCE = 1e-12


class OverlapPMF(BaseModel):
    """
    Finite law of an overlap <X, X'>.

    Atom values are exact rationals. Probabilities are exact rationals for small
    supports and floats otherwise (exact is then False).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    values: Tuple[Fraction, ...] = Field(..., min_length=1)
    probabilities: Tuple[Probability, ...] = Field(..., min_length=1)
    exact: bool = True
    # natural logs of the masses, kept for float laws whose masses underflow
    log_probabilities: Optional[Tuple[float, ...]] = None

    @model_validator(mode='after')
    def validate_law(self):
        if len(self.values) != len(self.probabilities):
            raise ValueError('values and probabilities must have the same length')
        if self.log_probabilities is not None and len(self.log_probabilities) != len(self.values):
            raise ValueError('log_probabilities must match values')
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError('atom values must be strictly increasing')
        if self.values[0] < -1 or self.values[-1] > 1:
            raise ValueError('atom values must lie in [-1, 1]')
        if any(q < 0 or q > 1 for q in self.probabilities):
            raise ValueError('probabilities must lie in [0, 1]')
        total = math.fsum(float(q) for q in self.probabilities)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f'probabilities sum to {total!r}, not 1')
        return self

    def value_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values], dtype=np.float64)

    def probability_array(self) -> np.ndarray:
        return np.array([float(q) for q in self.probabilities], dtype=np.float64)

    def atoms(self) -> List[Tuple[float, float]]:
        return list(zip(self.value_array().tolist(), self.probability_array().tolist()))

    def log_probability_array(self) -> np.ndarray:
        if self.log_probabilities is not None:
            return np.array(self.log_probabilities, dtype=np.float64)
        with np.errstate(divide='ignore'):
            return np.log(self.probability_array())

    def as_dict(self) -> Dict[Fraction, Probability]:
        return dict(zip(self.values, self.probabilities))

    def _tail_mask(self, t: float) -> np.ndarray:
        return self.value_array() >= t - OVERLAP_TOLERANCE

    def tail(self, t: float) -> float:
        """P[rho >= t], counting atoms within OVERLAP_TOLERANCE below t."""
        mask = self._tail_mask(t)
        if self.exact:
            return float(sum((q for q, keep in zip(self.probabilities, mask) if keep), Fraction(0)))
        return min(1.0, math.fsum(self.probability_array()[mask]))

    def log_tail(self, t: float) -> float:
        mask = self._tail_mask(t)
        if not mask.any():
            return -math.inf
        if mask.all():
            return 0.0
        if self.exact:
            return math.log(sum((q for q, keep in zip(self.probabilities, mask) if keep), Fraction(0)))
        return min(0.0, float(logsumexp(self.log_probability_array()[mask])))

    def mean(self) -> float:
        return math.fsum(float(v) * float(q) for v, q in zip(self.values, self.probabilities))

    def total_variation(self, other: "OverlapPMF") -> float:
        """Total variation distance; exact when both laws are exact."""
        mine, theirs = self.as_dict(), other.as_dict()
        keys = set(mine) | set(theirs)
        if self.exact and other.exact:
            diff = sum(abs(Fraction(mine.get(v, 0)) - Fraction(theirs.get(v, 0))) for v in keys)
            return float(diff / 2)
        return 0.5 * math.fsum(abs(float(mine.get(v, 0.0)) - float(theirs.get(v, 0.0))) for v in keys)


class RateFunctionRow(BaseModel):
    """One grid point of the empirical overlap rate function."""

    model_config = ConfigDict(frozen=True)

    t: float = Field(..., ge=0.0, le=1.0)
    tail: float = Field(..., ge=0.0, le=1.0)
    rate: float  # +inf when the tail is 0
    bound: float  # 2t/(1+t)
    margin: float


class SpreadProfileRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float
    log_tail: float
    normalized: float  # (1/log M) log P[rho >= t]
