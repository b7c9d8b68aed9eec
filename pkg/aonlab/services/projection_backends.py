"""
Samplers of the projection vector u_i = <Y, x_i^{⊗d}>.

Every backend exposes the same four operations on the support of size M:

* noise(rng): a draw of (<Z, x_i^{⊗d}>)_i, i.e. N(0, G);
* signal_row(j): the column G e_j;
* quadratic_form(w): w^T G w = ||sum_i w_i x_i^{⊗d}||^2;
* size.

The identity backend serves the orthogonal prior (G = I). The Gram backend
factorizes G once. The contraction backend draws the full noise tensor and
contracts it against each support tensor, which is exact in law and needs no
M x M matrix. The pair-sum backend does the same for order-2 sparse priors
reading only the upper triangle of each x x^T.
"""

from itertools import product
from typing import Optional
import logging

import numpy as np

from ..models.channel import GramFactorization
from ..models.prior import SupportArrays
from .support import support_overlaps

logger = logging.getLogger(__name__)

# relative weight below which a term is dropped from the pair-sum quadratic form
NEGLIGIBLE_WEIGHT = 1e-18


class IdentityBackend:
    """Orthogonal prior: u = sqrt(lambda) e_J + xi."""

    name = "identity"

    def __init__(self, size: int):
        self.size = size

    def noise(self, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(self.size)

    def signal_row(self, j: int) -> np.ndarray:
        row = np.zeros(self.size)
        row[j] = 1.0
        return row

    def quadratic_form(self, w: np.ndarray) -> float:
        return float(w @ w)

    @property
    def gram(self) -> np.ndarray:
        return np.eye(self.size)


class GramBackend:
    """Noise as L xi with L L^T = G (+ jitter)."""

    name = "gram"

    def __init__(self, factorization: GramFactorization):
        self.factorization = factorization
        self.size = factorization.size

    @property
    def gram(self) -> np.ndarray:
        return self.factorization.gram

    @property
    def jitter(self) -> float:
        return self.factorization.jitter

    def noise(self, rng: np.random.Generator) -> np.ndarray:
        return self.factorization.factor @ rng.standard_normal(self.size)

    def signal_row(self, j: int) -> np.ndarray:
        return self.factorization.gram[j]

    def quadratic_form(self, w: np.ndarray) -> float:
        return float(w @ (self.factorization.gram @ w))


class ContractionBackend:
    """
    Contracts a dense noise tensor of length p^d against every support tensor.

    flat[i, c] is the row-major position of the c-th nonzero entry of x_i^{⊗d}
    and coef[i, c] its value.
    """

    name = "contraction"

    def __init__(self, support: SupportArrays, order: int):
        self.support = support
        self.order = order
        self.size = support.size
        self.ambient_dim = support.p ** order

        combos = np.array(list(product(range(support.k), repeat=order)), dtype=np.int64)
        strides = support.p ** np.arange(order - 1, -1, -1, dtype=np.int64)
        # (size, k^d) positions and coefficients
        gathered = support.indices[:, combos]  # (size, k^d, d)
        self.flat = np.ascontiguousarray((gathered * strides).sum(axis=2))
        sign_products = support.signs[:, combos].astype(np.float64).prod(axis=2)
        self.coef = np.ascontiguousarray(sign_products / support.k ** (order / 2.0))

    def contract(self, tensor: np.ndarray) -> np.ndarray:
        """(<tensor, x_i^{⊗d}>)_i for a dense row-major tensor of length p^d."""
        return np.einsum("ic,ic->i", tensor[self.flat], self.coef)

    def noise(self, rng: np.random.Generator) -> np.ndarray:
        return self.contract(rng.standard_normal(self.ambient_dim))

    def signal_row(self, j: int) -> np.ndarray:
        return support_overlaps(self.support, j) ** self.order

    def quadratic_form(self, w: np.ndarray) -> float:
        dense = np.bincount(
            self.flat.ravel(),
            weights=(w[:, None] * self.coef).ravel(),
            minlength=self.ambient_dim,
        )
        return float(dense @ dense)

    @property
    def gram(self) -> Optional[np.ndarray]:
        return None


class PairSumBackend:
    """
    Order-2 sparse priors without the (size, k^2) contraction table.

    <Z, x x^T> = (sum_a Z_aa + sum_{a<b} s_a s_b (Z_ab + Z_ba)) / k over the
    sorted support of x, so each vector reads only the k(k+1)/2 entries of the
    folded matrix triu(Z + Z^T) with Z's own diagonal. The noise is drawn in the
    same row-major order as the contraction backend, which it matches exactly.
    """

    name = "pair-sum"

    def __init__(self, support: SupportArrays):
        self.support = support
        self.size = support.size
        self.p = support.p

        rows, cols = np.triu_indices(support.k)
        indices = support.indices
        # (size, k(k+1)/2) upper-triangle positions and coefficients
        self.flat = np.ascontiguousarray(indices[:, rows] * support.p + indices[:, cols])
        signs = support.signs.astype(np.float64)
        self.coef = np.ascontiguousarray(signs[:, rows] * signs[:, cols] / support.k)
        # off-diagonal entries stand for two cells of the symmetric matrix
        self.fold = (2.0 - np.eye(support.p)).ravel()

    def fold_noise(self, z: np.ndarray) -> np.ndarray:
        square = z.reshape(self.p, self.p)
        folded = np.triu(square + square.T)
        np.fill_diagonal(folded, np.diagonal(square))
        return folded.ravel()

    def noise(self, rng: np.random.Generator) -> np.ndarray:
        folded = self.fold_noise(rng.standard_normal(self.p * self.p))
        return np.einsum("ic,ic->i", folded[self.flat], self.coef)

    def signal_row(self, j: int) -> np.ndarray:
        return support_overlaps(self.support, j) ** 2

    def quadratic_form(self, w: np.ndarray) -> float:
        """
        ||sum_i w_i x_i x_i^T||_F^2 from the upper triangle.

        Terms with |w_i| below NEGLIGIBLE_WEIGHT times the largest weight are
        skipped; together they move the tensor sum by at most
        size * NEGLIGIBLE_WEIGHT * max|w_i| in Frobenius norm.
        """
        scale = float(np.max(np.abs(w))) if w.size else 0.0
        keep = np.flatnonzero(np.abs(w) > NEGLIGIBLE_WEIGHT * scale)
        upper = np.bincount(
            self.flat[keep].ravel(),
            weights=(w[keep, None] * self.coef[keep]).ravel(),
            minlength=self.p * self.p,
        )
        return float(upper @ (self.fold * upper))

    @property
    def gram(self) -> Optional[np.ndarray]:
        return None
