"""Synthetic sparse low-rank test matrices built as products of sparse
categorical factors."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import InvalidRecipe
from .matrix import CSRMatrix, numerical_rank
from .rng import RngState

# Left-factor law for both synthetic sizes: 0 w.p. 0.97, each of 1, 2, 3
# w.p. 0.01.  Predicted product sparsity (1 - 0.03 p_S)^50 is 0.9851 for
# p_S = 0.01 and 0.9985 for p_S = 0.001.
LEFT_VALUES = (0.0, 1.0, 2.0, 3.0)
LEFT_PROBS = (0.97, 0.01, 0.01, 0.01)
RIGHT_VALUES = (0.0, 1.0)
SMALL_RIGHT_PROBS = (0.99, 0.01)
LARGE_RIGHT_PROBS = (0.999, 0.001)
TRUE_RANK = 50


@dataclass(frozen=True)
class FactorRecipe:
    rows: int
    cols: int
    values: Sequence[float]
    probabilities: Sequence[float]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        p = np.asarray(self.probabilities, dtype=np.float64)
        if self.rows < 0 or self.cols < 0:
            raise InvalidRecipe("negative factor shape")
        if v.ndim != 1 or v.shape != p.shape or v.size == 0:
            raise InvalidRecipe("values and probabilities must be equal-length, non-empty lists")
        if not np.all(np.isfinite(v)):
            raise InvalidRecipe("support values must be finite")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise InvalidRecipe(f"probabilities {tuple(p)} are not a distribution")

    def nonzero_probability(self):
        v = np.asarray(self.values)
        return float(np.asarray(self.probabilities)[v != 0].sum())


def gen_factor(recipe, rng):
    """I.i.d. categorical entries by inverse-CDF lookup of uniform draws."""
    cdf = np.cumsum(np.asarray(recipe.probabilities, dtype=np.float64))
    u = rng.random((recipe.rows, recipe.cols))
    idx = np.searchsorted(cdf, u, side="right")
    np.minimum(idx, len(cdf) - 1, out=idx)
    return np.asarray(recipe.values, dtype=np.float64)[idx]


class SyntheticData(NamedTuple):
    X: CSRMatrix
    A: np.ndarray
    S: np.ndarray

    @property
    def sparsity(self):
        return sparsity(self.X)

    def rank(self):
        return numerical_rank(self.X)


def gen_synthetic(m, n, k, left, right, seed):
    """``X = A* S*`` with ``A*`` (m x k) drawn from ``left`` and ``S*`` from ``right``.

    ``left``/``right`` are ``(values, probabilities)`` pairs.  The product is
    formed sparse, so no dense ``m x n`` array is ever allocated.
    """
    rng = RngState(seed)
    A = gen_factor(FactorRecipe(m, k, *left), rng)
    S = gen_factor(FactorRecipe(k, n, *right), rng)
    X = CSRMatrix.from_scipy(sp.csr_array(A) @ sp.csr_array(S))
    return SyntheticData(X, A, S)


def gen_small_synthetic(seed=0, m=1000, n=1000):
    return gen_synthetic(m, n, TRUE_RANK, (LEFT_VALUES, LEFT_PROBS), (RIGHT_VALUES, SMALL_RIGHT_PROBS), seed)


def gen_large_synthetic(seed=0, m=100_000, n=1000):
    return gen_synthetic(m, n, TRUE_RANK, (LEFT_VALUES, LEFT_PROBS), (RIGHT_VALUES, LARGE_RIGHT_PROBS), seed)


def predicted_sparsity(p_left, p_right, k=TRUE_RANK):
    """Probability that an entry of ``A* S*`` is zero when no cancellation is possible."""
    return (1.0 - p_left * p_right) ** k


def sparsity(X):
    rows, cols = X.shape
    if rows * cols == 0:
        return 1.0
    if isinstance(X, CSRMatrix):
        nnz = X.nnz
    else:
        nnz = int(np.count_nonzero(np.asarray(X)))
    return 1.0 - nnz / (rows * cols)
