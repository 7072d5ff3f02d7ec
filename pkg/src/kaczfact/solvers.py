"""Inner linear-system solvers for the alternating scheme.

``exact``
    minimum-norm least squares on the whole system (ALS).
``brk``
    block randomized Kaczmarz: project the iterate onto the solution set of
    a sampled block of equations, ``y <- y + M_tau^+ (b_tau - M_tau y)``.
``rk``
    the single-row special case, applied in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import BlockTooLarge, DimensionMismatch, IndexOutOfRange
from .matrix import col_slice, least_squares_solve, row_slice, sparse_entry_slice, sparse_row_entries
from .sampling import uniform_block, weighted_block

KINDS = ("exact", "rk", "brk")
SAMPLINGS = ("uniform", "weighted")


@dataclass(frozen=True)
class SolverSpec:
    """Inner solver configuration.

    ``epsilon=None`` means the early-exit tolerance is ``1e-8 * ||b||`` for
    whichever right-hand side is being solved.  For ``kind="rk"`` the block
    size is forced to 1; ``kind="exact"`` ignores block size, subiterations
    and sampling.
    """

    kind: str = "brk"
    block_size: int = 1
    subiterations: int = 1
    epsilon: Optional[float] = None
    sampling: str = "uniform"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown solver kind {self.kind!r}")
        if self.sampling not in SAMPLINGS:
            raise ValueError(f"unknown sampling {self.sampling!r}")
        if self.subiterations < 1:
            raise ValueError("subiterations must be at least 1")
        if self.block_size < 1:
            raise ValueError("block size must be at least 1")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.kind == "rk" and self.block_size != 1:
            object.__setattr__(self, "block_size", 1)

    @classmethod
    def named(cls, name, subiterations=1, epsilon=None, block_size=1):
        """Solver by its CLI name: ``als``, ``rk``, ``ubrk`` or ``wbrk``."""
        table = {
            "als": ("exact", "uniform"),
            "rk": ("rk", "uniform"),
            "ubrk": ("brk", "uniform"),
            "wbrk": ("brk", "weighted"),
        }
        if name not in table:
            raise ValueError(f"unknown solver {name!r}")
        kind, sampling = table[name]
        return cls(kind, block_size, subiterations, epsilon, sampling)

    def tolerance(self, b_norm):
        return 1e-8 * b_norm if self.epsilon is None else self.epsilon


def brk_step(M, b, y, tau):
    """One block Kaczmarz projection onto the equations indexed by ``tau``."""
    M = np.asarray(M, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if M.ndim != 2 or b.shape != (M.shape[0],) or y.shape != (M.shape[1],):
        raise DimensionMismatch(f"M{M.shape}, b{b.shape}, y{y.shape} do not conform")
    Mt = row_slice(M, tau)
    return y + least_squares_solve(Mt, b[np.asarray(tau)] - Mt @ y)


def _sample(p, r, spec, rng, sq_norms):
    if spec.sampling == "weighted":
        return weighted_block(sq_norms, r, rng)
    return uniform_block(p, r, rng)


def brk_solve(M, b, y0, spec, rng):
    """Run up to ``spec.subiterations`` Kaczmarz steps from ``y0``.

    Stops early once ``||M y - b|| < epsilon`` (checked between steps).
    """
    M = np.asarray(M, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    p, q = M.shape
    if b.shape != (p,) or y0.shape != (q,):
        raise DimensionMismatch(f"M{M.shape}, b{b.shape}, y0{y0.shape} do not conform")
    if spec.kind == "exact":
        return least_squares_solve(M, b)
    L = spec.subiterations
    eps = spec.tolerance(float(np.linalg.norm(b)))
    sq = np.einsum("ij,ij->i", M, M) if spec.sampling == "weighted" else None
    if spec.kind == "rk":
        if sq is None:
            order = rng.integers(p, size=L)
        else:
            order = np.concatenate([weighted_block(sq, 1, rng) for _ in range(L)])
        y, _ = kernels.rk_sweep(M, b, y0, order, eps if L > 1 else 0.0)
        return y
    r = spec.block_size
    if r > p:
        raise BlockTooLarge(f"block of {r} rows requested from a {p}-row system")
    y = y0.copy()
    for sub in range(L):
        y = brk_step(M, b, y, _sample(p, r, spec, rng, sq))
        if r == p:
            # a full block lands on the least-squares set; repeats are no-ops
            break
        if sub < L - 1 and eps > 0 and np.linalg.norm(M @ y - b) < eps:
            break
    return y


def brk_update_column(A, X, S, i, tau1):
    """Kaczmarz update of column ``i`` of ``S`` using rows ``tau1`` of ``A``.

    Reads only ``A[tau1]`` and ``X[tau1, i]``.
    """
    if not 0 <= i < S.shape[1]:
        raise IndexOutOfRange(f"column {i} out of range")
    M = row_slice(A, tau1)
    b = sparse_entry_slice(X, tau1, i)
    y = S[:, i]
    return y + least_squares_solve(M, b - M @ y)


def brk_update_row(A, X, S, j, tau2):
    """Kaczmarz update of row ``j`` of ``A`` using columns ``tau2`` of ``S``."""
    if not 0 <= j < A.shape[0]:
        raise IndexOutOfRange(f"row {j} out of range")
    M = col_slice(S, tau2).T
    b = sparse_row_entries(X, j, tau2)
    y = A[j]
    return y + least_squares_solve(M, b - M @ y)


def exact_ls_column(A, X, i):
    if A.shape[0] != X.shape[0]:
        raise DimensionMismatch(f"A{A.shape} does not match X{X.shape}")
    if not 0 <= i < X.shape[1]:
        raise IndexOutOfRange(f"column {i} out of range")
    return least_squares_solve(A, X.dense_col(i))


def exact_ls_row(S, X, j):
    if S.shape[1] != X.shape[1]:
        raise DimensionMismatch(f"S{S.shape} does not match X{X.shape}")
    if not 0 <= j < X.shape[0]:
        raise IndexOutOfRange(f"row {j} out of range")
    return least_squares_solve(S.T, X.dense_row(j))
