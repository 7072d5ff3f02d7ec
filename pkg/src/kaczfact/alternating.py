"""Alternating factorization ``X ~ A S`` with a pluggable inner solver.

Each update fixes one factor and re-solves one row of ``A`` or one column of
``S``.  In the stochastic scheme a step performs ``update_schedule(m, n)``
row and column updates with targets drawn without replacement; in the cyclic
scheme an iteration sweeps every row of ``A`` and then every column of ``S``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionMismatch, KaczfactError, RankTooLarge, ZeroDataMatrix
from .matrix import CSRMatrix, least_squares_solve, relative_error, smallest_singular_value, sparse_entry_slice, sparse_row_entries
from .rng import RngState
from .sampling import WithoutReplacementPool, uniform_block, update_schedule, weighted_block
from .solvers import SolverSpec

SCHEMES = ("stochastic", "cyclic")

# independent streams under one seed, so that solvers which never sample
# blocks still see the same initialization and target sequence
INIT_STREAM, TARGET_STREAM, BLOCK_STREAM = 0, 1, 2


class NumericalBreakdown(KaczfactError, FloatingPointError):
    pass


def _round_half_up(x):
    return int(math.floor(x + 0.5))


@dataclass
class FactorizationConfig:
    rank: int
    solver: SolverSpec = field(default_factory=lambda: SolverSpec("exact"))
    scheme: str = "stochastic"
    row_block_fraction: float = 1.0
    col_block_fraction: float = 1.0
    alternating_iterations: int = 1000
    seed: int = 0
    trace_interval: int = 100

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        for name in ("row_block_fraction", "col_block_fraction"):
            f = getattr(self, name)
            if not 0.0 < f <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1], got {f}")
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        if self.alternating_iterations < 0:
            raise ValueError("alternating_iterations must be non-negative")
        if self.trace_interval < 1:
            raise ValueError("trace_interval must be at least 1")

    def block_sizes(self, m, n):
        """(rows of ``A`` per column update, columns of ``S`` per row update)."""
        r1 = max(1, _round_half_up(self.row_block_fraction * m))
        r2 = max(1, _round_half_up(self.col_block_fraction * n))
        if self.solver.kind == "rk":
            return 1, 1
        return min(r1, m), min(r2, n)


@dataclass
class AccessStats:
    """Counts of factor rows/columns read by the inner solver."""

    rows_touched: int = 0
    cols_touched: int = 0
    max_rows_per_col_update: int = 0
    max_cols_per_row_update: int = 0
    col_updates: int = 0
    row_updates: int = 0


@dataclass
class FactorPair:
    A: np.ndarray
    S: np.ndarray
    iteration: int = 0
    epoch: int = 0
    stats: AccessStats = field(default_factory=AccessStats)


@dataclass(frozen=True)
class TraceRecord:
    trial: int
    iteration: int
    epoch: int
    relative_error: float
    wall_time_s: float
    rows_touched: int
    cols_touched: int


@dataclass(frozen=True)
class StationarityReport:
    lhs: float
    delta: float
    satisfied: bool


def epoch_of(iteration, m, n, scheme="stochastic"):
    if scheme == "cyclic":
        return int(iteration)
    return int(iteration) // min(m, n)


def init_factors(m, n, k, rng):
    """Uniform [0, 1) factors, ``A`` drawn before ``S``."""
    if k < 1 or k >= min(m, n):
        raise RankTooLarge(f"rank {k} must satisfy 1 <= k < min({m}, {n})")
    A = rng.random((m, k))
    S = rng.random((k, n))
    return FactorPair(A, S)


class _Updater:
    """Applies single-target updates in place and keeps access counts."""

    def __init__(self, X, pair, config, rng, callback=None):
        self.X = X
        self.A = pair.A
        self.S = pair.S
        self.spec = config.solver
        self.rng = rng
        self.stats = pair.stats
        self.callback = callback
        self.hook_time = 0.0
        m, n = X.shape
        self.r1, self.r2 = config.block_sizes(m, n)
        self.weighted = self.spec.kind != "exact" and self.spec.sampling == "weighted"
        if self.weighted:
            # squared norms are maintained incrementally so sampling never
            # rescans a whole factor
            self.a_sq = np.einsum("ij,ij->i", self.A, self.A)
            self.s_sq = np.einsum("ij,ij->j", self.S, self.S)
        self._Xt = X.T

    def _hook(self, what, index):
        if self.callback is not None:
            t0 = time.perf_counter()
            self.callback(what, index, self.A, self.S)
            self.hook_time += time.perf_counter() - t0

    def _kaczmarz(self, y, universe, r, gather, weights, full_residual, b_norm):
        spec = self.spec
        L = spec.subiterations
        eps = spec.tolerance(b_norm) if L > 1 else 0.0
        touched = 0
        for sub in range(L):
            if weights is not None:
                rr = min(r, int(np.count_nonzero(weights > 0)))
                if rr == 0:
                    break  # every candidate equation has a zero coefficient row
                tau = weighted_block(weights, rr, self.rng)
            else:
                rr = r
                tau = uniform_block(universe, r, self.rng)
            M, b = gather(tau)
            touched += rr
            if spec.kind == "rk":
                y, _ = kernels.rk_sweep(M, b, y, np.zeros(1, dtype=np.int64))
            else:
                y = y + least_squares_solve(M, b - M @ y)
                if rr == universe:
                    break
            if sub < L - 1 and eps > 0:
                touched += universe
                if full_residual(y) < eps:
                    break
        return y, touched

    def update_column(self, i):
        A, S, X = self.A, self.S, self.X
        m = A.shape[0]
        if self.spec.kind == "exact":
            y = least_squares_solve(A, self._Xt.dense_row(i))
            touched = m
        else:
            _, xvals = self._Xt.row(i)
            y, touched = self._kaczmarz(
                S[:, i].copy(),
                m,
                self.r1,
                lambda tau: (A[tau], sparse_entry_slice(X, tau, i)),
                self.a_sq if self.weighted else None,
                lambda y: np.linalg.norm(A @ y - self._Xt.dense_row(i)),
                float(np.linalg.norm(xvals)),
            )
        S[:, i] = y
        if self.weighted:
            self.s_sq[i] = y @ y
        st = self.stats
        st.rows_touched += touched
        st.max_rows_per_col_update = max(st.max_rows_per_col_update, touched)
        st.col_updates += 1
        self._hook("col", i)

    def update_row(self, j):
        A, S, X = self.A, self.S, self.X
        n = S.shape[1]
        if self.spec.kind == "exact":
            y = least_squares_solve(S.T, X.dense_row(j))
            touched = n
        else:
            _, xvals = X.row(j)
            y, touched = self._kaczmarz(
                A[j].copy(),
                n,
                self.r2,
                lambda tau: (S[:, tau].T, sparse_row_entries(X, j, tau)),
                self.s_sq if self.weighted else None,
                lambda y: np.linalg.norm(S.T @ y - X.dense_row(j)),
                float(np.linalg.norm(xvals)),
            )
        A[j] = y
        if self.weighted:
            self.a_sq[j] = y @ y
        st = self.stats
        st.cols_touched += touched
        st.max_cols_per_row_update = max(st.max_cols_per_row_update, touched)
        st.row_updates += 1
        self._hook("row", j)


def factorize(X, config, trial=0, callback=None):
    """Run the alternating scheme on sparse ``X``.

    Returns ``(pair, trace)``.  ``trace`` holds a :class:`TraceRecord` for
    iteration 0 and then every ``trace_interval`` iterations, always
    including the last.  ``wall_time_s`` is cumulative update time; relative
    error evaluation and ``callback(kind, index, A, S)`` (invoked after each
    single-target update) are excluded from it.
    """
    if not isinstance(X, CSRMatrix):
        X = CSRMatrix.from_dense(X)
    m, n = X.shape
    if X.sq_norm() == 0.0:
        raise ZeroDataMatrix("cannot factorize a zero matrix")
    k = config.rank
    if k >= min(m, n):
        raise RankTooLarge(f"rank {k} must be below min({m}, {n})")

    pair = init_factors(m, n, k, RngState(config.seed, INIT_STREAM))
    targets = RngState(config.seed, TARGET_STREAM)
    updater = _Updater(X, pair, config, RngState(config.seed, BLOCK_STREAM), callback)
    stats = pair.stats
    T = config.alternating_iterations

    trace = []

    def record(it, elapsed):
        err = relative_error(X, pair.A, pair.S)
        if not np.isfinite(err):
            raise NumericalBreakdown(f"relative error became {err} at iteration {it}")
        trace.append(
            TraceRecord(trial, it, epoch_of(it, m, n, config.scheme), err, elapsed,
                        stats.rows_touched, stats.cols_touched)
        )

    record(0, 0.0)
    elapsed = 0.0
    if config.scheme == "stochastic":
        row_pool, col_pool = WithoutReplacementPool(m), WithoutReplacementPool(n)
        n_rows, n_cols = update_schedule(m, n)
        rows_first = m >= n
    for it in range(1, T + 1):
        hook_before = updater.hook_time
        t0 = time.perf_counter()
        if config.scheme == "stochastic":
            if rows_first:
                for _ in range(n_rows):
                    updater.update_row(row_pool.next(targets))
            for _ in range(n_cols):
                updater.update_column(col_pool.next(targets))
            if not rows_first:
                for _ in range(n_rows):
                    updater.update_row(row_pool.next(targets))
        else:
            for j in range(m):
                updater.update_row(j)
            for i in range(n):
                updater.update_column(i)
        elapsed += (time.perf_counter() - t0) - (updater.hook_time - hook_before)
        if it % config.trace_interval == 0 or it == T:
            record(it, elapsed)

    pair.iteration = T
    pair.epoch = epoch_of(T, m, n, config.scheme)
    if not (np.all(np.isfinite(pair.A)) and np.all(np.isfinite(pair.S))):
        raise NumericalBreakdown("factors contain non-finite entries")
    return pair, trace


def stationarity_check(A_prev, a_next, S, X, i):
    """Check ``sigma_min(S S^T) * ||a_next - A_prev[i]|| <= delta``.

    ``delta`` is the norm of the row gradient of ``0.5 ||X - A S||_F^2`` at
    the updated row, ``||S (X[i]^T - S^T a_next)||``.
    """
    if isinstance(A_prev, FactorPair):
        A_prev = A_prev.A
    S = np.asarray(S, dtype=np.float64)
    a_next = np.asarray(a_next, dtype=np.float64)
    if a_next.shape != (S.shape[0],) or A_prev.shape[1] != S.shape[0]:
        raise DimensionMismatch("row and factor shapes do not conform")
    if not isinstance(X, CSRMatrix):
        X = CSRMatrix.from_dense(X)
    x_row = X.dense_row(i)
    delta = float(np.linalg.norm(S @ (x_row - S.T @ a_next)))
    sigma = smallest_singular_value(S @ S.T)
    lhs = float(sigma * np.linalg.norm(a_next - A_prev[i]))
    return StationarityReport(lhs, delta, lhs <= delta + 1e-8 * (1.0 + delta))
