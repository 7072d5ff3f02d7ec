import numpy as np
import pytest

from kaczfact.alternating import (
    INIT_STREAM,
    FactorizationConfig,
    FactorPair,
    epoch_of,
    factorize,
    init_factors,
    stationarity_check,
)
from kaczfact.errors import RankTooLarge, ZeroDataMatrix, ZeroMatrix
from kaczfact.matrix import CSRMatrix, least_squares_solve
from kaczfact.rng import RngState
from kaczfact.solvers import SolverSpec, brk_update_row

ALS = SolverSpec("exact")


def low_rank(m, n, k, seed):
    rng = np.random.default_rng(seed)
    A, S = rng.random((m, k)), rng.random((k, n))
    return CSRMatrix.from_dense(A @ S), A, S


def noisy(m, n, seed, density=0.4):
    rng = np.random.default_rng(seed)
    D = rng.random((m, n)) * (rng.random((m, n)) < density)
    return CSRMatrix.from_dense(D)


def full_block(L=1):
    return SolverSpec("brk", subiterations=L)


class TestInit:
    def test_determinism(self):
        a, b = init_factors(10, 7, 3, RngState(5)), init_factors(10, 7, 3, RngState(5))
        np.testing.assert_array_equal(a.A, b.A)
        np.testing.assert_array_equal(a.S, b.S)

    def test_shapes(self):
        pair = init_factors(10, 7, 3, RngState(0))
        assert pair.A.shape == (10, 3) and pair.S.shape == (3, 7)

    def test_mean(self):
        pair = init_factors(1000, 1000, 500, RngState(1))
        vals = np.concatenate([pair.A.ravel(), pair.S.ravel()])
        assert vals.size == 10**6
        assert abs(vals.mean() - 0.5) < 0.01
        assert vals.min() >= 0.0 and vals.max() < 1.0

    def test_rank_too_large(self):
        with pytest.raises(RankTooLarge):
            init_factors(5, 4, 4, RngState(0))


class TestConfig:
    def test_block_sizes_round_half_up(self):
        cfg = FactorizationConfig(2, full_block(), row_block_fraction=0.25, col_block_fraction=0.5)
        assert cfg.block_sizes(10, 5) == (3, 3)
        cfg = FactorizationConfig(2, full_block(), row_block_fraction=0.01, col_block_fraction=1.0)
        assert cfg.block_sizes(10, 5) == (1, 5)
        assert cfg.block_sizes(100_000, 1000) == (1000, 1000)

    def test_rk_blocks(self):
        cfg = FactorizationConfig(2, SolverSpec("rk"))
        assert cfg.block_sizes(30, 20) == (1, 1)

    @pytest.mark.parametrize("kw", [{"scheme": "hybrid"}, {"row_block_fraction": 0.0},
                                    {"col_block_fraction": 1.5}, {"rank": 0}, {"trace_interval": 0}])
    def test_invalid(self, kw):
        base = {"rank": 2}
        base.update(kw)
        with pytest.raises(ValueError):
            FactorizationConfig(**base)


class TestEpoch:
    def test_examples(self):
        assert epoch_of(2000, 1000, 1000) == 2
        assert epoch_of(0, 1000, 1000) == 0
        assert epoch_of(7, 10, 10, "cyclic") == 7
        assert epoch_of(999, 100_000, 1000) == 0


class TestFactorize:
    def test_exact_recovery_cyclic(self):
        X, _, _ = low_rank(50, 50, 5, 0)
        cfg = FactorizationConfig(5, ALS, scheme="cyclic", alternating_iterations=200, trace_interval=50)
        pair, trace = factorize(X, cfg)
        assert trace[-1].relative_error < 1e-6
        assert trace[-1].epoch == 200

    def test_full_block_matches_als(self):
        X = noisy(30, 25, 1)
        kw = dict(rank=4, alternating_iterations=150, trace_interval=10, seed=3)
        _, t_als = factorize(X, FactorizationConfig(solver=ALS, **kw))
        _, t_brk = factorize(X, FactorizationConfig(solver=full_block(), **kw))
        assert [r.iteration for r in t_als] == [r.iteration for r in t_brk]
        np.testing.assert_allclose([r.relative_error for r in t_brk],
                                   [r.relative_error for r in t_als], rtol=0, atol=1e-10)

    def test_determinism(self):
        X = noisy(20, 30, 2)
        cfg = FactorizationConfig(3, SolverSpec("brk", sampling="weighted", subiterations=3),
                                  row_block_fraction=0.3, col_block_fraction=0.5,
                                  alternating_iterations=60, trace_interval=7, seed=11)
        p1, t1 = factorize(X, cfg)
        p2, t2 = factorize(X, cfg)
        np.testing.assert_array_equal(p1.A, p2.A)
        np.testing.assert_array_equal(p1.S, p2.S)
        assert [(r.iteration, r.rows_touched, r.cols_touched) for r in t1] == \
               [(r.iteration, r.rows_touched, r.cols_touched) for r in t2]
        np.testing.assert_allclose([r.relative_error for r in t1], [r.relative_error for r in t2], rtol=1e-12)

    def test_seed_changes_result(self):
        X = noisy(20, 20, 3)
        cfg = FactorizationConfig(3, ALS, alternating_iterations=5)
        a, _ = factorize(X, cfg)
        b, _ = factorize(X, FactorizationConfig(3, ALS, alternating_iterations=5, seed=1))
        assert not np.array_equal(a.A, b.A)

    @pytest.mark.parametrize("solver", [ALS, full_block()])
    @pytest.mark.parametrize("shape", [(24, 16), (12, 30)])
    def test_objective_monotone_per_update(self, solver, shape):
        X = noisy(*shape, 4)
        D = X.toarray()
        values = []

        def hook(kind, index, A, S):
            assert A.shape == (shape[0], 3) and S.shape == (3, shape[1])
            values.append(np.linalg.norm(D - A @ S))

        cfg = FactorizationConfig(3, solver, alternating_iterations=40)
        factorize(X, cfg, callback=hook)
        v = np.array(values)
        assert np.all(np.diff(v) <= 1e-10)

    def test_schedule_counts(self):
        X = noisy(70, 20, 5)
        cfg = FactorizationConfig(3, ALS, alternating_iterations=9)
        seen = []
        pair, _ = factorize(X, cfg, callback=lambda kind, i, A, S: seen.append(kind))
        # ceil(70 / 20) = 4 row updates, then one column update, per step
        assert seen[:5] == ["row"] * 4 + ["col"]
        assert pair.stats.row_updates == 36 and pair.stats.col_updates == 9

    def test_wide_puts_columns_first(self):
        X = noisy(10, 25, 6)
        seen = []
        factorize(X, FactorizationConfig(3, ALS, alternating_iterations=2), callback=lambda k, i, A, S: seen.append(k))
        assert seen[:4] == ["col"] * 3 + ["row"]

    def test_targets_without_replacement(self):
        X = noisy(15, 15, 7)
        rows = []
        factorize(X, FactorizationConfig(3, ALS, alternating_iterations=30),
                  callback=lambda k, i, A, S: rows.append(i) if k == "row" else None)
        assert sorted(rows[:15]) == list(range(15)) and sorted(rows[15:]) == list(range(15))

    def test_cyclic_order(self):
        X = noisy(6, 5, 8)
        seen = []
        factorize(X, FactorizationConfig(2, ALS, scheme="cyclic", alternating_iterations=1),
                  callback=lambda k, i, A, S: seen.append((k, i)))
        assert seen == [("row", j) for j in range(6)] + [("col", i) for i in range(5)]

    def test_memory_contract(self):
        X = noisy(40, 30, 9)
        cfg = FactorizationConfig(3, SolverSpec("brk"), row_block_fraction=0.3, col_block_fraction=0.5,
                                  alternating_iterations=50)
        pair, trace = factorize(X, cfg)
        st = pair.stats
        assert st.max_rows_per_col_update <= 0.3 * 40
        assert st.max_cols_per_row_update <= 0.5 * 30
        assert st.rows_touched == 12 * st.col_updates
        assert trace[-1].cols_touched == 15 * st.row_updates

    def test_shapes_and_trace_grid(self):
        X = noisy(20, 14, 10)
        pair, trace = factorize(X, FactorizationConfig(4, SolverSpec("rk", subiterations=5),
                                                       alternating_iterations=23, trace_interval=5))
        assert pair.A.shape == (20, 4) and pair.S.shape == (4, 14)
        assert [r.iteration for r in trace] == [0, 5, 10, 15, 20, 23]
        assert pair.iteration == 23 and pair.epoch == 1
        walls = [r.wall_time_s for r in trace]
        assert walls[0] == 0.0 and all(b >= a for a, b in zip(walls, walls[1:]))

    def test_initial_record_is_random_init(self):
        X = noisy(20, 14, 11)
        cfg = FactorizationConfig(4, ALS, alternating_iterations=1, seed=2)
        _, trace = factorize(X, cfg)
        init = init_factors(20, 14, 4, RngState(2, INIT_STREAM))
        expect = np.linalg.norm(X.toarray() - init.A @ init.S) / np.linalg.norm(X.toarray())
        assert trace[0].relative_error == pytest.approx(expect, rel=1e-12)

    def test_weighted_handles_zero_rows(self):
        # zero data rows drive factor rows to zero, leaving zero sampling weights
        D = noisy(20, 20, 12).toarray()
        D[:15] = 0.0
        cfg = FactorizationConfig(3, SolverSpec("brk", sampling="weighted"), row_block_fraction=0.5,
                                  alternating_iterations=100)
        _, trace = factorize(CSRMatrix.from_dense(D), cfg)
        assert np.isfinite(trace[-1].relative_error)

    def test_rejects_zero_and_rank(self):
        with pytest.raises(ZeroDataMatrix):
            factorize(CSRMatrix.from_dense(np.zeros((5, 5))), FactorizationConfig(2))
        with pytest.raises(RankTooLarge):
            factorize(noisy(5, 4, 0), FactorizationConfig(4))

    def test_convergence_diagnostic(self):
        # UBRK with half blocks keeps improving over a few epochs on exact low-rank data
        X, _, _ = low_rank(60, 60, 4, 13)
        cfg = FactorizationConfig(4, SolverSpec("brk"), row_block_fraction=0.5, col_block_fraction=0.5,
                                  alternating_iterations=300, trace_interval=60)
        _, trace = factorize(X, cfg)
        errs = [r.relative_error for r in trace]
        assert errs[-1] < 0.1 * errs[0]


@pytest.fixture(scope="module")
def converged():
    X, _, _ = low_rank(50, 50, 5, 20)
    cfg = FactorizationConfig(5, ALS, scheme="cyclic", alternating_iterations=200, trace_interval=200)
    pair, trace = factorize(X, cfg)
    assert trace[-1].relative_error < 1e-8
    return X, pair


class TestStationarity:
    def test_exact_solution(self, converged):
        X, pair = converged
        a_next = least_squares_solve(pair.S.T, X.dense_row(3))
        rep = stationarity_check(pair, a_next, pair.S, X, 3)
        assert rep.lhs < 1e-8 and rep.delta < 1e-8 and rep.satisfied

    def test_no_movement(self):
        X = noisy(10, 10, 21)
        pair = init_factors(10, 10, 3, RngState(0))
        rep = stationarity_check(pair, pair.A[2].copy(), pair.S, X, 2)
        assert rep.lhs == 0.0 and rep.satisfied

    def test_brk_row_updates(self, converged):
        X, pair = converged
        rng = RngState(22)
        for _ in range(100):
            j = int(rng.integers(50))
            tau = rng.permutation(50)[: 1 + int(rng.integers(50))]
            a_next = brk_update_row(pair.A, X, pair.S, j, tau)
            assert stationarity_check(pair.A, a_next, pair.S, X, j).satisfied

    def test_zero_s(self):
        X = noisy(6, 6, 23)
        with pytest.raises(ZeroMatrix):
            stationarity_check(np.ones((6, 2)), np.ones(2), np.zeros((2, 6)), X, 0)

    def test_factor_pair_or_array(self, converged):
        X, pair = converged
        a = pair.A[1] + 0.1
        r1 = stationarity_check(pair, a, pair.S, X, 1)
        r2 = stationarity_check(FactorPair(pair.A, pair.S).A, a, pair.S, X, 1)
        assert r1 == r2
