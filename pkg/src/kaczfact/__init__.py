"""Alternating matrix factorization with block randomized Kaczmarz inner solvers."""
from .alternating import (
    AccessStats,
    FactorizationConfig,
    FactorPair,
    NumericalBreakdown,
    StationarityReport,
    TraceRecord,
    epoch_of,
    factorize,
    init_factors,
    stationarity_check,
)
from .bench import ExperimentSpec, compare_summaries, memory_footprint, run_experiment
from .datagen import FactorRecipe, gen_factor, gen_large_synthetic, gen_small_synthetic, sparsity
from .errors import *  # noqa: F401,F403
from .ingest import IdMaps, load_ratings, matrix_report
from .kernels import BACKEND
from .matrix import (
    CSRMatrix,
    col_slice,
    frobenius_norm,
    least_squares_solve,
    numerical_rank,
    relative_error,
    row_slice,
    smallest_singular_value,
    sparse_entry_slice,
    sparse_row_entries,
)
from .mmio import read_mtx, write_mtx
from .rng import RngState, trial_seed
from .sampling import WithoutReplacementPool, next_target, uniform_block, update_schedule, weighted_block
from .solvers import (
    SolverSpec,
    brk_solve,
    brk_step,
    brk_update_column,
    brk_update_row,
    exact_ls_column,
    exact_ls_row,
)

__version__ = "0.1.0"
