"""Experiment harness: repeated factorization trials, CSV traces, summaries."""
from __future__ import annotations

import csv
import dataclasses
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .alternating import FactorizationConfig, TraceRecord, factorize
from .datagen import gen_large_synthetic, gen_small_synthetic
from .errors import GridMismatch
from .ingest import load_ratings
from .mmio import read_mtx
from .rng import trial_seed

logger = logging.getLogger(__name__)

TRACE_FIELDS = ("trial", "iteration", "epoch", "relative_error", "wall_time_s", "rows_touched", "cols_touched")
SUMMARY_FIELDS = ("iteration", "epoch", "trials", "mean_relative_error", "std_relative_error", "mean_wall_time_s")
BYTES_PER_ENTRY = 8


@dataclass
class ExperimentSpec:
    dataset: str
    config: FactorizationConfig
    trials: int = 1
    out: Path = Path("results")
    limit: int | None = None
    record_wall_time: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        self.out = Path(self.out)


@dataclass
class ExperimentResult:
    trace_paths: list
    summary_path: Path
    traces: list


def load_dataset(name, seed=0, limit=None):
    """Resolve ``synthetic-small``, ``synthetic-large``, ``csv:<path>`` or ``mtx:<path>``."""
    if name == "synthetic-small":
        return gen_small_synthetic(seed).X
    if name == "synthetic-large":
        return gen_large_synthetic(seed).X
    if name.startswith("csv:"):
        return load_ratings(name[4:], limit=limit)[0]
    if name.startswith("mtx:"):
        return read_mtx(name[4:])
    raise ValueError(f"unknown dataset {name!r}")


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_trace(path, records, record_wall_time=True):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_FIELDS)
        for rec in records:
            row = dataclasses.astuple(rec)
            if not record_wall_time:
                row = row[:4] + (0.0,) + row[5:]
            w.writerow([_fmt(v) for v in row])


def read_trace(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        TraceRecord(int(r["trial"]), int(r["iteration"]), int(r["epoch"]), float(r["relative_error"]),
                    float(r["wall_time_s"]), int(r["rows_touched"]), int(r["cols_touched"]))
        for r in rows
    ]


def summarize(traces):
    """Per-iteration mean over trials.  All traces must share one grid."""
    grid = [r.iteration for r in traces[0]]
    for tr in traces[1:]:
        if [r.iteration for r in tr] != grid:
            raise GridMismatch("trial traces have different iteration grids")
    rows = []
    for idx, it in enumerate(grid):
        errs = np.array([tr[idx].relative_error for tr in traces])
        times = np.array([tr[idx].wall_time_s for tr in traces])
        rows.append({
            "iteration": it,
            "epoch": traces[0][idx].epoch,
            "trials": len(traces),
            "mean_relative_error": float(errs.mean()),
            "std_relative_error": float(errs.std()),
            "mean_wall_time_s": float(times.mean()),
        })
    return rows


def write_summary(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_FIELDS)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in SUMMARY_FIELDS])


def read_summary(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise GridMismatch(f"{path} has no data rows")
    return {
        "iteration": np.array([int(r["iteration"]) for r in rows]),
        "mean_relative_error": np.array([float(r["mean_relative_error"]) for r in rows]),
        "mean_wall_time_s": np.array([float(r["mean_wall_time_s"]) for r in rows]),
    }


def _threads():
    try:
        return max(1, int(os.environ.get("KACZFACT_THREADS", "1")))
    except ValueError:
        return 1


def run_experiment(spec, X=None):
    """Run ``spec.trials`` independent factorizations and write CSV output.

    Trial ``t`` uses seed ``config.seed XOR (t + 1)``; the dataset itself is
    generated from ``config.seed``.  Trials run on up to ``KACZFACT_THREADS``
    worker threads and give identical numbers either way.
    """
    cfg = spec.config
    if X is None:
        X = load_dataset(spec.dataset, seed=cfg.seed, limit=spec.limit)
    spec.out.mkdir(parents=True, exist_ok=True)

    def one(t):
        trial_cfg = dataclasses.replace(cfg, seed=trial_seed(cfg.seed, t))
        _, trace = factorize(X, trial_cfg, trial=t)
        path = spec.out / f"trace_trial{t:03d}.csv"
        write_trace(path, trace, spec.record_wall_time)
        logger.info("trial %d: final relative error %.6g", t, trace[-1].relative_error)
        return path, trace

    workers = min(_threads(), spec.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(spec.trials)))
    else:
        results = [one(t) for t in range(spec.trials)]
    traces = [tr for _, tr in results]
    if not spec.record_wall_time:
        traces = [[dataclasses.replace(r, wall_time_s=0.0) for r in tr] for tr in traces]
    summary_path = spec.out / "summary.csv"
    write_summary(summary_path, summarize(traces))
    return ExperimentResult([p for p, _ in results], summary_path, traces)


@dataclass(frozen=True)
class MemoryFootprint:
    """Working-set bytes of one column update of ``S`` and one row update of ``A``.

    A column update reads ``r1`` rows of ``A`` plus ``r1`` entries of ``X``;
    a row update reads ``r2`` columns of ``S`` plus ``r2`` entries of ``X``.
    Exact least squares reads everything (``r1 = m``, ``r2 = n``).
    """

    als_col_update: int
    als_row_update: int
    col_update: int
    row_update: int

    @property
    def row_block_ratio(self):
        """Share of ``A`` rows read per column update, relative to ALS."""
        return self.col_update / self.als_col_update

    @property
    def col_block_ratio(self):
        return self.row_update / self.als_row_update

    @property
    def combined_ratio(self):
        return (self.col_update + self.row_update) / (self.als_col_update + self.als_row_update)


def memory_footprint(config, m, n, k):
    r1, r2 = (m, n) if config.solver.kind == "exact" else config.block_sizes(m, n)
    return MemoryFootprint(
        als_col_update=(m * k + m) * BYTES_PER_ENTRY,
        als_row_update=(n * k + n) * BYTES_PER_ENTRY,
        col_update=(r1 * k + r1) * BYTES_PER_ENTRY,
        row_update=(r2 * k + r2) * BYTES_PER_ENTRY,
    )


def _first_crossing(iterations, errors, threshold):
    hit = np.flatnonzero(errors <= threshold)
    return int(iterations[hit[0]]) if hit.size else None


def compare_summaries(path_a, path_b, thresholds=(0.2,)):
    """Compare two summary files.

    When the iteration grids differ, ``b`` is linearly interpolated onto the
    part of ``a``'s grid they share.  Reports the final-error gap ``b - a``,
    each run's first iteration at or below every threshold, and the ratio of
    final mean wall times ``b / a``.
    """
    a, b = read_summary(path_a), read_summary(path_b)
    ia, ib = a["iteration"], b["iteration"]
    if np.array_equal(ia, ib):
        grid, ea, eb, ta, tb = ia, a["mean_relative_error"], b["mean_relative_error"], a["mean_wall_time_s"], b["mean_wall_time_s"]
    else:
        lo, hi = max(ia[0], ib[0]), min(ia[-1], ib[-1])
        grid = ia[(ia >= lo) & (ia <= hi)]
        if grid.size == 0:
            raise GridMismatch("summaries share no iteration range")
        ea = a["mean_relative_error"][(ia >= lo) & (ia <= hi)]
        ta = a["mean_wall_time_s"][(ia >= lo) & (ia <= hi)]
        eb = np.interp(grid, ib, b["mean_relative_error"])
        tb = np.interp(grid, ib, b["mean_wall_time_s"])
    crossings = {
        float(t): (_first_crossing(grid, ea, t), _first_crossing(grid, eb, t)) for t in thresholds
    }
    ratio = float(tb[-1] / ta[-1]) if ta[-1] > 0 else (1.0 if tb[-1] == ta[-1] else float("inf"))
    return {
        "final_iteration": int(grid[-1]),
        "final_error_a": float(ea[-1]),
        "final_error_b": float(eb[-1]),
        "final_error_gap": float(eb[-1] - ea[-1]),
        "crossings": crossings,
        "wall_time_ratio": ratio,
    }
