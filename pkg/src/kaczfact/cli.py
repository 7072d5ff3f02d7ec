"""Command-line entry point: ``kaczfact {run,compare,ingest,generate,footprint}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .alternating import FactorizationConfig
from .bench import ExperimentSpec, compare_summaries, load_dataset, memory_footprint, run_experiment
from .datagen import gen_large_synthetic, gen_small_synthetic
from .errors import KaczfactError
from .ingest import load_ratings, matrix_report
from .mmio import write_mtx
from .solvers import SolverSpec


def _config_args(p):
    p.add_argument("--rank", type=int, default=50)
    p.add_argument("--solver", choices=("als", "rk", "ubrk", "wbrk"), default="ubrk")
    p.add_argument("--row-block-frac", type=float, default=1.0,
                   help="fraction of rows of A sampled per column update")
    p.add_argument("--col-block-frac", type=float, default=1.0,
                   help="fraction of columns of S sampled per row update")
    p.add_argument("--scheme", choices=("stochastic", "cyclic"), default="stochastic")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--subiters", type=int, default=1)
    p.add_argument("--epsilon", type=float, default=None,
                   help="subiteration exit tolerance (default 1e-8 * ||b||)")
    p.add_argument("--seed", type=int, default=0)


def _config(ns):
    solver = SolverSpec.named(ns.solver, subiterations=ns.subiters, epsilon=ns.epsilon)
    return FactorizationConfig(
        rank=ns.rank,
        solver=solver,
        scheme=ns.scheme,
        row_block_fraction=ns.row_block_frac,
        col_block_fraction=ns.col_block_frac,
        alternating_iterations=ns.iters,
        seed=ns.seed,
        trace_interval=getattr(ns, "trace_interval", 1) or 1,
    )


def build_parser():
    parser = argparse.ArgumentParser(prog="kaczfact", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run factorization trials and write CSV traces")
    run.add_argument("--dataset", required=True,
                     help="synthetic-small | synthetic-large | csv:<path> | mtx:<path>")
    _config_args(run)
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--trace-interval", type=int, default=10)
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--limit", type=int, default=None, help="cap on CSV lines read")
    run.add_argument("--no-wall-time", action="store_true",
                     help="write 0 for wall_time_s so repeated runs are byte-identical")

    cmp_ = sub.add_parser("compare", help="compare two summary.csv files")
    cmp_.add_argument("summary_a")
    cmp_.add_argument("summary_b")
    cmp_.add_argument("--threshold", type=float, action="append", default=None)

    ing = sub.add_parser("ingest", help="convert a ratings CSV to Matrix Market")
    ing.add_argument("csv")
    ing.add_argument("--out", required=True)
    ing.add_argument("--limit", type=int, default=None)

    gen = sub.add_parser("generate", help="write a synthetic matrix in Matrix Market format")
    gen.add_argument("size", choices=("small", "large"))
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--rows", type=int, default=None)
    gen.add_argument("--out", required=True)

    fp = sub.add_parser("footprint", help="per-update working-set estimate vs ALS")
    fp.add_argument("--dataset", default=None)
    fp.add_argument("--rows", type=int, default=None)
    fp.add_argument("--cols", type=int, default=None)
    _config_args(fp)
    return parser


def _cmd_run(ns):
    spec = ExperimentSpec(ns.dataset, _config(ns), ns.trials, ns.out, ns.limit, not ns.no_wall_time)
    result = run_experiment(spec)
    final = [tr[-1].relative_error for tr in result.traces]
    print(f"wrote {len(result.trace_paths)} trace(s) and {result.summary_path}")
    print(f"final relative error (mean over trials): {sum(final) / len(final):.6g}")


def _cmd_compare(ns):
    report = compare_summaries(ns.summary_a, ns.summary_b, ns.threshold or (0.2,))
    report["crossings"] = {str(k): v for k, v in report["crossings"].items()}
    print(json.dumps(report, indent=2))


def _cmd_ingest(ns):
    X, _, report = load_ratings(ns.csv, limit=ns.limit)
    write_mtx(ns.out, X)
    print(json.dumps(report, indent=2))


def _cmd_generate(ns):
    if ns.size == "small":
        data = gen_small_synthetic(ns.seed, m=ns.rows or 1000)
    else:
        data = gen_large_synthetic(ns.seed, m=ns.rows or 100_000)
    write_mtx(ns.out, data.X)
    print(json.dumps(matrix_report(data.X), indent=2))


def _cmd_footprint(ns):
    if ns.dataset:
        m, n = load_dataset(ns.dataset, seed=ns.seed).shape
    elif ns.rows and ns.cols:
        m, n = ns.rows, ns.cols
    else:
        raise SystemExit("footprint needs --dataset or both --rows and --cols")
    fp = memory_footprint(_config(ns), m, n, ns.rank)
    print(json.dumps({
        "rows": m, "cols": n, "rank": ns.rank,
        "als_bytes_per_col_update": fp.als_col_update,
        "als_bytes_per_row_update": fp.als_row_update,
        "bytes_per_col_update": fp.col_update,
        "bytes_per_row_update": fp.row_update,
        "row_block_ratio": fp.row_block_ratio,
        "col_block_ratio": fp.col_block_ratio,
        "combined_ratio": fp.combined_ratio,
    }, indent=2))


COMMANDS = {
    "run": _cmd_run,
    "compare": _cmd_compare,
    "ingest": _cmd_ingest,
    "generate": _cmd_generate,
    "footprint": _cmd_footprint,
}


def main(argv=None):
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[ns.command](ns)
    except (KaczfactError, OSError, ValueError) as exc:
        print(f"kaczfact: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
