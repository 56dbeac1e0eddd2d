"""Command-line interface: ``dfgof {test,table,simulate,verify}``.

Exit codes: 0 success (a rejected null is still 0, the report carries the
decision), 1 a ``verify`` check failed, 2 usage or I/O error, 3 statistical
error (reported as a JSON object on stdout).
"""
from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .discretization import DiscreteDistribution, counts_from_sample, grid_from_config
from .errors import DfgofError, StatisticalError
from .families import FAMILIES, make_family
from .gof import (STATISTICS, GaussianTargetModel, SampledModel, UniformTarget, atomic_write_text,
                  mc_null_table, run_test)
from .kt1 import VARIANTS, kt1_innovations, mle_discrete
from .operators import big_pi
from .processes import project_increments, simulate_bm_increments
from .rng import replicate_stream
from .scores import score_set

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_STATISTICAL = 0, 1, 2, 3
PROCESSES = ("bm", "bridge", "projected", "rotated", "kt1")


@dataclass
class RunConfig:
    command: str
    family: str = "exponential"
    params: Optional[list] = None
    estimate: Optional[list] = None
    grid: dict = field(default_factory=lambda: {"scheme": "equiprobable", "cells": 20})
    lower_bound: Optional[float] = None
    target_K: Optional[int] = None
    statistic: str = "ks"
    reps: int = 5000
    seed: Optional[int] = 0
    data: Optional[Path] = None
    out: Optional[Path] = None
    alpha: float = 0.05
    process: str = "bm"
    n: int = 1000
    replicates: int = 10
    kt1_variant: str = "uncentred"
    cutoff: Optional[int] = None
    tolerance: float = 1e-9
    quick: bool = False


def _positive_int(minimum: int):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if v < minimum:
            raise argparse.ArgumentTypeError(f"must be >= {minimum}, got {v}")
        return v
    return parse


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _name_list(text):
    names = [t.strip() for t in text.split(",") if t.strip()]
    return [] if names == ["none"] else names


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dfgof", description="Distribution-free goodness-of-fit tests.")
    sub = parser.add_subparsers(dest="command", required=True)

    def model_args(p, cells_default=20):
        p.add_argument("--family", choices=sorted(FAMILIES), default="exponential")
        p.add_argument("--params", type=_float_list, help="all natural parameters, comma separated")
        p.add_argument("--estimate", type=_name_list,
                       help="parameters to estimate, comma separated ('none' for a fully specified model)")
        g = p.add_mutually_exclusive_group()
        g.add_argument("--cells", type=_positive_int(2), default=None,
                       help=f"equiprobable cells at the starting parameter (default {cells_default})")
        g.add_argument("--edges", type=_float_list, help="left cell edges, first one the support floor")
        p.add_argument("--lower-bound", type=float)

    t = sub.add_parser("test", help="test a CSV sample and write a JSON report")
    t.add_argument("--data", type=Path, required=True)
    model_args(t)
    t.add_argument("--statistic", choices=sorted(STATISTICS), default="ks")
    t.add_argument("--reps", type=_positive_int(1000), default=5000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--tolerance", type=float, default=1e-9)
    t.add_argument("--out", type=Path)

    tb = sub.add_parser("table", help="write a Monte-Carlo null table for the uniform target")
    tb.add_argument("--cells", type=_positive_int(2), required=True)
    tb.add_argument("--K", type=_positive_int(0), default=0)
    tb.add_argument("--statistic", choices=sorted(STATISTICS), default="ks")
    tb.add_argument("--reps", type=_positive_int(1000), default=5000)
    tb.add_argument("--seed", type=int, required=True)
    tb.add_argument("--out", type=Path)

    s = sub.add_parser("simulate", help="write simulated process paths as CSV")
    s.add_argument("--process", choices=PROCESSES, default="bm")
    model_args(s)
    s.add_argument("--n", type=_positive_int(1), default=1000, help="sample size for sampled processes")
    s.add_argument("--replicates", type=_positive_int(1), default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--kt1-variant", choices=VARIANTS, default="uncentred")
    s.add_argument("--cutoff", type=_positive_int(0))
    s.add_argument("--out", type=Path)

    v = sub.add_parser("verify", help="run the invariant checks of every module")
    v.add_argument("--quick", action="store_true", help="fewer replicates")
    v.add_argument("--out", type=Path)
    return parser


def parse_args(argv=None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(command=ns.command, out=ns.out)
    if ns.command in ("test", "simulate"):
        cfg.family, cfg.params, cfg.estimate = ns.family, ns.params, ns.estimate
        cfg.lower_bound, cfg.seed = ns.lower_bound, ns.seed
        if ns.edges is not None:
            cfg.grid = {"scheme": "edges", "edges": ns.edges}
        else:
            cfg.grid = {"scheme": "equiprobable", "cells": ns.cells or 20}
    if ns.command == "test":
        cfg.data, cfg.statistic, cfg.reps = ns.data, ns.statistic, ns.reps
        cfg.alpha, cfg.tolerance = ns.alpha, ns.tolerance
    elif ns.command == "table":
        cfg.grid = {"scheme": "equiprobable", "cells": ns.cells}
        cfg.target_K, cfg.statistic, cfg.reps, cfg.seed = ns.K, ns.statistic, ns.reps, ns.seed
        if ns.K >= ns.cells:
            build_parser().error("table: --K must be smaller than --cells")
    elif ns.command == "simulate":
        cfg.process, cfg.n, cfg.replicates = ns.process, ns.n, ns.replicates
        cfg.kt1_variant, cfg.cutoff = ns.kt1_variant, ns.cutoff
    elif ns.command == "verify":
        cfg.quick = ns.quick
    return cfg


# -- input -----------------------------------------------------------------------

def load_csv(path: Path) -> np.ndarray:
    """One value per line (or two comma-separated for 2-D data); an optional
    non-numeric first line is treated as a header."""
    rows = []
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    for k, line in enumerate(lines):
        try:
            rows.append([float(t) for t in line.split(",")])
        except ValueError:
            if k == 0:
                continue
            raise ValueError(f"{path}: line {k + 1} is not numeric: {line!r}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = {len(r) for r in rows}
    if len(width) != 1 or width.pop() not in (1, 2):
        raise ValueError(f"{path}: every row needs the same number of values (1 or 2)")
    arr = np.array(rows)
    return arr[:, 0] if arr.shape[1] == 1 else arr


def starting_values(family: str, sample: np.ndarray) -> list:
    """Moment estimates of all natural parameters, used when --params is omitted."""
    m, sd = float(np.mean(sample)), float(np.std(sample))
    if family == "exponential":
        return [1.0 / m]
    if family == "normal":
        return [m, sd]
    half = np.sqrt(3.0) * sd
    return [min(m - half, float(np.min(sample))), max(m + half, float(np.max(sample)))]


# -- commands --------------------------------------------------------------------

def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(out, text)


def _run_test(cfg: RunConfig) -> int:
    x = load_csv(cfg.data)
    if x.ndim != 1:
        raise ValueError("test expects one value per line")
    params = cfg.params if cfg.params is not None else starting_values(cfg.family, x)
    family, theta0 = make_family(cfg.family, params, cfg.estimate)
    grid = grid_from_config(cfg.grid, family, theta0, cfg.lower_bound)
    report = run_test(x, family, grid, theta0, statistic=cfg.statistic, reps=cfg.reps, seed=cfg.seed,
                      alpha=cfg.alpha, tolerance=cfg.tolerance)
    _emit(report.to_json(), cfg.out)
    return EXIT_OK


def _run_table(cfg: RunConfig) -> int:
    model = GaussianTargetModel(UniformTarget(cfg.grid["cells"], cfg.target_K))
    table = mc_null_table(cfg.statistic, model, cfg.reps, cfg.seed)
    _emit(table.to_text(), cfg.out)
    return EXIT_OK


def _paths(cfg: RunConfig, family, theta0, grid: DiscreteDistribution):
    """Yield (cumulative time, path) for each replicate."""
    if cfg.process in ("bridge", "projected"):
        q = np.ones((1, grid.size)) if cfg.process == "bridge" else score_set(family, theta0, grid)
        proj = big_pi(grid.probs, q)
    model = SampledModel(family, theta0, cfg.n, grid)
    for i in range(cfg.replicates):
        if cfg.process == "bm":
            dv = simulate_bm_increments(grid, cfg.seed, i)
        elif cfg.process in ("bridge", "projected"):
            dv = project_increments(simulate_bm_increments(grid, cfg.seed, i), proj)
        elif cfg.process == "rotated":
            dv = model.replicate_process(cfg.seed, i)
        else:
            x = family.sample(theta0, replicate_stream(cfg.seed, i), cfg.n)
            counts = counts_from_sample(x, grid)
            theta_hat = mle_discrete(counts, family, theta0, grid)
            dv = kt1_innovations(counts, family, theta_hat, grid, cfg.cutoff, cfg.kt1_variant)
        yield np.cumsum(dv.probs), np.cumsum(dv.values)


def _run_simulate(cfg: RunConfig) -> int:
    family, theta0 = make_family(cfg.family, cfg.params, cfg.estimate)
    grid = grid_from_config(cfg.grid, family, theta0, cfg.lower_bound)
    buf = io.StringIO()
    buf.write("cell_index,time,path_value,replicate\n")
    for rep, (t, path) in enumerate(_paths(cfg, family, theta0, grid)):
        for j in range(path.size):
            buf.write(f"{j},{float(t[j])!r},{float(path[j])!r},{rep}\n")
    _emit(buf.getvalue(), cfg.out)
    return EXIT_OK


def _run_verify(cfg: RunConfig) -> int:
    from .verify import run_checks

    summary = run_checks(quick=cfg.quick)
    _emit(json.dumps(summary, indent=2) + "\n", cfg.out)
    return EXIT_OK if summary["passed"] else EXIT_CHECK_FAILED


COMMANDS = {"test": _run_test, "table": _run_table, "simulate": _run_simulate, "verify": _run_verify}


def execute(cfg: RunConfig) -> int:
    try:
        return COMMANDS[cfg.command](cfg)
    except StatisticalError as exc:
        sys.stdout.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return EXIT_STATISTICAL
    except (DfgofError, OSError, ValueError) as exc:
        print(f"dfgof: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None) -> int:
    try:
        cfg = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
