"""Test statistics, Monte-Carlo null tables and the end-to-end rotated test."""
from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import kolmogorov

from .discretization import (CellCounts, DiscreteDistribution, cell_probabilities,
                             counts_from_sample, grid_from_config)
from .errors import DimensionMismatch, StatisticalError, TableUnreliable
from .families import ParametricFamily
from .kt1 import mle_discrete
from .operators import big_pi, embed_L, rotation_vk
from .processes import ProcessIncrements, empirical_increments, primal_rotation
from .rng import replicate_stream, standard_normals
from .scores import ScoreSet, p_gram_schmidt, p_norm, score_set

MIN_REPORT_REPS = 1000
MAX_FAILURE_RATE = 0.01
CACHE_ENV = "GOF_CACHE_DIR"


class SmallSampleWarning(UserWarning):
    pass


# -- statistics --------------------------------------------------------------

def chi_squared_stat(counts: Union[CellCounts, np.ndarray], p, n: Optional[int] = None) -> float:
    nu = counts.counts if isinstance(counts, CellCounts) else np.asarray(counts, dtype=float)
    p = np.asarray(p, dtype=float)
    n = int(nu.sum()) if n is None else n
    expected = n * p
    return float(np.sum((nu - expected) ** 2 / expected))


def _ks_rows(values, p):
    return np.max(np.abs(np.cumsum(values, axis=-1)), axis=-1)


def _cvm_rows(values, p):
    return np.sum(np.cumsum(values, axis=-1) ** 2 * p, axis=-1)


def _chisq_rows(values, p):
    return np.sum(values**2 / p, axis=-1)


STATISTICS = {"ks": _ks_rows, "cvm": _cvm_rows, "chisq": _chisq_rows}


def ks_stat(dv: Union[ProcessIncrements, np.ndarray]) -> float:
    """Largest absolute value of the cumulative path."""
    values = dv.values if isinstance(dv, ProcessIncrements) else np.asarray(dv, float)
    return float(_ks_rows(values, None))


def cvm_stat(dv: Union[ProcessIncrements, np.ndarray], p=None) -> float:
    """Sum of squared cumulative path values weighted by cell mass."""
    if isinstance(dv, ProcessIncrements):
        p = dv.probs if p is None else p
        dv = dv.values
    return float(_cvm_rows(np.asarray(dv, float), np.asarray(p, float)))


def process_statistic(name: str, dv: ProcessIncrements) -> float:
    try:
        fn = STATISTICS[name]
    except KeyError:
        raise ValueError(f"unknown statistic {name!r}; choose from {sorted(STATISTICS)}") from None
    return float(fn(dv.values, dv.probs))


def two_sample_ks(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Sup-distance between the two empirical CDFs and its asymptotic p-value."""
    a, b = np.sort(np.asarray(a, float)), np.sort(np.asarray(b, float))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be non-empty")
    pts = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pts, side="right") / a.size
    cdf_b = np.searchsorted(b, pts, side="right") / b.size
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    en = math.sqrt(a.size * b.size / (a.size + b.size))
    return d, float(min(1.0, kolmogorov(en * d))) if d > 0 else 1.0


# -- target distributions ------------------------------------------------------

@dataclass(frozen=True)
class UniformTarget:
    """Discrete uniform time scale on N cells with K synthetic score directions.

    The synthetic scores are the powers t, t^2, ..., t^K at the cell midpoints
    of [0, 1], orthonormalised against the constant in the D_r inner product.
    """

    cells: int
    K: int

    def __post_init__(self):
        if self.cells < 2 or not 0 <= self.K < self.cells:
            raise ValueError(f"uniform target needs cells >= 2 and 0 <= K < cells, got {self.cells}, {self.K}")

    @property
    def distribution(self) -> DiscreteDistribution:
        return DiscreteDistribution(np.arange(self.cells) / self.cells, np.full(self.cells, 1.0 / self.cells), 0.0)

    @property
    def scores(self) -> ScoreSet:
        r = self.distribution.probs
        mid = (np.arange(self.cells) + 0.5) / self.cells
        rows = np.vstack([mid**k for k in range(self.K + 1)])
        return ScoreSet(p_gram_schmidt(rows, r, keep_first=True), r)

    @property
    def name(self) -> str:
        return f"uniform(cells={self.cells},K={self.K})"

    def describe(self) -> dict:
        return {"kind": "uniform", "cells": self.cells, "K": self.K, "scores": "midpoint-powers"}


def spec_hash(spec: dict) -> str:
    return hashlib.sha256(json.dumps(spec, sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class RotationResult:
    increments: ProcessIncrements
    alignment_error: float
    norm_error: float
    annihilation_error: float


def rotate_to_target(dv: ProcessIncrements, q_set: ScoreSet, target: UniformTarget) -> RotationResult:
    """Carry q-projected increments in time P onto the target's time scale."""
    if q_set.K != target.K:
        raise DimensionMismatch(f"source has {q_set.K} score directions, target {target.K}")
    p = dv.probs
    tdist, s_set = target.distribution, target.scores
    r = tdist.probs
    L = embed_L(p, r)
    V = rotation_vk(q_set, s_set, p, r)
    out = primal_rotation(dv, V, L, tdist)
    lvec = np.sqrt(r / p)
    align = max(p_norm(V @ (lvec * s) - q, p) for s, q in zip(s_set.vectors, q_set.vectors))
    d = np.diag(p)
    norm_err = float(np.max(np.abs(V.T @ d @ V.matrix - d)))
    scale = max(1.0, float(np.max(np.abs(dv.values))))
    annih = float(np.max(np.abs(s_set.vectors @ out.values))) / scale
    return RotationResult(out, float(align), norm_err, annih)


# -- null tables ---------------------------------------------------------------

@dataclass(frozen=True)
class GaussianTargetModel:
    """Limit process of the target: s-projected Brownian motion in time R."""

    target: UniformTarget

    def describe(self) -> dict:
        return {"model": "gaussian-target", "target": self.target.describe()}

    @property
    def cells(self) -> int:
        return self.target.cells

    @property
    def K(self) -> int:
        return self.target.K

    def simulate_batch(self, statistic: str, seed: int, start: int, count: int) -> np.ndarray:
        r = self.target.distribution.probs
        proj = big_pi(r, self.target.scores).matrix
        dv = np.empty((count, r.size))
        # one product per replicate keeps results independent of batch size
        for i in range(count):
            dv[i] = proj @ (standard_normals(replicate_stream(seed, start + i), r.size) * np.sqrt(r))
        return STATISTICS[statistic](dv, r)


@dataclass(frozen=True)
class SampledModel:
    """Full pipeline on synthetic data: sample, bin, estimate, rotate (or not), reduce."""

    family: ParametricFamily
    theta: np.ndarray
    n: int
    grid: DiscreteDistribution
    target: Optional[UniformTarget] = None
    rotate: bool = True

    def describe(self) -> dict:
        return {
            "model": "sampled",
            "family": self.family.name,
            "free": list(self.family.param_names),
            "fixed": self.family.fixed,
            "theta": [float(t) for t in np.atleast_1d(self.theta)],
            "n": self.n,
            "atoms": [float(a) for a in self.grid.atoms],
            "target": None if self.target is None else self.target.describe(),
            "rotate": self.rotate,
        }

    @property
    def cells(self) -> int:
        return self.grid.size

    @property
    def K(self) -> int:
        return self.family.param_dim

    def replicate_process(self, seed: int, index: int) -> ProcessIncrements:
        gen = replicate_stream(seed, index)
        x = self.family.sample(self.theta, gen, self.n)
        counts = counts_from_sample(x, self.grid)
        theta_hat = mle_discrete(counts, self.family, self.theta, self.grid)
        p_hat = DiscreteDistribution(
            self.grid.atoms, cell_probabilities(self.family, theta_hat, self.grid.atoms, self.grid.lower_bound),
            self.grid.lower_bound)
        dv = empirical_increments(counts, p_hat)
        if not self.rotate:
            return dv
        q_set = score_set(self.family, theta_hat, self.grid)
        target = self.target or UniformTarget(self.grid.size, self.family.param_dim)
        return rotate_to_target(dv, q_set, target).increments

    def simulate_batch(self, statistic: str, seed: int, start: int, count: int) -> np.ndarray:
        out = np.full(count, np.nan)
        for i in range(count):
            try:
                out[i] = process_statistic(statistic, self.replicate_process(seed, start + i))
            except StatisticalError:
                pass
        return out


Model = Union[GaussianTargetModel, SampledModel]


@dataclass(frozen=True)
class NullTable:
    statistic: str
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", v)

    @property
    def reps(self) -> int:
        return int(self.values.size)

    def p_value(self, observed: float) -> float:
        """(1 + #{table >= observed}) / (reps + 1)."""
        exceed = self.reps - int(np.searchsorted(self.values, observed, side="left"))
        return (1 + exceed) / (self.reps + 1)

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.values, q))

    def to_text(self) -> str:
        head = {"statistic": self.statistic, "reps": self.reps}
        head.update({k: v for k, v in self.metadata.items() if k not in head})
        lines = [f"# {k}: {v if not isinstance(v, dict) else json.dumps(v, sort_keys=True)}"
                 for k, v in head.items()]
        lines.extend(repr(float(v)) for v in self.values)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "NullTable":
        meta, values = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                meta[key.strip()] = val.strip()
            elif line.strip():
                values.append(float(line))
        if "statistic" not in meta:
            raise ValueError("null table file lacks a statistic header")
        if int(meta.get("reps", len(values))) != len(values):
            raise ValueError("null table length does not match its reps header")
        statistic = meta.pop("statistic")
        meta.pop("reps", None)
        return cls(statistic, np.array(values), meta)

    def write(self, path: Union[str, Path]) -> Path:
        return atomic_write_text(Path(path), self.to_text())

    @classmethod
    def read(cls, path: Union[str, Path]) -> "NullTable":
        return cls.from_text(Path(path).read_text())


def atomic_write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def table_cache_path(cache_dir: Union[str, Path], statistic: str, model: Model, reps: int, seed: int) -> Path:
    name = f"{statistic}_{spec_hash(model.describe())}_N{model.cells}_K{model.K}_r{reps}_s{seed}.txt"
    return Path(cache_dir) / name


def mc_null_table(statistic: str, model: Model, reps: int, seed: int,
                  cache_dir: Union[str, Path, None] = None, batch: int = 2000) -> NullTable:
    """Null distribution of ``statistic`` from ``reps`` independent replicates.

    Failed replicates (estimation not converging and the like) are replaced
    by further replicate indices so the table always holds ``reps`` values;
    more than 1% failures raises :class:`TableUnreliable`.
    """
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}")
    if reps < MIN_REPORT_REPS:
        raise ValueError(f"null tables need at least {MIN_REPORT_REPS} replicates, got {reps}")
    path = None
    if cache_dir is not None:
        path = table_cache_path(cache_dir, statistic, model, reps, seed)
        if path.exists():
            return NullTable.read(path)
    values, failures, start = [], 0, 0
    limit = int(math.floor(MAX_FAILURE_RATE * reps))
    while len(values) < reps:
        count = min(batch, reps - len(values))
        chunk = model.simulate_batch(statistic, seed, start, count)
        start += count
        ok = chunk[np.isfinite(chunk)]
        failures += count - ok.size
        if failures > limit:
            raise TableUnreliable(f"{failures} failed replicates exceed {MAX_FAILURE_RATE:.0%} of {reps}")
        values.extend(ok.tolist())
    meta = {"seed": seed, "model_hash": spec_hash(model.describe()), "cells": model.cells,
            "K": model.K, "failures": failures, "model": model.describe()}
    table = NullTable(statistic, np.array(values[:reps]), meta)
    if path is not None:
        table.write(path)
    return table


# -- end-to-end test -----------------------------------------------------------

REPORT_FIELDS = ("statistic_name", "statistic_value", "p_value", "theta_hat", "n", "cells",
                 "target", "replicates", "seed", "diagnostics")


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # not a pytest class

    statistic_name: str
    statistic_value: float
    p_value: float
    theta_hat: Optional[list]
    n: int
    cells: int
    target: str
    replicates: int
    seed: int
    diagnostics: list

    def __post_init__(self):
        if not 0.0 <= self.p_value <= 1.0:
            raise ValueError("p-value outside [0, 1]")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in REPORT_FIELDS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def diagnostic(self, name: str) -> dict:
        for d in self.diagnostics:
            if d["name"] == name:
                return d
        raise KeyError(name)


def run_test(sample, family: ParametricFamily, grid: Union[dict, DiscreteDistribution],
             theta0=None, target: Optional[UniformTarget] = None, statistic: str = "ks",
             reps: int = 5000, seed: int = 0, table: Optional[NullTable] = None,
             cache_dir: Union[str, Path, None] = None, alpha: float = 0.05,
             tolerance: float = 1e-9) -> TestReport:
    """Bin, estimate, rotate to a parameter-free target, and refer the statistic
    to the target's Monte-Carlo null table."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}")
    if theta0 is None and family.param_dim:
        raise ValueError("starting parameter values are required for an estimated family")
    theta0 = family.check_theta(np.zeros(0) if theta0 is None else theta0)
    dist = grid if isinstance(grid, DiscreteDistribution) else grid_from_config(grid, family, theta0)
    counts = counts_from_sample(x, dist)
    n = counts.sample_size
    theta_hat = mle_discrete(counts, family, theta0, dist)
    p_hat = DiscreteDistribution(dist.atoms, cell_probabilities(family, theta_hat, dist.atoms, dist.lower_bound),
                                 dist.lower_bound)
    q_set = score_set(family, theta_hat, dist)
    dv = empirical_increments(counts, p_hat)
    target = target or UniformTarget(dist.size, family.param_dim)
    rot = rotate_to_target(dv, q_set, target)
    value = process_statistic(statistic, rot.increments)
    if table is None:
        if cache_dir is None:
            cache_dir = os.environ.get(CACHE_ENV)
        table = mc_null_table(statistic, GaussianTargetModel(target), reps, seed, cache_dir)
    elif table.statistic != statistic:
        raise ValueError(f"null table is for {table.statistic!r}, not {statistic!r}")
    p_value = table.p_value(value)

    min_expected = float(np.min(n * p_hat.probs))
    if min_expected < 5:
        warnings.warn(f"smallest expected cell count is {min_expected:.3g} (< 5)", SmallSampleWarning)
    diagnostics = [
        {"name": "min_expected_count", "value": min_expected, "passed": min_expected >= 5},
        {"name": "score_orthonormality", "value": q_set.orthonormality_error(),
         "passed": q_set.orthonormality_error() <= tolerance},
        {"name": "rotation_alignment", "value": rot.alignment_error, "passed": rot.alignment_error <= tolerance},
        {"name": "rotation_preserves_p_norm", "value": rot.norm_error, "passed": rot.norm_error <= tolerance},
        {"name": "target_scores_annihilated", "value": rot.annihilation_error,
         "passed": rot.annihilation_error <= 1e-6},
        {"name": "decision", "alpha": alpha, "reject": bool(p_value < alpha)},
    ]
    return TestReport(
        statistic_name=statistic,
        statistic_value=value,
        p_value=p_value,
        theta_hat=[float(t) for t in theta_hat] if family.param_dim else None,
        n=n,
        cells=dist.size,
        target=target.name,
        replicates=table.reps,
        seed=seed,
        diagnostics=diagnostics,
    )
