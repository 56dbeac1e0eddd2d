"""Process increments in discrete time: Brownian motion, projected BM,
empirical increments, function-parametric evaluation and the rotation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .discretization import CellCounts, DiscreteDistribution
from .errors import DimensionMismatch, SpaceMismatch
from .operators import LinearOperator, accumulate
from .rng import normal_batch, replicate_stream, standard_normals

KINDS = ("bm", "projected", "empirical", "rotated")
Scale = Union[DiscreteDistribution, np.ndarray]


def as_distribution(scale: Scale) -> DiscreteDistribution:
    if isinstance(scale, DiscreteDistribution):
        return scale
    return DiscreteDistribution.from_probs(scale)


@dataclass(frozen=True)
class ProcessIncrements:
    values: np.ndarray
    time_scale: DiscreteDistribution
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown process kind {self.kind!r}")
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.time_scale.size,):
            raise DimensionMismatch(f"{v.size} increments on a {self.time_scale.size}-cell time scale")
        object.__setattr__(self, "values", v)

    @property
    def probs(self) -> np.ndarray:
        return self.time_scale.probs


@dataclass(frozen=True)
class DualFunction:
    values: np.ndarray
    space: DiscreteDistribution

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.space.size,):
            raise DimensionMismatch(f"function with {v.size} values on a {self.space.size}-cell space")
        if np.any(np.isnan(v)):
            raise ValueError("function values must not be NaN")
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        return float(np.sqrt(self.values @ (self.space.probs * self.values)))


def bm_increments_from_normals(scale: Scale, z) -> ProcessIncrements:
    dist = as_distribution(scale)
    return ProcessIncrements(np.sqrt(dist.probs) * np.asarray(z, dtype=float), dist, "bm")


def simulate_bm_increments(scale: Scale, seed: int, replicate_index: int) -> ProcessIncrements:
    """D_p^{1/2} Z for the replicate's own standard-normal draw."""
    dist = as_distribution(scale)
    z = standard_normals(replicate_stream(seed, replicate_index), dist.size)
    return bm_increments_from_normals(dist, z)


def simulate_bm_batch(p, seed: int, start: int, count: int) -> np.ndarray:
    """Rows are the increments of replicates ``start .. start+count-1`` (same draws as above)."""
    p = np.asarray(p, dtype=float)
    return normal_batch(seed, start, count, p.size) * np.sqrt(p)


def project_increments(dw: ProcessIncrements, projection: LinearOperator) -> ProcessIncrements:
    if projection.size != dw.time_scale.size:
        raise DimensionMismatch(f"{projection.size}x{projection.size} projection on {dw.time_scale.size} cells")
    if projection.weight is not None and not np.allclose(projection.weight, dw.probs, rtol=0, atol=1e-15):
        raise SpaceMismatch("projection is adapted to a different time scale")
    return ProcessIncrements(projection @ dw.values, dw.time_scale, "projected")


def empirical_increments(counts: CellCounts, p_hat: Scale) -> ProcessIncrements:
    """(nu_j - n p_j) / sqrt(n)."""
    dist = as_distribution(p_hat)
    n = counts.sample_size
    if n < 1:
        raise ValueError("empirical increments need at least one observation")
    if counts.counts.size != dist.size:
        raise DimensionMismatch(f"{counts.counts.size} counts on a {dist.size}-cell grid")
    return ProcessIncrements((counts.counts - n * dist.probs) / np.sqrt(n), dist, "empirical")


def eval_functional(phi: DualFunction, dv: ProcessIncrements) -> float:
    if not phi.space.same_space(dv.time_scale):
        raise SpaceMismatch("function and process live on different time scales")
    return float(phi.values @ dv.values)


def heaviside(t: float, dist: DiscreteDistribution) -> DualFunction:
    """Indicator of atoms strictly below ``t``."""
    return DualFunction((dist.atoms < t).astype(float), dist)


def rotate_functional(psi: DualFunction, rotation: LinearOperator, embedding: LinearOperator,
                      dv_p: ProcessIncrements) -> float:
    """v_R^s(psi) computed as v_P^q(V L psi)."""
    if psi.values.size != dv_p.values.size:
        raise DimensionMismatch("function and process have different lengths")
    return float((rotation @ (embedding @ psi.values)) @ dv_p.values)


def primal_rotation(dv_p: ProcessIncrements, rotation: LinearOperator, embedding: LinearOperator,
                    target: Optional[Scale] = None) -> ProcessIncrements:
    """Increments L V^T dv in time R, so that psi^T(out) = (V L psi)^T dv for every psi."""
    if rotation.size != dv_p.values.size or embedding.size != dv_p.values.size:
        raise DimensionMismatch("operator sizes do not match the process")
    if target is None:
        r = np.diag(embedding.matrix) ** 2 * dv_p.probs
        target = DiscreteDistribution(dv_p.time_scale.atoms, r, dv_p.time_scale.lower_bound)
    values = embedding @ (rotation.T @ dv_p.values)
    return ProcessIncrements(values, as_distribution(target), "rotated")


def cumulative_path(dv: ProcessIncrements) -> np.ndarray:
    return accumulate(dv.values)
