"""Counter-based random streams and mergeable Monte-Carlo accumulators.

Every replicate draws from its own Philox stream keyed by ``(seed, index)``,
so replicate ``i`` is reproducible on its own and independent of the order
(or process) in which replicates are generated.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1


def replicate_stream(seed: int, index: int) -> np.random.Generator:
    if seed < 0 or index < 0:
        raise ValueError("seed and replicate index must be non-negative")
    key = ((int(seed) & _MASK64) << 64) | (int(index) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def open_uniforms(gen: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1), 53-bit resolution."""
    bits = gen.integers(0, 1 << 53, size=size, dtype=np.int64)
    return (bits + 0.5) * (1.0 / (1 << 53))


def standard_normals(gen: np.random.Generator, size) -> np.ndarray:
    # inverse-CDF sampling keeps the construction portable across implementations
    return ndtri(open_uniforms(gen, size))


def normal_batch(seed: int, start: int, count: int, dim: int) -> np.ndarray:
    """``(count, dim)`` standard normals; row ``i`` comes from replicate ``start + i``."""
    out = np.empty((count, dim))
    for i in range(count):
        out[i] = standard_normals(replicate_stream(seed, start + i), dim)
    return out


@dataclass
class MomentAccumulator:
    """Running sums for second moments of mean-zero vectors.

    Covariances of the simulated processes have known zero means, so the
    estimator is ``mean(x x^T)`` and its standard error is the standard
    deviation of the products over ``sqrt(count)``. Accumulators combine with
    ``merge`` (associative and commutative), which lets batches be generated
    anywhere and reduced in any order.
    """

    dim: int
    count: int = 0
    sum_outer: np.ndarray = field(default=None)
    sum_outer_sq: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.sum_outer is None:
            self.sum_outer = np.zeros((self.dim, self.dim))
        if self.sum_outer_sq is None:
            self.sum_outer_sq = np.zeros((self.dim, self.dim))

    def add(self, rows: np.ndarray) -> "MomentAccumulator":
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.shape[1] != self.dim:
            raise ValueError(f"expected rows of length {self.dim}, got {rows.shape[1]}")
        self.count += rows.shape[0]
        self.sum_outer += rows.T @ rows
        sq = rows**2
        self.sum_outer_sq += sq.T @ sq
        return self

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.dim != self.dim:
            raise ValueError("cannot merge accumulators of different dimension")
        return MomentAccumulator(
            self.dim,
            self.count + other.count,
            self.sum_outer + other.sum_outer,
            self.sum_outer_sq + other.sum_outer_sq,
        )

    @property
    def covariance(self) -> np.ndarray:
        return self.sum_outer / self.count

    @property
    def standard_error(self) -> np.ndarray:
        mean = self.covariance
        var = self.sum_outer_sq / self.count - mean**2
        return np.sqrt(np.maximum(var, 0.0) / self.count)
