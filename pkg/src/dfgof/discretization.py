"""Discrete approximations of continuous distributions, and binning of samples.

Cell ``j`` is ``[x_j, x_{j+1})`` with ``x_{N+1} = +inf``. An atom sitting
exactly on a grid point belongs to the cell on its right.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import GridTooFine, InvalidFamily, InvalidGrid, OutOfSupport
from .families import ParametricFamily

PROB_FLOOR = 1e-12
SUM_TOL = 1e-12
BISECT_TOL = 1e-12
BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class DiscreteDistribution:
    atoms: np.ndarray
    probs: np.ndarray
    lower_bound: float

    def __post_init__(self):
        object.__setattr__(self, "atoms", np.asarray(self.atoms, dtype=float))
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))
        object.__setattr__(self, "lower_bound", float(self.lower_bound))

    @classmethod
    def from_probs(cls, probs) -> "DiscreteDistribution":
        """Time scale known only through its cell probabilities (atoms are cell indices)."""
        probs = np.asarray(probs, dtype=float)
        return cls(np.arange(probs.size, dtype=float), probs, 0.0)

    @property
    def size(self) -> int:
        return int(self.probs.size)

    def cdf_at_atoms(self) -> np.ndarray:
        """P(x_j), the right-continuous step function evaluated at each atom."""
        return np.cumsum(self.probs)

    def same_space(self, other: "DiscreteDistribution") -> bool:
        return self is other or (
            self.size == other.size
            and np.array_equal(self.atoms, other.atoms)
            and np.array_equal(self.probs, other.probs)
        )


@dataclass(frozen=True)
class CellCounts:
    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 1 or np.any(c < 0) or not np.all(np.equal(np.mod(c, 1), 0)):
            raise ValueError("counts must be a 1-D vector of non-negative integers")
        object.__setattr__(self, "counts", c.astype(np.int64))

    @property
    def sample_size(self) -> int:
        return int(self.counts.sum())


def _check_grid(atoms, lower_bound) -> tuple[np.ndarray, float]:
    atoms = np.asarray(atoms, dtype=float)
    if atoms.ndim != 1 or atoms.size == 0:
        raise InvalidGrid("grid must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(atoms)):
        raise InvalidGrid("grid points must be finite")
    if np.any(np.diff(atoms) <= 0):
        raise InvalidGrid("grid points must be strictly increasing")
    lb = atoms[0] if lower_bound is None else float(lower_bound)
    if atoms[0] < lb:
        raise InvalidGrid(f"first grid point {atoms[0]} lies below the lower bound {lb}")
    return atoms, lb


def cell_probabilities(family: ParametricFamily, theta, atoms, lower_bound: Optional[float] = None) -> np.ndarray:
    """p_j = F(x_{j+1}-) - F(x_j-), with F(+inf-) = 1."""
    atoms, _ = _check_grid(atoms, lower_bound)
    left = family.left_cdf(theta, atoms)
    if left.shape != atoms.shape or not np.all(np.isfinite(left)):
        raise InvalidFamily(f"{family.name}: CDF returned invalid values")
    edges = np.append(left, 1.0)
    if np.any(edges < -SUM_TOL) or np.any(edges > 1 + SUM_TOL) or np.any(np.diff(edges) < -SUM_TOL):
        raise InvalidFamily(f"{family.name}: CDF values are not a non-decreasing sequence in [0, 1]")
    if edges[0] > SUM_TOL:
        raise InvalidGrid(
            f"first grid point leaves mass {edges[0]:.3g} below it; lower the first edge"
        )
    p = np.diff(edges)
    small = np.flatnonzero(p < PROB_FLOOR)
    if small.size:
        raise GridTooFine(
            f"cell(s) {small.tolist()} have probability below {PROB_FLOOR:g}; coarsen the grid"
        )
    return p


def discretize(family: ParametricFamily, theta, atoms, lower_bound: Optional[float] = None) -> DiscreteDistribution:
    atoms, lb = _check_grid(atoms, lower_bound)
    return DiscreteDistribution(atoms, cell_probabilities(family, theta, atoms, lb), lb)


def _bisect_quantile(family, theta, target, lo, hi):
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        fm = float(family.cdf(theta, np.array([mid]))[0])
        if abs(fm - target) <= BISECT_TOL or mid in (lo, hi):
            return mid
        if fm < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def build_equiprobable_grid(family: ParametricFamily, theta, cells: int,
                            lower_bound: Optional[float] = None) -> DiscreteDistribution:
    if cells < 2:
        raise ValueError(f"an equiprobable grid needs at least 2 cells, got {cells}")
    theta = family.check_theta(theta)
    lb = family.support_floor(theta) if lower_bound is None else float(lower_bound)
    atoms = [lb]
    lo = lb
    for k in range(1, cells):
        target = k / cells
        width = max(1.0, abs(lo))
        hi = lo + width
        for _ in range(BISECT_MAX_ITER):
            if float(family.cdf(theta, np.array([hi]))[0]) >= target:
                break
            width *= 2.0
            hi = lo + width
        else:
            raise InvalidFamily(f"{family.name}: could not bracket the {target:.6g} quantile")
        x = _bisect_quantile(family, theta, target, lo, hi)
        if x <= atoms[-1]:
            raise InvalidFamily(f"{family.name}: CDF is not strictly increasing near {x}")
        atoms.append(x)
        lo = x
    dist = discretize(family, theta, atoms, lb)
    if np.max(np.abs(dist.probs - 1.0 / cells)) > 1e-9:
        raise InvalidFamily(f"{family.name}: quantile search did not produce equal cells")
    return dist


def grid_from_config(config: dict, family: ParametricFamily, theta,
                     lower_bound: Optional[float] = None) -> DiscreteDistribution:
    """``{"scheme": "equiprobable", "cells": N}`` or ``{"scheme": "edges", "edges": [...]}``."""
    scheme = config.get("scheme", "equiprobable")
    if scheme == "equiprobable":
        return build_equiprobable_grid(family, theta, int(config["cells"]), lower_bound)
    if scheme == "edges":
        return discretize(family, theta, config["edges"], lower_bound)
    raise InvalidGrid(f"unknown grid scheme {scheme!r}")


def counts_from_sample(sample, dist: DiscreteDistribution) -> CellCounts:
    x = np.asarray(sample, dtype=float).ravel()
    if np.any(np.isnan(x)):
        raise OutOfSupport("sample contains NaN")
    idx = np.searchsorted(dist.atoms, x, side="right") - 1
    if np.any(idx < 0):
        raise OutOfSupport(
            f"{int(np.sum(idx < 0))} sample value(s) below the first grid point {dist.atoms[0]}"
        )
    return CellCounts(np.bincount(idx, minlength=dist.size))


def validate_distribution(dist: DiscreteDistribution) -> list[str]:
    """Empty list when every invariant holds, otherwise one message per violation."""
    problems = []
    atoms, probs = np.asarray(dist.atoms, float), np.asarray(dist.probs, float)
    if atoms.shape != probs.shape or atoms.ndim != 1:
        problems.append("atoms and probs must be 1-D vectors of equal length")
        return problems
    if np.any(probs <= 0):
        problems.append("probabilities not strictly positive")
    if abs(probs.sum() - 1.0) > SUM_TOL:
        problems.append(f"sum ≠ 1 (sum = {probs.sum():.15g})")
    if np.any(np.diff(atoms) <= 0):
        problems.append("atoms not increasing")
    if atoms.size and atoms[0] < dist.lower_bound:
        problems.append("first atom below lower bound")
    return problems
