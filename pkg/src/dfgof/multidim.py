"""Two-dimensional grids, the Brownian pillow, and colour-blind symmetrisation.

Plane functions are flattened row-major: cell ``(i, j)`` (x-index ``i``,
y-index ``j``, both 0-based) sits at position ``i * N + j``. The 1-D
operators then apply unchanged to vectors of length ``N**2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import DiscreteDistribution
from .errors import AsymmetricGrids, DimensionMismatch, OutOfSupport
from .operators import LinearOperator
from .processes import DualFunction


def flatten_2d(i: int, j: int, n: int) -> int:
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"cell ({i}, {j}) outside a {n}x{n} grid")
    return i * n + j


def unflatten_2d(k: int, n: int) -> tuple[int, int]:
    if not 0 <= k < n * n:
        raise IndexError(f"flat index {k} outside a {n}x{n} grid")
    return divmod(k, n)


class SymIndexMap:
    """Bijection between unordered pairs {i, j} and 0 .. N(N+1)/2 - 1."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("grid size must be positive")
        self.n = n
        self.pairs = [(i, j) for i in range(n) for j in range(i, n)]
        self._index = {pair: k for k, pair in enumerate(self.pairs)}

    @property
    def size(self) -> int:
        return len(self.pairs)

    def index(self, i: int, j: int) -> int:
        key = (i, j) if i <= j else (j, i)
        try:
            return self._index[key]
        except KeyError:
            raise IndexError(f"pair ({i}, {j}) outside a {self.n}-point grid") from None

    def pair(self, k: int) -> tuple[int, int]:
        return self.pairs[k]

    def fold(self, values) -> np.ndarray:
        """Restrict a symmetric N x N function (flat or square) to unordered pairs."""
        m = np.asarray(values, dtype=float).reshape(self.n, self.n)
        if not np.allclose(m, m.T, rtol=0, atol=1e-12):
            raise ValueError("function is not symmetric under swapping coordinates")
        return np.array([m[i, j] for i, j in self.pairs])

    def fold_probs(self, probs) -> np.ndarray:
        """Cell masses of the unordered pair {i, j}: h_ij + h_ji off the diagonal."""
        h = np.asarray(probs, dtype=float).reshape(self.n, self.n)
        return np.array([h[i, j] + (h[j, i] if i != j else 0.0) for i, j in self.pairs])


@dataclass(frozen=True)
class Grid2D:
    x_atoms: np.ndarray
    y_atoms: np.ndarray
    probs: np.ndarray  # N x N, rows indexed by x

    def __post_init__(self):
        x, y = np.asarray(self.x_atoms, float), np.asarray(self.y_atoms, float)
        h = np.asarray(self.probs, float)
        if x.size != y.size or h.shape != (x.size, y.size):
            raise DimensionMismatch("2-D grid needs N x-atoms, N y-atoms and an N x N table")
        if abs(h.sum() - 1.0) > 1e-12 or np.any(h <= 0):
            raise ValueError("cell probabilities must be positive and sum to one")
        object.__setattr__(self, "x_atoms", x)
        object.__setattr__(self, "y_atoms", y)
        object.__setattr__(self, "probs", h)

    @classmethod
    def independent(cls, dx: DiscreteDistribution, dy: DiscreteDistribution) -> "Grid2D":
        return cls(dx.atoms, dy.atoms, np.outer(dx.probs, dy.probs))

    @property
    def n(self) -> int:
        return self.x_atoms.size

    @property
    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        return self.probs.sum(axis=1), self.probs.sum(axis=0)

    def flat_distribution(self) -> DiscreteDistribution:
        return DiscreteDistribution.from_probs(self.probs.ravel())


def counts_2d(sample, grid: Grid2D) -> np.ndarray:
    """N x N cell counts for an (n, 2) sample, cells closed on the left."""
    pts = np.asarray(sample, dtype=float).reshape(-1, 2)
    ix = np.searchsorted(grid.x_atoms, pts[:, 0], side="right") - 1
    iy = np.searchsorted(grid.y_atoms, pts[:, 1], side="right") - 1
    if np.any(ix < 0) or np.any(iy < 0):
        raise OutOfSupport("sample point below the grid floor")
    out = np.zeros((grid.n, grid.n), dtype=np.int64)
    np.add.at(out, (ix, iy), 1)
    return out


def rectangle_indicator(a: float, b: float, grid: Grid2D) -> DualFunction:
    """1 on cells with x_i <= a and y_j <= b."""
    m = np.outer(grid.x_atoms <= a, grid.y_atoms <= b).astype(float)
    return DualFunction(m.ravel(), grid.flat_distribution())


def symmetrize_colour_blind(a: float, b: float, grid: Grid2D) -> DualFunction:
    """Indicator of R(a, b) united with R(b, a)."""
    if not np.array_equal(grid.x_atoms, grid.y_atoms):
        raise AsymmetricGrids("both coordinates must share one grid")
    ab = rectangle_indicator(a, b, grid).values
    ba = rectangle_indicator(b, a, grid).values
    return DualFunction(np.maximum(ab, ba), grid.flat_distribution())


def pillow_operator(grid: Grid2D) -> LinearOperator:
    """Kronecker product of the marginal bridge projections I - D_f 1 1^T.

    Applied to increments this is w - F(x) w(inf, y) - G(y) w(x, inf)
    + F(x) G(y) w(inf, inf) in cumulative form, which vanishes on both far
    edges.
    """
    f, g = grid.marginals
    n = grid.n
    pf = np.eye(n) - np.outer(f, np.ones(n))
    pg = np.eye(n) - np.outer(g, np.ones(n))
    return LinearOperator(np.kron(pf, pg), "projection", None)


def pillow_increments(dw2d, grid: Grid2D) -> np.ndarray:
    dw2d = np.asarray(dw2d, dtype=float)
    if dw2d.shape[-1] != grid.n**2:
        raise DimensionMismatch(f"expected {grid.n ** 2} increments, got {dw2d.shape[-1]}")
    return dw2d @ pillow_operator(grid).T


def cumulative_field(values, n: int) -> np.ndarray:
    """2-D prefix sums of flattened increments (leading axes are replicates)."""
    arr = np.asarray(values, dtype=float)
    field = arr.reshape(arr.shape[:-1] + (n, n))
    return np.cumsum(np.cumsum(field, axis=-1), axis=-2)
