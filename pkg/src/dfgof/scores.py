"""Cell scores, the information matrix, and P-orthonormal score sets.

Vectors live in the weighted inner product ``<u, v>_P = u^T D_p v``. A score
set stacks ``q_0 = 1`` on top of the normalised scores ``q_1..q_K`` as rows
of a ``(K+1, N)`` array.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import DiscreteDistribution, cell_probabilities
from .errors import (DfgofError, NonOrthonormalScores, ScoreUnavailable,
                     SingularInformation)
from .families import ParametricFamily

ORTHO_TOL = 1e-8
SCORE_SUM_TOL = 1e-8
MAX_CONDITION = 1e12
FD_STEP = np.cbrt(np.finfo(float).eps)


def p_inner(u, v, p) -> float:
    return float(np.dot(u, np.asarray(p) * v))


def p_norm(u, p) -> float:
    return float(np.sqrt(p_inner(u, u, p)))


def p_gram_schmidt(vectors, p, keep_first: bool = False) -> np.ndarray:
    """Modified Gram-Schmidt on the rows of ``vectors`` in the D_p inner product.

    With ``keep_first`` the first row is taken as already normalised and left
    untouched (used to keep ``q_0`` exactly equal to the ones vector).
    """
    out = np.array(vectors, dtype=float, copy=True)
    p = np.asarray(p, dtype=float)
    for i in range(out.shape[0]):
        for j in range(i):
            out[i] -= p_inner(out[j], out[i], p) * out[j]
        if i == 0 and keep_first:
            continue
        nrm = p_norm(out[i], p)
        if nrm < 1e-12 * max(1.0, p_norm(vectors[i], p)):
            raise NonOrthonormalScores(f"vector {i} is linearly dependent on its predecessors")
        out[i] /= nrm
    return out


def random_p_orthonormal(p, count: int, rng: np.random.Generator,
                         include_constant: bool = True) -> np.ndarray:
    """``count`` P-orthonormal rows from a seeded standard-normal draw.

    With ``include_constant`` the first row is the ones vector, so the result
    is a valid score set.
    """
    p = np.asarray(p, dtype=float)
    draws = rng.standard_normal((count, p.size))
    if include_constant and count:
        draws[0] = 1.0
    return p_gram_schmidt(draws, p, keep_first=include_constant)


@dataclass(frozen=True)
class ScoreSet:
    vectors: np.ndarray  # rows q_0..q_K
    weight_probs: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "weight_probs", np.asarray(self.weight_probs, dtype=float))
        if v.shape[1] != self.weight_probs.size:
            raise ValueError("score vectors and weights have different lengths")

    @property
    def K(self) -> int:
        return self.vectors.shape[0] - 1

    def gram(self) -> np.ndarray:
        return (self.vectors * self.weight_probs) @ self.vectors.T

    def orthonormality_error(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(self.K + 1))))

    def check(self, tol: float = ORTHO_TOL) -> "ScoreSet":
        err = self.orthonormality_error()
        if err > tol:
            raise NonOrthonormalScores(f"score Gram matrix deviates from I by {err:.3g}")
        return self


def _cell_derivatives_analytic(family, theta, dist):
    grad = np.asarray(family.cdf_grad(theta, np.nextafter(dist.atoms, -np.inf)), dtype=float)
    grad = np.atleast_2d(grad).reshape(family.param_dim, dist.size)
    ext = np.hstack([grad, np.zeros((family.param_dim, 1))])  # dF/dtheta vanishes at +inf
    return np.diff(ext, axis=1)


def _cell_derivatives_fd(family, theta, dist):
    out = np.empty((family.param_dim, dist.size))
    for k in range(family.param_dim):
        h = FD_STEP * max(1.0, abs(theta[k]))
        up, down = theta.copy(), theta.copy()
        up[k] += h
        down[k] -= h
        step = up[k] - down[k]
        if step == 0.0 or not np.isfinite(step):
            raise ScoreUnavailable(f"finite-difference step underflows for parameter {k}")
        try:
            p_up = cell_probabilities(family, up, dist.atoms, dist.lower_bound)
            p_down = cell_probabilities(family, down, dist.atoms, dist.lower_bound)
        except DfgofError as exc:
            raise ScoreUnavailable(f"finite-difference probe failed for parameter {k}: {exc}") from exc
        out[k] = (p_up - p_down) / step
    return out


def cell_probability_derivatives(family: ParametricFamily, theta, dist: DiscreteDistribution,
                                 method: str = "auto") -> np.ndarray:
    """(K, N) array of dp_j/dtheta_k; analytic when the family provides it."""
    theta = family.check_theta(theta)
    if family.param_dim == 0:
        return np.zeros((0, dist.size))
    if method == "auto":
        method = "analytic" if family.has_analytic_scores else "fd"
    if method == "analytic":
        dp = _cell_derivatives_analytic(family, theta, dist)
    elif method == "fd":
        dp = _cell_derivatives_fd(family, theta, dist)
    else:
        raise ValueError(f"unknown derivative method {method!r}")
    drift = np.abs(dp.sum(axis=1))
    if np.any(drift > SCORE_SUM_TOL):
        raise ScoreUnavailable(f"cell derivatives do not sum to zero (max |sum| = {drift.max():.3g})")
    return dp


def raw_scores(family: ParametricFamily, theta, dist: DiscreteDistribution,
               method: str = "auto") -> np.ndarray:
    """Rows Q_k with entries (dp_j/dtheta_k) / p_j, evaluated at ``theta``."""
    p = cell_probabilities(family, theta, dist.atoms, dist.lower_bound)
    return cell_probability_derivatives(family, theta, dist, method) / p


def information_matrix(Q, p) -> np.ndarray:
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    K = Q.shape[0] if Q.size else 0
    if K == 0:
        return np.zeros((0, 0))
    gamma = (Q * np.asarray(p)) @ Q.T
    gamma = 0.5 * (gamma + gamma.T)
    _check_pd(gamma)
    return gamma


def _check_pd(gamma):
    eig = np.linalg.eigvalsh(gamma)
    if eig[0] <= 0 or eig[-1] / eig[0] > MAX_CONDITION:
        raise SingularInformation(
            f"information matrix is singular or ill-conditioned (eigenvalues {eig[0]:.3g}..{eig[-1]:.3g})"
        )
    return eig


def inv_sqrt_psd(gamma) -> np.ndarray:
    gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
    if gamma.size == 0:
        return np.zeros((0, 0))
    gamma = 0.5 * (gamma + gamma.T)
    _check_pd(gamma)
    eig, vec = np.linalg.eigh(gamma)
    return (vec / np.sqrt(eig)) @ vec.T


def normalize_scores(Q, gamma, p) -> ScoreSet:
    p = np.asarray(p, dtype=float)
    Q = np.asarray(Q, dtype=float).reshape(-1, p.size)
    rows = [np.ones(p.size)]
    if Q.shape[0]:
        rows.extend(inv_sqrt_psd(gamma) @ Q)
    # one cleanup pass: the algebra is exact, floating point is not
    vectors = p_gram_schmidt(np.vstack(rows), p, keep_first=True)
    return ScoreSet(vectors, p).check(1e-10)


def score_set(family: ParametricFamily, theta, dist: DiscreteDistribution,
              method: str = "auto") -> ScoreSet:
    p = cell_probabilities(family, theta, dist.atoms, dist.lower_bound)
    Q = cell_probability_derivatives(family, theta, dist, method) / p
    return normalize_scores(Q, information_matrix(Q, p), p)
