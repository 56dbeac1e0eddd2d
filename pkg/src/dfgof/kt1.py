"""The first transform: predict each cell's share of deaths by regression on
the future and keep the innovations.

Cell indices are 0-based. Integrals over ``[t, inf)`` become tail sums over
cells ``l..N-1`` and ``h(x_l, theta)`` is the cell score ``Q_{1l}``.
Only scalar parameters are supported.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .discretization import CellCounts, DiscreteDistribution, cell_probabilities
from .errors import (DfgofError, InvalidFamily, MleNotFound, SingularCovariance,
                     TailExhausted)
from .families import ParametricFamily
from .processes import ProcessIncrements
from .scores import cell_probability_derivatives, information_matrix

TAIL_FLOOR = 1e-12
DET_FLOOR = 1e-14
VARIANTS = ("uncentred", "centred")


def _tail_sums(v: np.ndarray) -> np.ndarray:
    return np.cumsum(v[::-1])[::-1]


@dataclass(frozen=True)
class Kt1State:
    theta_hat: np.ndarray
    probs: np.ndarray
    score: np.ndarray  # Q_1 per cell
    tail_mass: np.ndarray  # 1 - F(x_l-)
    tail_score: np.ndarray  # sum_{j>=l} Q_j p_j
    tail_score_sq: np.ndarray  # sum_{j>=l} Q_j^2 p_j
    cond_mean: np.ndarray  # E^t: tail_score / tail_mass

    @property
    def cells(self) -> int:
        return self.probs.size


def kt1_state(family: ParametricFamily, theta, dist: DiscreteDistribution) -> Kt1State:
    if family.param_dim != 1:
        raise InvalidFamily("the regression transform supports a single free parameter")
    theta = family.check_theta(theta)
    p = cell_probabilities(family, theta, dist.atoms, dist.lower_bound)
    Q = cell_probability_derivatives(family, theta, dist)[0] / p
    tail_mass = _tail_sums(p)
    tail_score = _tail_sums(Q * p)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond_mean = np.where(tail_mass > TAIL_FLOOR, tail_score / tail_mass, np.nan)
    return Kt1State(theta, p, Q, tail_mass, tail_score, _tail_sums(Q * Q * p), cond_mean)


def _score_equation(family, dist, counts):
    nu = counts.counts

    def total_score(theta):
        th = np.array([theta])
        p = cell_probabilities(family, th, dist.atoms, dist.lower_bound)
        Q = cell_probability_derivatives(family, th, dist)[0] / p
        return float(Q @ nu), float((Q * Q) @ p)

    return total_score


def mle_discrete(counts: CellCounts, family: ParametricFamily, theta0,
                 dist: DiscreteDistribution, max_iter: int = 100) -> np.ndarray:
    """Root of sum_j Q_j(theta) nu_j on the grid.

    Fisher-scoring Newton steps from ``theta0``; when a step leaves the
    admissible set or fails to converge, the root is bracketed by stepping
    outwards from ``theta0`` and refined with Brent's method. Several free
    parameters are handled by Fisher scoring with step halving on the
    multinomial log-likelihood.
    """
    theta0 = family.check_theta(theta0)
    n = counts.sample_size
    if n < 1:
        raise MleNotFound("no observations")
    if family.param_dim == 0:
        return theta0
    if family.param_dim > 1:
        return _mle_fisher_scoring(counts, family, theta0, dist, max_iter)
    score = _score_equation(family, dist, counts)
    tol = 1e-8 * n
    theta = float(theta0[0])
    try:
        for _ in range(max_iter):
            s, info = score(theta)
            # quadratic convergence makes the tighter target nearly free
            if abs(s) <= 1e-4 * tol:
                return np.array([theta])
            theta = theta + s / (n * info)
        if abs(score(theta)[0]) <= tol:
            return np.array([theta])
    except DfgofError:
        pass
    return np.array([_bracketed_root(score, float(theta0[0]), tol)])


def _bracketed_root(score, theta0, tol):
    def safe(theta):
        try:
            return score(theta)[0]
        except DfgofError:
            return None

    s0 = safe(theta0)
    if s0 is None:
        raise MleNotFound("score is not defined at the starting value")
    if abs(s0) <= tol:
        return theta0
    direction = 1.0 if s0 > 0 else -1.0
    step = 0.1 * max(1.0, abs(theta0))
    lo, s_lo = theta0, s0
    for _ in range(200):
        cand = lo + direction * step
        s = safe(cand)
        if s is None:
            step *= 0.5
            if step < 1e-14 * max(1.0, abs(lo)):
                break
            continue
        if np.sign(s) != np.sign(s_lo):
            root = brentq(lambda t: score(t)[0], min(lo, cand), max(lo, cand), xtol=1e-15, rtol=4 * np.finfo(float).eps)
            if abs(score(root)[0]) > tol:
                raise MleNotFound("root refinement did not reach the tolerance")
            return root
        lo, s_lo = cand, s
        step *= 2.0
    raise MleNotFound("score never changes sign; the maximum lies on the parameter boundary")


def _mle_fisher_scoring(counts, family, theta0, dist, max_iter):
    nu = counts.counts
    n = counts.sample_size

    def evaluate(theta):
        p = cell_probabilities(family, theta, dist.atoms, dist.lower_bound)
        Q = cell_probability_derivatives(family, theta, dist) / p
        return p, Q

    theta = theta0.copy()
    try:
        p, Q = evaluate(theta)
    except DfgofError as exc:
        raise MleNotFound(f"likelihood undefined at the starting value: {exc}") from exc
    for _ in range(max_iter):
        grad = Q @ nu
        if np.max(np.abs(grad)) <= 1e-8 * n:
            return theta
        try:
            step = np.linalg.solve(information_matrix(Q, p), grad / n)
        except DfgofError as exc:
            raise MleNotFound(str(exc)) from exc
        loglik = nu @ np.log(p)
        for _ in range(60):
            cand = theta + step
            try:
                p_c, Q_c = evaluate(cand)
            except DfgofError:
                step *= 0.5
                continue
            if nu @ np.log(p_c) >= loglik - 1e-12 * abs(loglik):
                break
            step *= 0.5
        else:
            raise MleNotFound("no ascent step found")
        theta, p, Q = cand, p_c, Q_c
    raise MleNotFound("Fisher scoring did not converge")


def conditional_score_mean(family: ParametricFamily, theta, dist: DiscreteDistribution, l: int) -> float:
    state = kt1_state(family, theta, dist)
    if state.tail_mass[l] <= TAIL_FLOOR:
        raise TailExhausted(f"no probability left from cell {l}")
    return float(state.cond_mean[l])


def kt1_regressors(counts: CellCounts, score, l: int) -> tuple[float, float]:
    """(share surviving to cell l, score-weighted share) over cells l..N-1."""
    nu = counts.counts
    n = counts.sample_size
    return float(nu[l:].sum() / n), float(np.asarray(score)[l:] @ nu[l:] / n)


def _tail_moments(state, l):
    T, S, S2 = state.tail_mass[l], state.tail_score[l], state.tail_score_sq[l]
    return np.array([[T, S], [S, S2]]), np.array([1.0, state.score[l]])


def _centred_cov(state, l):
    T, S, S2 = state.tail_mass[l], state.tail_score[l], state.tail_score_sq[l]
    F = 1.0 - T
    cov = np.array([[F * T, F * S], [F * S, S2 - S * S]])
    return cov, np.array([F, state.score[l] - S])


def kt1_predict(counts: CellCounts, state: Kt1State, l: int, variant: str = "uncentred") -> float:
    """Predicted share of the sample falling in cell ``l``.

    ``uncentred`` pairs (1, h_l) with the uncentred tail moment matrix
    sum_{j>=l} (1, Q_j)^T (1, Q_j) p_j. ``centred`` pairs the centred covariance
    of the regressors with their covariances with the regressand. The two are
    algebraically equal wherever both are defined; the centred form is singular in the
    first cell.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown predictor variant {variant!r}")
    if state.tail_mass[l] <= TAIL_FLOOR:
        raise TailExhausted(f"no probability left from cell {l}")
    matrix, rhs = (_tail_moments if variant == "uncentred" else _centred_cov)(state, l)
    if abs(np.linalg.det(matrix)) < DET_FLOOR:
        raise SingularCovariance(f"regressor covariance is singular at cell {l}")
    x = np.array(kt1_regressors(counts, state.score, l))
    return float(state.probs[l] * (x @ np.linalg.solve(matrix, rhs)))


def default_cutoff(state: Kt1State, n: int) -> int:
    """Largest cell with tail mass >= 5/n and a nonsingular regressor matrix."""
    best = -1
    for l in range(state.cells):
        if state.tail_mass[l] < 5.0 / n:
            break
        if abs(np.linalg.det(_tail_moments(state, l)[0])) < DET_FLOOR:
            break
        best = l
    if best < 0:
        raise SingularCovariance("no usable cell for the regression transform")
    return best


def kt1_innovations(counts: CellCounts, family: ParametricFamily, theta_hat, dist: DiscreteDistribution,
                    cutoff: Optional[int] = None, variant: str = "uncentred",
                    state: Optional[Kt1State] = None) -> ProcessIncrements:
    """sqrt(n) (nu_l / n - predicted share) up to ``cutoff``, zero beyond.

    With ``variant="centred"`` the first cell uses the uncentred form, where the centred
    covariance is singular.
    """
    state = kt1_state(family, theta_hat, dist) if state is None else state
    n = counts.sample_size
    cutoff = default_cutoff(state, n) if cutoff is None else int(cutoff)
    values = np.zeros(state.cells)
    nu = counts.counts
    for l in range(cutoff + 1):
        v = variant if (variant == "uncentred" or l > 0) else "uncentred"
        values[l] = np.sqrt(n) * (nu[l] / n - kt1_predict(counts, state, l, v))
    time_scale = DiscreteDistribution(dist.atoms, state.probs, dist.lower_bound)
    return ProcessIncrements(values, time_scale, "empirical")


def centred_score_regressor(counts: CellCounts, state: Kt1State, l: int) -> float:
    """sum_{j>=l} (Q_j - E^t) nu_j / n, which has mean zero under the model."""
    nu = counts.counts
    return float((state.score[l:] - state.cond_mean[l]) @ nu[l:] / counts.sample_size)
