"""Parametric families: CDFs, CDF derivatives, quantiles and support floors.

A :class:`ParametricFamily` exposes only its *free* parameter vector ``theta``;
parameters held fixed are bound into the closures when the family is built
with :func:`make_family`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import InvalidFamily

ArrayFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ParametricFamily:
    name: str
    param_dim: int
    cdf: ArrayFn
    cdf_grad: Optional[ArrayFn] = None  # (theta, x) -> (K, len(x)) array of dF/dtheta_k
    quantile: Optional[ArrayFn] = None
    floor: Optional[Callable[[np.ndarray], float]] = None
    param_names: tuple = ()
    fixed: dict = field(default_factory=dict)

    @property
    def has_analytic_scores(self) -> bool:
        return self.cdf_grad is not None

    def check_theta(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if self.param_dim == 0:
            theta = theta[:0]
        if theta.shape != (self.param_dim,):
            raise InvalidFamily(
                f"{self.name}: expected {self.param_dim} free parameters, got {theta.size}"
            )
        if not np.all(np.isfinite(theta)):
            raise InvalidFamily(f"{self.name}: non-finite parameter {theta}")
        return theta

    def left_cdf(self, theta, x) -> np.ndarray:
        """F(x-) at each point of ``x``; exact for right-continuous step CDFs."""
        x = np.asarray(x, dtype=float)
        return np.asarray(self.cdf(self.check_theta(theta), np.nextafter(x, -np.inf)), dtype=float)

    def support_floor(self, theta) -> float:
        if self.floor is None:
            raise InvalidFamily(f"{self.name}: no default support floor; supply a lower bound")
        return float(self.floor(self.check_theta(theta)))

    def sample(self, theta, gen: np.random.Generator, n: int) -> np.ndarray:
        from .rng import open_uniforms

        if self.quantile is None:
            raise InvalidFamily(f"{self.name}: family cannot be sampled (no quantile function)")
        return np.asarray(self.quantile(self.check_theta(theta), open_uniforms(gen, n)), dtype=float)


@dataclass(frozen=True)
class _Spec:
    names: tuple
    defaults: tuple
    cdf: Callable
    grad: Callable
    quantile: Callable
    floor: Callable
    admissible: Callable


def _exp_cdf(par, x):
    (rate,) = par
    return np.where(x < 0, 0.0, -np.expm1(-rate * np.maximum(x, 0.0)))


def _exp_grad(par, x):
    (rate,) = par
    xp = np.maximum(x, 0.0)
    return (xp * np.exp(-rate * xp))[None, :]


def _exp_quantile(par, u):
    (rate,) = par
    return -np.log1p(-u) / rate


def _norm_cdf(par, x):
    mean, sd = par
    return ndtr((x - mean) / sd)


def _norm_grad(par, x):
    mean, sd = par
    z = (x - mean) / sd
    dens = np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi)
    return np.vstack([-dens / sd, -dens * z / sd])


def _norm_quantile(par, u):
    mean, sd = par
    return mean + sd * ndtri(u)


def _unif_cdf(par, x):
    lo, hi = par
    return np.clip((x - lo) / (hi - lo), 0.0, 1.0)


def _unif_grad(par, x):
    lo, hi = par
    inside = (x > lo) & (x < hi)
    w = hi - lo
    return np.vstack([np.where(inside, (x - hi) / w**2, 0.0), np.where(inside, -(x - lo) / w**2, 0.0)])


def _unif_quantile(par, u):
    lo, hi = par
    return lo + (hi - lo) * u


FAMILIES = {
    "exponential": _Spec(
        ("rate",), (1.0,), _exp_cdf, _exp_grad, _exp_quantile,
        lambda par: 0.0, lambda par: par[0] > 0,
    ),
    "normal": _Spec(
        ("mean", "sd"), (0.0, 1.0), _norm_cdf, _norm_grad, _norm_quantile,
        # Phi(-10) ~ 7.6e-24: no detectable mass below the floor
        lambda par: par[0] - 10.0 * par[1], lambda par: par[1] > 0,
    ),
    "uniform": _Spec(
        ("low", "high"), (0.0, 1.0), _unif_cdf, _unif_grad, _unif_quantile,
        lambda par: par[0], lambda par: par[1] > par[0],
    ),
}


def make_family(
    name: str,
    params: Optional[Sequence[float]] = None,
    estimate: Optional[Sequence[str]] = None,
) -> tuple[ParametricFamily, np.ndarray]:
    """Build a built-in family and return it with its starting free-parameter vector.

    ``params`` gives every natural parameter (defaults used when omitted);
    ``estimate`` names the free ones (all of them when ``None``, none for ``[]``).
    """
    try:
        spec = FAMILIES[name]
    except KeyError:
        raise InvalidFamily(f"unknown family {name!r}; choose from {sorted(FAMILIES)}") from None
    full = np.array(spec.defaults if params is None else params, dtype=float)
    if full.shape != (len(spec.names),):
        raise InvalidFamily(f"{name} takes parameters {spec.names}, got {list(full)}")
    if not spec.admissible(full):
        raise InvalidFamily(f"{name}: inadmissible parameters {list(full)}")
    free_names = spec.names if estimate is None else tuple(estimate)
    unknown = set(free_names) - set(spec.names)
    if unknown:
        raise InvalidFamily(f"{name} has no parameter(s) {sorted(unknown)}")
    free_idx = [i for i, nm in enumerate(spec.names) if nm in free_names]
    base = full.copy()

    def expand(theta):
        par = base.copy()
        par[free_idx] = theta
        if not spec.admissible(par):
            raise InvalidFamily(f"{name}: inadmissible parameters {list(par)}")
        return par

    family = ParametricFamily(
        name=name,
        param_dim=len(free_idx),
        cdf=lambda th, x: spec.cdf(expand(th), np.asarray(x, dtype=float)),
        cdf_grad=lambda th, x: spec.grad(expand(th), np.asarray(x, dtype=float))[free_idx],
        quantile=lambda th, u: spec.quantile(expand(th), np.asarray(u, dtype=float)),
        floor=lambda th: spec.floor(expand(th)),
        param_names=tuple(spec.names[i] for i in free_idx),
        fixed={spec.names[i]: float(full[i]) for i in range(len(spec.names)) if i not in free_idx},
    )
    return family, full[free_idx].copy()


def tabulated_family(prob_fn: Callable[[np.ndarray], np.ndarray], atoms, param_dim: int,
                     name: str = "tabulated") -> ParametricFamily:
    """Family given directly by its cell probabilities ``prob_fn(theta)`` on ``atoms``.

    The CDF is the step function with saltus ``p_j`` at ``atoms[j]``; scores
    come from finite differences only.
    """
    atoms = np.asarray(atoms, dtype=float)

    def cdf(theta, x):
        p = np.asarray(prob_fn(theta), dtype=float)
        if p.shape != atoms.shape:
            raise InvalidFamily(f"{name}: prob_fn returned shape {p.shape}, grid has {atoms.shape}")
        steps = np.concatenate([[0.0], np.cumsum(p)])
        return steps[np.searchsorted(atoms, np.asarray(x, dtype=float), side="right")]

    return ParametricFamily(name=name, param_dim=param_dim, cdf=cdf,
                            floor=lambda th: float(atoms[0]))
