"""Named invariant checks for every module, runnable from ``dfgof verify``.

Each check returns ``(passed, detail)``; :func:`run_checks` collects them
into a JSON-ready summary. Exact checks use fixed tolerances, Monte-Carlo
checks compare against a multiple of their own standard error. ``quick``
shrinks replicate counts for smoke runs.
"""
from __future__ import annotations

import time
from typing import Callable

import numpy as np

from .discretization import (DiscreteDistribution, build_equiprobable_grid, cell_probabilities,
                             counts_from_sample, discretize)
from .errors import GridTooFine
from .families import ParametricFamily, make_family
from .gof import (GaussianTargetModel, SampledModel, UniformTarget, mc_null_table, run_test,
                  two_sample_ks)
from .kt1 import centred_score_regressor, default_cutoff, kt1_predict, kt1_regressors, kt1_state, mle_discrete
from .multidim import Grid2D, SymIndexMap, cumulative_field, pillow_increments, symmetrize_colour_blind
from .operators import big_pi, embed_L, pi_sqrt, reflection_u0, reflection_weighted, rotation_vk
from .processes import (DualFunction, bm_increments_from_normals, eval_functional, project_increments,
                        simulate_bm_batch)
from .rng import replicate_stream
from .scores import ScoreSet, cell_probability_derivatives, p_norm, random_p_orthonormal, score_set

CHECKS: list[tuple[str, str, Callable]] = []


def check(module: str, name: str):
    def register(fn):
        CHECKS.append((module, name, fn))
        return fn
    return register


def maxabs(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def random_instance(rng: np.random.Generator, N: int | None = None, K: int | None = None) -> dict:
    """Random (p, r, q-set, s-set) with N in 2..50 and K in 0..min(4, N-1)."""
    N = int(rng.integers(2, 51)) if N is None else N
    K = int(rng.integers(0, min(4, N - 1) + 1)) if K is None else K
    p = rng.dirichlet(np.full(N, 2.0))
    r = rng.dirichlet(np.full(N, 2.0))
    q = random_p_orthonormal(p, K + 1, rng)
    s = random_p_orthonormal(r, K + 1, rng)
    return {"N": N, "K": K, "p": p, "r": r, "q": q, "s": s}


def random_family_case(rng: np.random.Generator):
    """A built-in family with random parameters (first natural parameter free)."""
    kind = int(rng.integers(3))
    if kind == 0:
        return make_family("exponential", [rng.uniform(0.2, 5.0)])
    if kind == 1:
        return make_family("normal", [rng.normal(), rng.uniform(0.3, 3.0)], ["mean"])
    low = rng.normal()
    return make_family("uniform", [low, low + rng.uniform(0.5, 4.0)], ["high"])


def random_edges(family: ParametricFamily, theta, N: int, rng: np.random.Generator) -> np.ndarray:
    u = np.sort(rng.uniform(0.001, 0.999, N - 1))
    return np.concatenate([[family.support_floor(theta)], family.quantile(theta, u)])


def _instances(quick: bool, seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    return [random_instance(rng) for _ in range(40 if quick else 200)]


# -- discretization ------------------------------------------------------------

@check("discretization", "cell_probabilities_sum_and_floor")
def _cell_probs(quick):
    rng = np.random.default_rng(101)
    worst_sum, worst_min, used, skipped = 0.0, 1.0, 0, 0
    for _ in range(50 if quick else 300):
        fam, th = random_family_case(rng)
        N = int(rng.integers(2, 51))
        try:
            p = cell_probabilities(fam, th, random_edges(fam, th, N, rng))
        except GridTooFine:
            skipped += 1  # precondition not met: the invariant only covers valid grids
            continue
        used += 1
        worst_sum = max(worst_sum, abs(p.sum() - 1.0))
        worst_min = min(worst_min, float(p.min()))
    return worst_sum <= 1e-12 and worst_min >= 1e-12, {
        "max_sum_error": worst_sum, "min_probability": worst_min, "cases": used, "skipped": skipped}


@check("discretization", "counts_partition_sample")
def _partition(quick):
    rng = np.random.default_rng(102)
    bad = 0
    cases = 30 if quick else 200
    for i in range(cases):
        fam, th = random_family_case(rng)
        N = int(rng.integers(2, 51))
        dist = build_equiprobable_grid(fam, th, N)
        n = int(rng.integers(1, 500))
        x = fam.sample(th, replicate_stream(102, i), n)
        if counts_from_sample(x, dist).sample_size != n:
            bad += 1
    return bad == 0, {"cases": cases, "violations": bad}


@check("discretization", "equiprobable_grid_exact")
def _equiprobable(quick):
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(20 if quick else 60):
        fam, th = random_family_case(rng)
        N = int(rng.choice([2, 5, 10, 20, 50]))
        dist = build_equiprobable_grid(fam, th, N)
        worst = max(worst, maxabs(dist.probs - 1.0 / N))
    return worst <= 1e-9, {"max_deviation": worst}


# -- operators -------------------------------------------------------------------

@check("operators", "pi_sqrt_symmetric_idempotent_annihilating")
def _pi_sqrt(quick):
    sym = idem = ann = 0.0
    for inst in _instances(quick, 201):
        P = pi_sqrt(inst["p"]).matrix
        sym = max(sym, maxabs(P - P.T))
        idem = max(idem, maxabs(P @ P - P))
        ann = max(ann, maxabs(P @ np.sqrt(inst["p"])))
    return max(sym, idem, ann) <= 1e-12, {"symmetry": sym, "idempotency": idem, "annihilation": ann}


@check("operators", "reflection_weighted_identities")
def _reflection(quick):
    rng = np.random.default_rng(202)
    worst, used = 0.0, 0
    for inst in _instances(quick, 202):
        p = inst["p"]
        xi, eta = random_p_orthonormal(p, 2, rng, include_constant=False)
        # random unit vectors, not orthogonal to each other
        eta = (xi + rng.uniform(-1, 1) * eta)
        eta /= p_norm(eta, p)
        if np.dot(xi, p * eta) > 0.999:
            continue
        used += 1
        U = reflection_weighted(xi, eta, p).matrix
        D = np.diag(p)
        worst = max(worst, maxabs(U @ U - np.eye(p.size)), maxabs(U.T @ D @ U - D),
                    maxabs(U @ xi - eta), maxabs(U @ eta - xi))
    return worst <= 1e-10, {"max_defect": worst, "cases": used}


@check("operators", "u0_conjugates_projections")
def _u0(quick):
    worst = 0.0
    for inst in _instances(quick, 203):
        a, b = np.sqrt(inst["p"]), np.sqrt(inst["r"])
        if np.allclose(a, b):
            continue
        U = reflection_u0(a, b).matrix
        worst = max(worst, maxabs(U @ pi_sqrt(inst["p"]).matrix @ U - pi_sqrt(inst["r"]).matrix))
    return worst <= 1e-10, {"max_defect": worst}


@check("operators", "big_pi_three_way_identity")
def _big_pi(quick):
    worst = 0.0
    for inst in _instances(quick, 204):
        Pi = big_pi(inst["p"], inst["q"]).matrix
        D = np.diag(inst["p"])
        worst = max(worst, maxabs(Pi @ D @ Pi.T - Pi @ D), maxabs(Pi @ D - D @ Pi.T), maxabs(Pi @ Pi - Pi))
    return worst <= 1e-10, {"max_defect": worst}


@check("operators", "rotation_vk_alignment_and_norm")
def _rotation(quick):
    rng = np.random.default_rng(205)
    align = norm = 0.0
    for inst in _instances(quick, 205):
        p, r = inst["p"], inst["r"]
        V = rotation_vk(inst["q"], inst["s"], p, r).matrix
        L = np.sqrt(r / p)
        align = max(align, maxabs(V @ (L[:, None] * inst["s"].T) - inst["q"].T))
        psi = rng.standard_normal(p.size)
        psi /= p_norm(psi, r)
        norm = max(norm, abs(p_norm(V @ (L * psi), p) - 1.0))
    return align <= 1e-9 and norm <= 1e-10, {"alignment": align, "norm": norm}


# -- scores ----------------------------------------------------------------------

@check("scores", "analytic_matches_finite_difference")
def _fd(quick):
    cases = [make_family("exponential", [0.7]), make_family("exponential", [3.0]),
             make_family("normal", [0.5, 2.0]), make_family("normal", [-1.0, 0.4], ["mean"]),
             make_family("uniform", [0.0, 2.0], ["high"])]
    worst = 0.0
    for fam, th in cases:
        for N in (5, 20):
            dist = build_equiprobable_grid(fam, th, N)
            a = cell_probability_derivatives(fam, th, dist, "analytic")
            f = cell_probability_derivatives(fam, th, dist, "fd")
            worst = max(worst, maxabs(a - f) / maxabs(a))
    return worst <= 1e-6, {"max_relative_error": worst}


@check("scores", "score_gram_is_identity")
def _gram(quick):
    rng = np.random.default_rng(302)
    worst = 0.0
    for _ in range(20 if quick else 100):
        fam, th = make_family("normal", [rng.normal(), rng.uniform(0.3, 3.0)])
        dist = build_equiprobable_grid(fam, th, int(rng.integers(4, 51)))
        worst = max(worst, score_set(fam, th, dist).orthonormality_error())
    return worst <= 1e-10, {"max_gram_error": worst}


def rescaled_family(family: ParametricFamily, c) -> ParametricFamily:
    """Same model in the parameter theta' = c * theta."""
    c = np.asarray(c, dtype=float)
    return ParametricFamily(
        name=f"{family.name}-rescaled", param_dim=family.param_dim,
        cdf=lambda th, x: family.cdf(np.asarray(th) / c, x),
        cdf_grad=lambda th, x: family.cdf_grad(np.asarray(th) / c, x) / c[:, None],
        quantile=lambda th, u: family.quantile(np.asarray(th) / c, u),
        floor=lambda th: family.floor(np.asarray(th) / c))


def score_span_projector(q: ScoreSet) -> np.ndarray:
    v = q.vectors[1:]
    return v.T @ v @ np.diag(q.weight_probs)


@check("scores", "reparametrization_span_invariance")
def _reparam(quick):
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(10 if quick else 40):
        fam, th = make_family("normal", [rng.normal(), rng.uniform(0.3, 3.0)])
        c = rng.uniform(0.1, 10.0, 2)
        dist = build_equiprobable_grid(fam, th, int(rng.integers(4, 31)))
        a = score_span_projector(score_set(fam, th, dist))
        b = score_span_projector(score_set(rescaled_family(fam, c), c * th, dist))
        worst = max(worst, maxabs(a - b))
    return worst <= 1e-9, {"max_projector_difference": worst}


# -- processes -------------------------------------------------------------------

@check("processes", "bridge_tie_down")
def _tie_down(quick):
    p = np.random.default_rng(401).dirichlet(np.full(12, 2.0))
    Pi = big_pi(p, np.ones((1, p.size)))
    dw = simulate_bm_batch(p, 401, 0, 200 if quick else 2000)
    worst = maxabs(np.cumsum(dw @ Pi.matrix.T, axis=1)[:, -1])
    return worst <= 1e-12, {"max_terminal_value": worst}


@check("processes", "dual_primal_consistency")
def _dual_primal(quick):
    rng = np.random.default_rng(402)
    worst = 0.0
    for i, inst in enumerate(_instances(quick, 402)):
        dist = DiscreteDistribution.from_probs(inst["p"])
        Pi = big_pi(inst["p"], inst["q"])
        z = rng.standard_normal(inst["N"])
        dw = bm_increments_from_normals(dist, z)
        phi = rng.standard_normal(inst["N"])
        lhs = eval_functional(DualFunction(phi, dist), project_increments(dw, Pi))
        rhs = eval_functional(DualFunction(Pi.T @ phi, dist), dw)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return worst <= 1e-12, {"max_relative_difference": worst}


def _bridge_batch(p, seed, reps):
    Pi = big_pi(p, np.ones((1, p.size))).matrix
    return simulate_bm_batch(p, seed, 0, reps) @ Pi.T


@check("processes", "increment_variance_law")
def _increment_variance(quick):
    rng = np.random.default_rng(403)
    p = rng.dirichlet(np.full(10, 2.0))
    reps = 20000 if quick else 100000
    dv = _bridge_batch(p, 403, reps)
    worst = 0.0
    for a, b in [(0, 1), (2, 5), (0, 9), (4, 10), (7, 8)]:
        x = dv[:, a:b].sum(axis=1)
        P = p[a:b].sum()
        se = np.std(x * x) / np.sqrt(reps)
        worst = max(worst, abs(np.mean(x * x) - (P - P * P)) / se)
    return worst <= 4.0, {"max_z": worst, "replicates": reps}


@check("processes", "functional_covariance_exact_and_mc")
def _functional_cov(quick):
    rng = np.random.default_rng(404)
    p = rng.dirichlet(np.full(10, 2.0))
    D = np.diag(p)
    Pi = big_pi(p, np.ones((1, p.size))).matrix
    exact_err, worst_z = 0.0, 0.0
    reps = 20000 if quick else 100000
    dv = _bridge_batch(p, 404, reps)
    for _ in range(5):
        phi, psi = rng.standard_normal(10), rng.standard_normal(10)
        target = phi @ D @ psi - (phi @ p) * (psi @ p)
        exact_err = max(exact_err, abs(phi @ Pi @ D @ Pi.T @ psi - target))
        prod = (dv @ phi) * (dv @ psi)
        worst_z = max(worst_z, abs(prod.mean() - target) / (prod.std() / np.sqrt(reps)))
    return exact_err <= 1e-12 and worst_z <= 4.0, {"exact_error": exact_err, "max_z": worst_z}


@check("processes", "rotation_preserves_p_norms")
def _norms(quick):
    rng = np.random.default_rng(405)
    worst = 0.0
    for inst in _instances(quick, 405):
        p, r = inst["p"], inst["r"]
        V = rotation_vk(inst["q"], inst["s"], p, r)
        L = embed_L(p, r)
        for _ in range(3):
            psi = rng.standard_normal(p.size)
            worst = max(worst, abs(p_norm(V @ (L @ psi), p) - p_norm(psi, r)) / p_norm(psi, r))
    return worst <= 1e-10, {"max_relative_error": worst}


# -- kt1 -------------------------------------------------------------------------

def kt1_monte_carlo(reps: int, seed: int, N: int = 10, n: int = 1000, rate: float = 1.0) -> dict:
    """Regressors at the true parameter and residuals at the estimate, per replicate."""
    fam, th = make_family("exponential", [rate])
    dist = build_equiprobable_grid(fam, th, N)
    true_state = kt1_state(fam, th, dist)
    cut = default_cutoff(true_state, n)
    x1 = np.empty((reps, cut + 1))
    x2c = np.empty_like(x1)
    resid = np.empty_like(x1)
    reg1 = np.empty_like(x1)
    reg2 = np.empty_like(x1)
    for i in range(reps):
        counts = counts_from_sample(fam.sample(th, replicate_stream(seed, i), n), dist)
        st = kt1_state(fam, mle_discrete(counts, fam, th, dist), dist)
        for l in range(cut + 1):
            x1[i, l] = counts.counts[l:].sum() / n
            x2c[i, l] = centred_score_regressor(counts, true_state, l)
            reg1[i, l], reg2[i, l] = kt1_regressors(counts, st.score, l)
            resid[i, l] = counts.counts[l] / n - kt1_predict(counts, st, l)
    return {"x1": x1, "x2c": x2c, "resid": resid, "reg1": reg1, "reg2": reg2, "cutoff": cut,
            "probs": true_state.probs, "reps": reps}


def centred_mean_z(mc: dict) -> np.ndarray:
    x = mc["x2c"]
    return np.abs(x.mean(axis=0)) / (x.std(axis=0) / np.sqrt(mc["reps"]))


def cross_cov_z(mc: dict) -> np.ndarray:
    """|Cov(x1, x2*)| / SE per cell, skipping cells where x1 is constant."""
    a = mc["x1"] - mc["x1"].mean(axis=0)
    b = mc["x2c"] - mc["x2c"].mean(axis=0)
    prod = a * b
    se = prod.std(axis=0) / np.sqrt(mc["reps"])
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.abs(prod.mean(axis=0)) / se
    return z[se > 0]


def residual_correlations(mc: dict) -> np.ndarray:
    """Correlations of residuals with both regressors at cells where the regressor varies.

    Where the tail holds only two cells the fit is exact and the residual is
    identically zero; its covariance with anything is zero, so it enters as 0
    rather than as a correlation of rounding errors.
    """
    out = []
    for l in range(mc["cutoff"] + 1):
        resid = mc["resid"][:, l]
        for reg in (mc["reg1"][:, l], mc["reg2"][:, l]):
            if np.std(reg) < 1e-12 * max(1.0, np.abs(reg).max()):
                continue
            if np.std(resid) < 1e-12:
                out.append(0.0)
                continue
            out.append(np.corrcoef(resid, reg)[0, 1])
    return np.abs(np.array(out))


_KT1_CACHE: dict = {}


def _kt1_mc(quick):
    reps = 2000 if quick else 10000
    if reps not in _KT1_CACHE:
        _KT1_CACHE[reps] = kt1_monte_carlo(reps, 501)
    return _KT1_CACHE[reps]


@check("kt1", "centred_regressor_mean_zero")
def _kt1_mean(quick):
    z = centred_mean_z(_kt1_mc(quick))
    return float(z.max()) <= 3.0, {"max_z": float(z.max()), "cells": int(z.size)}


@check("kt1", "regressor_orthogonality")
def _kt1_cov(quick):
    z = cross_cov_z(_kt1_mc(quick))
    return float(z.max()) <= 3.0, {"max_z": float(z.max()), "cells": int(z.size)}


@check("kt1", "residuals_uncorrelated_with_regressors")
def _kt1_resid(quick):
    mc = _kt1_mc(quick)
    c = residual_correlations(mc)
    bound = 3.0 / np.sqrt(mc["reps"])
    return float(c.max()) <= bound, {"max_abs_correlation": float(c.max()), "bound": bound, "pairs": int(c.size)}


# -- multidim --------------------------------------------------------------------

@check("multidim", "sym_index_roundtrip")
def _sym(quick):
    bad = 0
    for n in range(1, 21 if quick else 51):
        m = SymIndexMap(n)
        images = {m.index(i, j) for i in range(n) for j in range(n)}
        if len(images) != n * (n + 1) // 2 or m.size != len(images):
            bad += 1
        if any(sorted(m.pair(m.index(i, j))) != sorted((i, j)) for i in range(n) for j in range(n)):
            bad += 1
    return bad == 0, {"failures": bad}


def product_scores(px: np.ndarray, py: np.ndarray, qx: np.ndarray, qy: np.ndarray) -> np.ndarray:
    """{1, q_x (x) 1, 1 (x) q_y}: orthonormal in the product measure."""
    one_x, one_y = np.ones(px.size), np.ones(py.size)
    return np.vstack([np.kron(one_x, one_y), np.kron(qx, one_y), np.kron(one_x, qy)])


def rotated_covariance_defect(p, r, q, s) -> float:
    """max |L V^T Pi D_p V L - (D_r - sum_k D_r s_k s_k^T D_r)|."""
    V = rotation_vk(q, s, p, r).matrix
    L = np.diag(np.sqrt(r / p))
    Pi = big_pi(p, q).matrix
    Dr = np.diag(r)
    lhs = L @ V.T @ Pi @ np.diag(p) @ V @ L
    rhs = Dr - sum(Dr @ np.outer(sk, sk) @ Dr for sk in s)
    return maxabs(lhs - rhs)


@check("multidim", "rotation_identity_on_3x3_grid")
def _rot2d(quick):
    fx, tx = make_family("exponential", [1.0])
    fy, ty = make_family("normal", [0.0, 1.0], ["mean"])
    dx = build_equiprobable_grid(fx, tx, 3)
    dy = discretize(fy, ty, [-10.0, -0.5, 0.7])
    grid = Grid2D.independent(dx, dy)
    qx = score_set(fx, tx, dx).vectors[1]
    qy = score_set(fy, ty, dy).vectors[1]
    p = grid.flat_distribution().probs
    q = product_scores(dx.probs, dy.probs, qx, qy)
    target = UniformTarget(9, 2)
    err = rotated_covariance_defect(p, target.distribution.probs, q, target.scores.vectors)
    return err <= 1e-9, {"max_defect": err}


@check("multidim", "symmetrize_swap_invariance")
def _swap(quick):
    rng = np.random.default_rng(602)
    atoms = np.sort(rng.normal(size=4))
    d = DiscreteDistribution(atoms, rng.dirichlet(np.ones(4)), atoms[0])
    grid = Grid2D.independent(d, d)
    pts = np.concatenate([atoms, atoms + 0.1, [atoms[0] - 1.0, atoms[-1] + 1.0]])
    bad = sum(np.any(symmetrize_colour_blind(a, b, grid).values != symmetrize_colour_blind(b, a, grid).values)
              for a in pts for b in pts)
    return bad == 0, {"pairs": pts.size ** 2, "violations": int(bad)}


@check("multidim", "pillow_tie_down")
def _pillow(quick):
    rng = np.random.default_rng(603)
    d1 = DiscreteDistribution.from_probs(rng.dirichlet(np.full(5, 2.0)))
    d2 = DiscreteDistribution.from_probs(rng.dirichlet(np.full(5, 2.0)))
    grid = Grid2D.independent(d1, d2)
    h = grid.flat_distribution().probs
    worst = 0.0
    for i in range(100 if quick else 1000):
        z = np.random.default_rng([603, i]).standard_normal(h.size)
        field = cumulative_field(pillow_increments(np.sqrt(h) * z, grid), grid.n)
        worst = max(worst, maxabs(field[-1, :]), maxabs(field[:, -1]))
    return worst <= 1e-10, {"max_edge_value": worst}


# -- gof -------------------------------------------------------------------------

def rotated_ks_sample(family, theta, reps: int, seed: int, cells: int = 10, n: int = 500,
                      target: UniformTarget | None = None) -> np.ndarray:
    grid = build_equiprobable_grid(family, theta, cells)
    model = SampledModel(family, np.asarray(theta), n, grid, target)
    return mc_null_table("ks", model, reps, seed).values


@check("gof", "distribution_freeness")
def _freeness(quick):
    reps = 1000 if quick else 5000
    target = UniformTarget(10, 1)
    fe, te = make_family("exponential", [2.0])
    fn, tn = make_family("normal", [1.0, 2.0], ["mean"])
    a = rotated_ks_sample(fe, te, reps, 701, target=target)
    b = rotated_ks_sample(fn, tn, reps, 702, target=target)
    d, pv = two_sample_ks(a, b)
    return pv >= 0.01, {"distance": d, "p_value": pv, "replicates": reps}


@check("gof", "chi_squared_mean_with_estimation")
def _chisq_mean(quick):
    reps = 5000 if quick else 20000
    model = GaussianTargetModel(UniformTarget(10, 1))
    vals = model.simulate_batch("chisq", 703, 0, reps)
    z = abs(vals.mean() - (10 - 2)) / (vals.std() / np.sqrt(reps))
    return z <= 3.0, {"mean": float(vals.mean()), "expected": 8, "z": float(z)}


@check("gof", "p_value_uniformity")
def _uniformity(quick):
    from scipy.stats import kstest

    runs = 500 if quick else 5000
    fam, th = make_family("exponential", [1.5])
    target = UniformTarget(10, 1)
    table = mc_null_table("ks", GaussianTargetModel(target), 20000 if quick else 100000, 704)
    grid = build_equiprobable_grid(fam, th, 10)
    pvals = np.empty(runs)
    for i in range(runs):
        x = fam.sample(th, replicate_stream(705, i), 500)
        pvals[i] = run_test(x, fam, grid, th, target, table=table).p_value
    res = kstest(pvals, "uniform")
    return res.pvalue >= 0.01, {"ks_distance": float(res.statistic), "p_value": float(res.pvalue), "runs": runs}


# -- cli -------------------------------------------------------------------------

@check("cli", "byte_identical_outputs")
def _cli_determinism(quick):
    import tempfile
    from pathlib import Path

    from .cli import main

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        data = tmp / "data.csv"
        fam, th = make_family("exponential", [1.0])
        data.write_text("x\n" + "\n".join(repr(float(v)) for v in fam.sample(th, replicate_stream(801, 0), 300)) + "\n")
        outs = []
        for k in range(2):
            t, r = tmp / f"table{k}.txt", tmp / f"report{k}.json"
            codes = (main(["table", "--cells", "8", "--K", "1", "--reps", "1000", "--seed", "5", "--out", str(t)]),
                     main(["test", "--data", str(data), "--family", "exponential", "--cells", "8",
                           "--reps", "1000", "--seed", "5", "--out", str(r)]))
            outs.append((codes, t.read_bytes(), r.read_bytes()))
    same = outs[0] == outs[1] and outs[0][0] == (0, 0)
    return same, {"exit_codes": list(outs[0][0]), "identical": outs[0][1:] == outs[1][1:]}


# -- driver ----------------------------------------------------------------------

def run_checks(quick: bool = False, only: list[str] | None = None) -> dict:
    results = []
    for module, name, fn in CHECKS:
        if only and module not in only and f"{module}.{name}" not in only:
            continue
        t0 = time.perf_counter()
        try:
            passed, detail = fn(quick)
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, {"exception": f"{type(exc).__name__}: {exc}"}
        results.append({"module": module, "name": name, "passed": bool(passed),
                        "seconds": round(time.perf_counter() - t0, 3),
                        "detail": {k: _plain(v) for k, v in detail.items()}})
    return {"passed": all(r["passed"] for r in results), "quick": quick, "checks": results}


def _plain(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v
