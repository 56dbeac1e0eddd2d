"""Projection, reflection, embedding and rotation matrices.

All operators are dense ``N x N`` arrays wrapped in :class:`LinearOperator`
with a role tag; ``check`` reports how far the role's defining identities
are from holding.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DegenerateReflection, DimensionMismatch
from .scores import ORTHO_TOL, ScoreSet, p_norm

ROLES = ("projection", "reflection", "embedding", "rotation", "accumulation")
IDENTITY_TOL = 1e-10
UNIT_TOL = 1e-10
ALIGN_TOL = 1e-10


@dataclass(frozen=True)
class LinearOperator:
    matrix: np.ndarray
    role: str
    weight: Optional[np.ndarray] = None  # the p of D_p the operator is adapted to

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown operator role {self.role!r}")
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"operator must be square, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def T(self) -> np.ndarray:
        return self.matrix.T

    def __matmul__(self, other):
        if isinstance(other, LinearOperator):
            other = other.matrix
        return self.matrix @ other

    def defects(self) -> dict:
        """Max-norm residuals of the identities implied by the role."""
        m = self.matrix
        eye = np.eye(self.size)
        out = {}
        if self.role == "projection":
            out["idempotent"] = _maxabs(m @ m - m)
        if self.role == "reflection":
            out["involution"] = _maxabs(m @ m - eye)
        if self.role in ("reflection", "rotation") and self.weight is not None:
            d = np.diag(self.weight)
            out["preserves_p_norm"] = _maxabs(m.T @ d @ m - d)
        return out

    def check(self, tol: float = IDENTITY_TOL) -> bool:
        return all(v <= tol for v in self.defects().values())


def _maxabs(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def _as_vectors(scores: Union[ScoreSet, np.ndarray]) -> np.ndarray:
    return scores.vectors if isinstance(scores, ScoreSet) else np.atleast_2d(np.asarray(scores, float))


def pi_sqrt(p) -> LinearOperator:
    """I - sqrt(p) sqrt(p)^T: orthogonal projection away from sqrt(p)."""
    root = np.sqrt(np.asarray(p, dtype=float))
    return LinearOperator(np.eye(root.size) - np.outer(root, root), "projection", None)


def big_pi(p, scores: Union[ScoreSet, np.ndarray]) -> LinearOperator:
    """I - D_p sum_k q_k q_k^T, projecting out every score direction."""
    p = np.asarray(p, dtype=float)
    q = _as_vectors(scores)
    if q.shape[1] != p.size:
        raise DimensionMismatch(f"scores have length {q.shape[1]}, weights {p.size}")
    ScoreSet(q, p).check(ORTHO_TOL)
    return LinearOperator(np.eye(p.size) - (p[:, None] * q.T) @ q, "projection", p)


def reflection_u0(a, b) -> LinearOperator:
    """Euclidean reflection swapping unit vectors ``a`` and ``b``."""
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch("reflection vectors differ in length")
    for name, v in (("a", a), ("b", b)):
        if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
            raise ValueError(f"{name} is not a unit vector (norm {np.linalg.norm(v):.12g})")
    if np.dot(a, b) >= 1.0 - 1e-12:
        raise DegenerateReflection("a and b coincide; the reflection is undefined")
    d = a - b
    c0 = 2.0 / np.dot(d, d)  # equals 1 / (1 - <a, b>) for unit vectors
    return LinearOperator(np.eye(a.size) - c0 * np.outer(d, d), "reflection", np.ones(a.size))


def _weighted_householder(xi, eta, p) -> np.ndarray:
    d = xi - eta
    c = 2.0 / np.dot(d, p * d)  # 1 / (1 - <xi, eta>_P), better conditioned near alignment
    return np.eye(p.size) - c * np.outer(d, d * p)


def reflection_weighted(xi, eta, p) -> LinearOperator:
    """Involution I - c (xi - eta)(xi - eta)^T D_p swapping P-unit vectors xi and eta."""
    xi, eta, p = (np.asarray(v, dtype=float) for v in (xi, eta, p))
    if not (xi.shape == eta.shape == p.shape):
        raise DimensionMismatch("xi, eta and p must have the same length")
    for name, v in (("xi", xi), ("eta", eta)):
        if abs(p_norm(v, p) - 1.0) > UNIT_TOL:
            raise ValueError(f"{name} does not have unit P-norm ({p_norm(v, p):.12g})")
    if np.dot(xi, p * eta) >= 1.0 - 1e-12:
        raise DegenerateReflection("xi and eta coincide; the reflection is undefined")
    return LinearOperator(_weighted_householder(xi, eta, p), "reflection", p)


def embed_L(p, r) -> LinearOperator:
    """Diagonal D_r^{1/2} D_p^{-1/2}, carrying L^2_R functions into L^2_P."""
    p, r = np.asarray(p, dtype=float), np.asarray(r, dtype=float)
    if p.shape != r.shape:
        raise DimensionMismatch("p and r must have the same length")
    return LinearOperator(np.diag(np.sqrt(r / p)), "embedding", p)


def rotation_vk(q_set: Union[ScoreSet, np.ndarray], s_set: Union[ScoreSet, np.ndarray], p, r) -> LinearOperator:
    """Product of weighted reflections with V L s_k = q_k and V^T D_p V = D_p.

    Step j reflects q_j against the image of s_j under the reflections built
    so far. A step whose vectors already agree (P-distance below 1e-10)
    contributes the identity.
    """
    p, r = np.asarray(p, dtype=float), np.asarray(r, dtype=float)
    q, s = _as_vectors(q_set), _as_vectors(s_set)
    if q.shape != s.shape:
        raise DimensionMismatch(f"score sets differ in shape: {q.shape} vs {s.shape}")
    if q.shape[1] != p.size or p.size != r.size:
        raise DimensionMismatch("score vectors, p and r must share one length")
    ScoreSet(q, p).check(ORTHO_TOL)
    ScoreSet(s, r).check(ORTHO_TOL)
    lvec = np.sqrt(r / p)
    v = np.eye(p.size)
    for qj, sj in zip(q, s):
        image = v @ (lvec * sj)
        if p_norm(qj - image, p) < ALIGN_TOL:
            continue
        v = _weighted_householder(qj, image, p) @ v
    return LinearOperator(v, "rotation", p)


def accumulation_matrix(n: int) -> LinearOperator:
    return LinearOperator(np.tril(np.ones((n, n))), "accumulation")


def accumulate(v) -> np.ndarray:
    """Prefix sums, i.e. J v."""
    return np.cumsum(np.asarray(v, dtype=float), axis=-1)
