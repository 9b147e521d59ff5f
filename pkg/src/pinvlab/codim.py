"""Projections, essential codimension and the direct rotation.

In finite dimension every pair of orthogonal projections is Fredholm and
the essential codimension reduces to a rank difference; we nevertheless
compute it from subspace intersections (via principal angles) and
cross-check against the rank count, so that a misconfigured rank
tolerance is caught instead of silently corrupting indices downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, GapTooLargeError, PreconditionError
from .matcore import DEFAULT_TOL, ToleranceConfig, as_matrix, eigh, svd

# cos(theta) above this value counts as a zero principal angle.
_INTERSECTION_COS = 1.0 - 1e-8


@dataclass(frozen=True)
class Projector:
    """Validated orthogonal projection matrix."""

    matrix: np.ndarray

    @staticmethod
    def from_matrix(m, tol: ToleranceConfig = DEFAULT_TOL) -> "Projector":
        p = as_matrix(m)
        if p.shape[0] != p.shape[1]:
            raise PreconditionError("a projector must be square")
        if np.linalg.norm(p @ p - p) > 1e-9 * max(1.0, np.linalg.norm(p)):
            raise PreconditionError("matrix is not idempotent")
        if np.linalg.norm(p - p.conj().T) > 1e-9:
            raise PreconditionError("matrix is not Hermitian")
        _, w = eigh(p, tol)
        if np.any(np.minimum(np.abs(w), np.abs(w - 1.0)) > 1e-8):
            raise PreconditionError("eigenvalues are not within 1e-8 of {0,1}")
        return Projector(p)

    @staticmethod
    def onto(cols) -> "Projector":
        """Projector onto the span of (not necessarily orthonormal) columns."""
        c = np.asarray(cols, dtype=complex)
        res = svd(c) if c.shape[1] else None
        if res is None or res.rank == 0:
            return Projector(np.zeros((c.shape[0], c.shape[0]), dtype=complex))
        u = res.U[:, : res.rank]
        return Projector(u @ u.conj().T)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def rank(self, tol: ToleranceConfig = DEFAULT_TOL) -> int:
        # eigenvalues of a projector cluster at 0 and 1, so 1/2 separates
        # them regardless of scale; a relative SVD cutoff would miscount
        # the rank of a numerically-zero projector
        _, w = eigh(self.matrix, tol)
        return int(np.sum(w > 0.5))

    def basis(self, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
        q, w = eigh(self.matrix, tol)
        return q[:, w > 0.5]

    def complement_basis(self, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
        q, w = eigh(self.matrix, tol)
        return q[:, w <= 0.5]


def intersection_dim(x, y) -> int:
    """dim(span(x) ∩ span(y)) for orthonormal column blocks x, y.

    Counted as the number of principal-angle cosines above 1 - 1e-8.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if x.shape[1] == 0 or y.shape[1] == 0:
        return 0
    cos = np.linalg.svd(x.conj().T @ y, compute_uv=False)
    return int(np.sum(cos >= _INTERSECTION_COS))


def essential_codimension(p: Projector, q: Projector,
                          tol: ToleranceConfig = DEFAULT_TOL) -> int:
    """Fredholm index of the pair (P, Q).

    Computed as dim(N(Q) ∩ R(P)) - dim(R(Q) ∩ N(P)) through principal
    angles and cross-checked against rank(P) - rank(Q); a disagreement
    raises ConsistencyError.
    """
    if p.dim != q.dim:
        raise PreconditionError("projections must act on the same space")
    rp, rq = p.basis(tol), q.basis(tol)
    np_, nq = p.complement_basis(tol), q.complement_basis(tol)
    by_angles = intersection_dim(nq, rp) - intersection_dim(rq, np_)
    by_rank = rp.shape[1] - rq.shape[1]
    if by_angles != by_rank:
        raise ConsistencyError(
            f"index mismatch: principal angles give {by_angles}, "
            f"rank difference gives {by_rank}"
        )
    return by_rank


def direct_rotation(p: Projector, q: Projector,
                    tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Canonical unitary U with U P U* = Q, defined when ||P - Q|| < 1.

    U is the unitary polar factor of W = QP + (I-Q)(I-P); the inverse
    square root of I - (P-Q)^2 is taken spectrally with eigenvalues
    clamped below at the rank tolerance.
    """
    if p.dim != q.dim:
        raise PreconditionError("projections must act on the same space")
    pm, qm = p.matrix, q.matrix
    gap = float(np.linalg.norm(pm - qm, 2))
    if gap >= 1.0 - tol.rank_rel:
        raise GapTooLargeError(
            f"||P - Q|| = {gap:.6f} >= 1; projections are not directly rotatable"
        )
    n = p.dim
    ident = np.eye(n, dtype=complex)
    w = qm @ pm + (ident - qm) @ (ident - pm)
    m = ident - (pm - qm) @ (pm - qm)
    vec, val = eigh(m, tol)
    val = np.maximum(val, tol.rank_rel)
    inv_sqrt = (vec / np.sqrt(val)) @ vec.conj().T
    return inv_sqrt @ w


def basis_matching_unitary(p: Projector, q: Projector,
                           tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Some unitary with U P U* = Q, valid for any equal-rank pair.

    Fallback used when the projections are too far apart for the direct
    rotation; the witness is basis-dependent but satisfies the same
    conjugation contract.
    """
    if p.rank(tol) != q.rank(tol):
        raise PreconditionError("projections must have equal rank")
    bp = np.hstack([p.basis(tol), p.complement_basis(tol)])
    bq = np.hstack([q.basis(tol), q.complement_basis(tol)])
    return bq @ bp.conj().T


def conjugating_unitary(p: Projector, q: Projector,
                        tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Direct rotation when the gap allows it, basis matching otherwise."""
    try:
        return direct_rotation(p, q, tol)
    except GapTooLargeError:
        return basis_matching_unitary(p, q, tol)
