"""Moore-Penrose inverse, reduced minimum modulus and perturbation bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .matcore import DEFAULT_TOL, GaugeNorm, ToleranceConfig, as_matrix, svd

# Relative slack allowed when comparing a computed quantity against a
# proved bound; absorbs double-precision SVD noise.
BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class PinvResult:
    pinv: np.ndarray
    gamma: float          # reduced minimum modulus; 0 for the zero matrix
    range_proj: np.ndarray   # projector onto R(A)
    null_proj: np.ndarray    # projector onto N(A)
    rank: int


@dataclass(frozen=True)
class BoundReport:
    hypothesis_met: bool
    bound: float
    actual: float

    @property
    def slack(self) -> float:
        return self.bound - self.actual


def moore_penrose(a, tol: ToleranceConfig = DEFAULT_TOL) -> PinvResult:
    """Pseudoinverse together with gamma(A) and the range/null projectors.

    gamma(A) is the smallest nonzero singular value (= 1/||A^+||).  For
    the zero matrix gamma is reported as 0 with rank 0.
    """
    m = as_matrix(a)
    res = svd(m, tol)
    r = res.rank
    u_r = res.U[:, :r]
    v_r = res.Vt[:r, :].conj().T
    s_r = res.singular_values[:r]
    if r > 0:
        pinv = (v_r / s_r) @ u_r.conj().T
        gamma = float(s_r[-1])
    else:
        pinv = np.zeros((m.shape[1], m.shape[0]), dtype=complex)
        gamma = 0.0
    range_proj = u_r @ u_r.conj().T
    null_proj = np.eye(m.shape[1], dtype=complex) - v_r @ v_r.conj().T
    return PinvResult(pinv, gamma, range_proj, null_proj, r)


def pinv_matrix(a, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    return moore_penrose(a, tol).pinv


def wedin_residual(a, b, g: GaugeNorm, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Gauge norm of the defect in the algebraic identity relating A^+ - B^+
    to A - B through the range and nullspace projectors.

    The identity is exact, so the return value is pure roundoff.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise PreconditionError("A and B must have the same shape")
    ra = moore_penrose(a, tol)
    rb = moore_penrose(b, tol)
    ident = np.eye(a.shape[0], dtype=complex)
    ident_n = np.eye(a.shape[1], dtype=complex)
    ata_p = pinv_matrix(a.conj().T @ a, tol)
    bbs_p = pinv_matrix(b @ b.conj().T, tol)
    lhs = ra.pinv - rb.pinv
    rhs = (
        -ra.pinv @ (a - b) @ rb.pinv
        + ata_p @ (a - b).conj().T @ (ident - b @ rb.pinv)
        + (ident_n - ra.pinv @ a) @ (a - b).conj().T @ bbs_p
    )
    return g.of_singular_values(np.linalg.svd(lhs - rhs, compute_uv=False))


def _norm_bound(gamma_a: float, norm_a_pinv: float, dist: float) -> float:
    if dist >= gamma_a:
        return float("inf")
    return norm_a_pinv / (1.0 - norm_a_pinv * dist)


def same_rank_bound(a, b, tol: ToleranceConfig = DEFAULT_TOL) -> BoundReport:
    """Norm bound for B^+ under an equal-rank perturbation within gamma(A)."""
    ra = moore_penrose(a, tol)
    rb = moore_penrose(b, tol)
    dist = float(np.linalg.norm(as_matrix(a) - as_matrix(b), 2))
    norm_a_pinv = 1.0 / ra.gamma if ra.rank > 0 else float("inf")
    actual = float(np.linalg.norm(rb.pinv, 2))
    met = ra.rank == rb.rank and ra.rank > 0 and dist < ra.gamma
    bound = _norm_bound(ra.gamma, norm_a_pinv, dist) if ra.rank > 0 else float("inf")
    return BoundReport(met, bound, actual)


def index_bound(a, b, tol: ToleranceConfig = DEFAULT_TOL) -> BoundReport:
    """Same bound with the hypothesis stated through the nullspace index.

    In finite dimension a vanishing index of the pair of null projectors
    is exactly equality of nullities.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise PreconditionError("A and B must have the same shape")
    ra = moore_penrose(a, tol)
    rb = moore_penrose(b, tol)
    nullity_a = a.shape[1] - ra.rank
    nullity_b = b.shape[1] - rb.rank
    dist = float(np.linalg.norm(a - b, 2))
    norm_a_pinv = 1.0 / ra.gamma if ra.rank > 0 else float("inf")
    actual = float(np.linalg.norm(rb.pinv, 2))
    met = nullity_a == nullity_b and ra.rank > 0 and dist < ra.gamma
    bound = _norm_bound(ra.gamma, norm_a_pinv, dist) if ra.rank > 0 else float("inf")
    return BoundReport(met, bound, actual)


def lipschitz_constant(a, tol: ToleranceConfig = DEFAULT_TOL) -> float:
    """Local Lipschitz constant of the pseudoinverse map around A.

    Valid on the ball of gauge radius 1/(2 ||A^+||) intersected with the
    equal-nullity stratum:  (||A|| + 1/(2||A^+||))^2 + 8 ||A^+||^2.
    """
    res = moore_penrose(a, tol)
    if res.rank == 0:
        raise PreconditionError("Lipschitz constant undefined for the zero matrix")
    norm_a = float(np.linalg.norm(as_matrix(a), 2))
    norm_pinv = 1.0 / res.gamma
    return (norm_a + 0.5 / norm_pinv) ** 2 + 8.0 * norm_pinv**2
