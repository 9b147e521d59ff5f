"""Rank strata of a reference matrix, their group action and cross-sections.

A perturbation B of A is classified by the integer index
k = nullity(B) - nullity(A) = rank(A) - rank(B).  The stratum of index k
is the maximal set on which the pseudoinverse map is continuous; this
module provides the classifier, constructive witnesses for the
transitive (G, K) . B = G B K^{-1} action, local cross-sections, stratum
corrections, a six-condition continuity certifier for sequences, and the
pseudoinverse map with its tangent map.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import codim
from .codim import Projector
from .errors import (
    ConsistencyError,
    ObstructionError,
    OutsideNeighborhoodError,
    PreconditionError,
    StratumError,
)
from .matcore import (
    DEFAULT_TOL,
    GaugeNorm,
    OP_NORM,
    ToleranceConfig,
    as_matrix,
    gauge_norm,
    null_basis,
    range_basis,
    svd,
)
from .pinv import moore_penrose, pinv_matrix


@dataclass(frozen=True)
class StratumIndex:
    k: int


@dataclass(frozen=True)
class IndexRange:
    k_min: int
    k_max: int

    def __contains__(self, k: int) -> bool:
        return self.k_min <= k <= self.k_max


@dataclass(frozen=True)
class GroupPair:
    """An element (G, K) of the product group of invertibles."""

    G: np.ndarray
    K: np.ndarray

    def validate(self, tol: ToleranceConfig = DEFAULT_TOL) -> "GroupPair":
        for name, m in (("G", self.G), ("K", self.K)):
            mm = as_matrix(m)
            if mm.shape[0] != mm.shape[1]:
                raise PreconditionError(f"{name} must be square")
            s = np.linalg.svd(mm, compute_uv=False)
            if s[-1] <= tol.rank_rel * len(s) * s[0]:
                raise PreconditionError(f"{name} is numerically singular")
        return self

    def distance_to_identity(self, g: GaugeNorm = OP_NORM) -> tuple:
        ident_g = np.eye(self.G.shape[0], dtype=complex)
        ident_k = np.eye(self.K.shape[0], dtype=complex)
        return (gauge_norm(self.G - ident_g, g), gauge_norm(self.K - ident_k, g))


def stratum_index(b, a, tol: ToleranceConfig = DEFAULT_TOL) -> StratumIndex:
    """Index of B relative to A, with a three-way consistency check.

    Null-projector index, negated range-projector index and the rank
    difference are all computed; disagreement raises ConsistencyError.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise PreconditionError("A and B must have the same shape")
    ra = moore_penrose(a, tol)
    rb = moore_penrose(b, tol)
    k_null = codim.essential_codimension(
        Projector(rb.null_proj), Projector(ra.null_proj), tol
    )
    k_range = codim.essential_codimension(
        Projector(rb.range_proj), Projector(ra.range_proj), tol
    )
    k_rank = ra.rank - rb.rank
    if not (k_null == -k_range == k_rank):
        raise ConsistencyError(
            f"stratum index disagreement: null {k_null}, "
            f"range {-k_range}, rank {k_rank}"
        )
    return StratumIndex(k_null)


def index_range(a, tol: ToleranceConfig = DEFAULT_TOL) -> IndexRange:
    """Admissible indices around A: -min(dim N(A), dim R(A)^perp) .. dim N(A)^perp."""
    a = as_matrix(a)
    r = svd(a, tol).rank
    n1 = a.shape[1] - r      # dim N(A)
    n2 = r                   # dim N(A)^perp
    n3 = a.shape[0] - r      # dim R(A)^perp
    return IndexRange(-min(n1, n3), n2)


def stratum_representative(a, k: StratumIndex | int,
                           tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """A concrete element of the index-k stratum around A.

    k = 0 returns A itself; k < 0 adds a partial isometry from N(A) into
    R(A)^perp; k > 0 compresses A onto a corank-k subspace of N(A)^perp.
    """
    a = as_matrix(a)
    kk = k.k if isinstance(k, StratumIndex) else int(k)
    if kk not in index_range(a, tol):
        raise PreconditionError(f"index {kk} outside the admissible range")
    if kk == 0:
        return a.copy()
    res = svd(a, tol)
    r = res.rank
    if kk < 0:
        l = -kk
        right = res.Vt[r : r + l, :].conj().T       # l vectors in N(A)
        left = res.U[:, r : r + l]                  # l vectors in R(A)^perp
        return a + left @ right.conj().T
    v_keep = res.Vt[: r - kk, :].conj().T           # corank-k subspace of N(A)^perp
    return a @ (v_keep @ v_keep.conj().T)


def act(gk: GroupPair, b, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Apply (G, K) . B = G B K^{-1}; preserves the stratum of B."""
    gk.validate(tol)
    return gk.G @ as_matrix(b) @ np.linalg.inv(gk.K)


def transitivity_witness(b1, b2, tol: ToleranceConfig = DEFAULT_TOL) -> GroupPair:
    """Explicit (G, K) with G B1 K^{-1} = B2 for equal-rank B1, B2.

    From SVDs B1 = U1 S1 V1*, B2 = U2 S2 V2* with common rank r:
    K = V2 V1* and G = U2 (S2 S1^+ + (I - P_r)) U1*, where P_r projects
    onto the leading r coordinates; then G B1 K^{-1} = B2 exactly.
    """
    b1 = as_matrix(b1)
    b2 = as_matrix(b2)
    if b1.shape != b2.shape:
        raise PreconditionError("B1 and B2 must have the same shape")
    r1 = svd(b1, tol)
    r2 = svd(b2, tol)
    if r1.rank != r2.rank:
        raise StratumError(
            f"no witness exists across strata: rank {r1.rank} vs {r2.rank}"
        )
    m = b1.shape[0]
    r = r1.rank
    scale = np.zeros((m, m), dtype=complex)
    scale[:r, :r] = np.diag(r2.singular_values[:r] / r1.singular_values[:r])
    scale[r:, r:] = np.eye(m - r)
    g = r2.U @ scale @ r1.U.conj().T
    k = r2.Vt.conj().T @ r1.Vt
    return GroupPair(g, k).validate(tol)


def local_section_sigma(a, b, tol: ToleranceConfig = DEFAULT_TOL) -> GroupPair:
    """Local cross-section of the action at A, evaluated at nearby B.

    sigma_1 = B A^+ + (I - P_R(B))(I - P_R(A)) and
    sigma_2 = P_N(B) P_N(A) + (I - P_N(B))(I - P_N(A)); both are
    invertible for B close to A in the zero stratum, and
    sigma_1 A sigma_2^{-1} = B.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    if stratum_index(b, a, tol).k != 0:
        raise StratumError("the section is only defined on the zero stratum")
    ra = moore_penrose(a, tol)
    rb = moore_penrose(b, tol)
    ident_m = np.eye(a.shape[0], dtype=complex)
    ident_n = np.eye(a.shape[1], dtype=complex)
    s1 = b @ ra.pinv + (ident_m - rb.range_proj) @ (ident_m - ra.range_proj)
    s2 = rb.null_proj @ ra.null_proj + (ident_n - rb.null_proj) @ (ident_n - ra.null_proj)
    for name, m in (("first", s1), ("second", s2)):
        s = np.linalg.svd(m, compute_uv=False)
        if s[-1] <= tol.rank_rel * len(s) * max(s[0], 1.0):
            raise OutsideNeighborhoodError(
                f"{name} section component singular; B too far from A"
            )
    return GroupPair(s1, s2)


def approximate_in_stratum(b, a, k_target: StratumIndex | int, eps: float,
                           tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Perturb B by at most eps (any gauge) into the index-k_target stratum.

    Only rank-increasing moves are possible under small perturbations;
    a rank-decreasing request raises ObstructionError.  The construction
    bumps B on an m-dimensional subspace of N(B) by a partial isometry
    into R(B)^perp scaled by eps/m, where m is the required rank jump.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    kk = k_target.k if isinstance(k_target, StratumIndex) else int(k_target)
    if kk not in index_range(a, tol):
        raise PreconditionError(f"index {kk} outside the admissible range")
    rank_a = svd(a, tol).rank
    res_b = svd(b, tol)
    m_jump = (rank_a - kk) - res_b.rank
    if m_jump < 0:
        raise ObstructionError(
            "rank can only increase under arbitrarily small perturbations; "
            f"target rank {rank_a - kk} < rank(B) = {res_b.rank}"
        )
    if m_jump == 0:
        return b.copy()
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    r = res_b.rank
    right = res_b.Vt[r : r + m_jump, :].conj().T   # inside N(B)
    left = res_b.U[:, r : r + m_jump]              # inside R(B)^perp
    out = b + (eps / m_jump) * (left @ right.conj().T)
    got = stratum_index(out, a, tol).k
    if got != kk:
        raise ConsistencyError(f"bump landed in stratum {got}, wanted {kk}")
    return out


def correct_to_stratum_zero(a, b, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Low-rank correction C with B + C in the zero stratum of A.

    For k < 0 the correction kills B on a subspace of N(A) ∩ N(B)^perp
    (C = -B P); for k > 0 it re-injects A on a subspace of
    N(B) ∩ N(A)^perp (C = A P).  rank(C) = |k| and the gauge norm of C
    is controlled by the distance from A to B.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    k = stratum_index(b, a, tol).k
    if k == 0:
        raise PreconditionError("B is already in the zero stratum")
    na = null_basis(a, tol)
    nb = null_basis(b, tol)
    nb_perp = codim.Projector(np.eye(b.shape[1], dtype=complex) - nb @ nb.conj().T)
    na_perp = codim.Projector(np.eye(a.shape[1], dtype=complex) - na @ na.conj().T)
    if k < 0:
        basis = _intersection_basis(na, nb_perp.basis(tol))
        need = -k
    else:
        basis = _intersection_basis(nb, na_perp.basis(tol))
        need = k
    if basis.shape[1] < need:
        raise OutsideNeighborhoodError(
            f"intersection dimension {basis.shape[1]} < |k| = {need}; "
            "B is not close enough to A for the correction"
        )
    sub = basis[:, :need]
    proj = sub @ sub.conj().T
    c = -b @ proj if k < 0 else a @ proj
    if stratum_index(b + c, a, tol).k != 0:
        raise ConsistencyError("correction failed to reach the zero stratum")
    return c


def _intersection_basis(x, y) -> np.ndarray:
    """Orthonormal basis of span(x) ∩ span(y) (orthonormal column inputs)."""
    if x.shape[1] == 0 or y.shape[1] == 0:
        return np.zeros((x.shape[0], 0), dtype=complex)
    w, cos, _ = np.linalg.svd(x.conj().T @ y)
    d = int(np.sum(cos >= 1.0 - 1e-8))
    return x @ w[:, :d]


# ---------------------------------------------------------------------------
# Continuity certification for sequences.


@dataclass
class ContinuityRow:
    n: int
    index: int
    pinv_norm: float
    pinv_gap: float
    nullproj_gap_gauge: float
    nullproj_gap_op: float
    intersection_dim: int


@dataclass
class ContinuityReport:
    """Six equivalent continuity conditions evaluated on a tail of a sequence."""

    rows: list = field(default_factory=list)
    n0: int = 0
    verdicts: dict = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        vals = list(self.verdicts.values())
        return all(v == vals[0] for v in vals)

    @property
    def all_true(self) -> bool:
        return all(self.verdicts.values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(
            "n,index,pinv_norm,pinv_gap,nullproj_gap_gauge,nullproj_gap_op,intersection_dim\n"
        )
        for r in self.rows:
            buf.write(
                f"{r.n},{r.index},{r.pinv_norm:.17g},{r.pinv_gap:.17g},"
                f"{r.nullproj_gap_gauge:.17g},{r.nullproj_gap_op:.17g},"
                f"{r.intersection_dim}\n"
            )
        return buf.getvalue()


# Boundedness proxy: the tail sup of ||B_n^+|| may exceed ||B^+|| by at
# most this factor before condition (ii) is declared failed.
BOUNDEDNESS_FACTOR = 10.0
# Projector gaps this close to 1 count as "not < 1".
_GAP_MARGIN = 1e-6


def continuity_report(b, seq, n0: int, g: GaugeNorm,
                      tol: ToleranceConfig = DEFAULT_TOL) -> ContinuityReport:
    """Evaluate the six equivalent continuity conditions on seq -> B.

    Diagnostic only: never raises on failing conditions.  The report is
    consistent when all six verdicts coincide, which is the content of
    the equivalence theorem the certifier demonstrates.
    """
    b = as_matrix(b)
    seq = [as_matrix(s) for s in seq]
    if not seq:
        raise PreconditionError("sequence must be nonempty")
    if not 0 <= n0 < len(seq):
        raise PreconditionError("n0 must index into the sequence")
    rb = moore_penrose(b, tol)
    norm_b_pinv = float(np.linalg.norm(rb.pinv, 2))
    norm_b = float(np.linalg.norm(b, 2))
    nb = null_basis(b, tol)
    rows = []
    for n, bn in enumerate(seq):
        rn = moore_penrose(bn, tol)
        idx = stratum_index(bn, b, tol).k
        pinv_norm = float(np.linalg.norm(rn.pinv, 2))
        pinv_gap = gauge_norm(rn.pinv - rb.pinv, g)
        null_gap_gauge = gauge_norm(rn.null_proj - rb.null_proj, g)
        null_gap_op = float(np.linalg.norm(rn.null_proj - rb.null_proj, 2))
        perp = range_basis(bn.conj().T, tol)   # basis of N(B_n)^perp
        inter = codim.intersection_dim(perp, nb)
        rows.append(ContinuityRow(n, idx, pinv_norm, pinv_gap,
                                  null_gap_gauge, null_gap_op, inter))
    tail = rows[n0:]
    last = tail[-1]
    # (iii): under a bounded tail the pseudoinverse gap is dominated by a
    # constant multiple of the input gap; divergent families violate this
    # by orders of magnitude.
    last_input_gap = gauge_norm(seq[-1] - b, g)
    iii_threshold = (
        (float(np.linalg.norm(seq[-1], 2)) * norm_b
         + (BOUNDEDNESS_FACTOR * norm_b_pinv) ** 2 + norm_b_pinv**2)
        * last_input_gap
        + tol.residual_abs
    )
    verdicts = {
        "index_zero": all(r.index == 0 for r in tail),
        "pinv_bounded": max(r.pinv_norm for r in tail)
        <= BOUNDEDNESS_FACTOR * max(norm_b_pinv, tol.residual_abs),
        "pinv_gap_vanishes": last.pinv_gap <= iii_threshold,
        "nullproj_gauge_below_one": all(
            r.nullproj_gap_gauge < 1.0 - _GAP_MARGIN for r in tail
        ),
        "nullproj_op_below_one": all(
            r.nullproj_gap_op < 1.0 - _GAP_MARGIN for r in tail
        ),
        "trivial_intersection": all(r.intersection_dim == 0 for r in tail),
    }
    return ContinuityReport(rows=rows, n0=n0, verdicts=verdicts)


# ---------------------------------------------------------------------------
# The pseudoinverse as a map between strata, and its tangent map.


def mp_map(b, a, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """B -> B^+, asserting that the stratum index is preserved relative to A^+."""
    a = as_matrix(a)
    b = as_matrix(b)
    k = stratum_index(b, a, tol).k
    b_pinv = pinv_matrix(b, tol)
    a_pinv = pinv_matrix(a, tol)
    k_image = stratum_index(b_pinv, a_pinv, tol).k
    if k_image != k:
        raise ConsistencyError(
            f"pseudoinverse map moved stratum index from {k} to {k_image}"
        )
    return b_pinv


def tangent_membership(b, z, tol: ToleranceConfig = DEFAULT_TOL,
                       return_witness: bool = False):
    """Test whether Z is tangent at B, i.e. Z = X B - B Y for some X, Y.

    Equivalent to the vanishing of the corner block
    (I - P_R(B)) Z P_N(B); when a witness is requested the explicit
    (X, Y) = ((I - P_R(B)) Z B^+, -B^+ Z) pair is returned.
    """
    b = as_matrix(b)
    z = as_matrix(z)
    if b.shape != z.shape:
        raise PreconditionError("B and Z must have the same shape")
    rb = moore_penrose(b, tol)
    ident_m = np.eye(b.shape[0], dtype=complex)
    corner = (ident_m - rb.range_proj) @ z @ rb.null_proj
    scale = float(np.linalg.norm(z))
    ok = float(np.linalg.norm(corner)) <= max(tol.residual_abs, 1e-8 * scale)
    if not return_witness:
        return ok
    x = (ident_m - rb.range_proj) @ z @ rb.pinv
    y = -rb.pinv @ z
    return ok, (x, y)


def mp_tangent(b, v, tol: ToleranceConfig = DEFAULT_TOL,
               check_tangent: bool = True) -> np.ndarray:
    """Derivative of the pseudoinverse map at B in the tangent direction V.

    -B^+ V B^+ + (B*B)^+ V* (I - B B^+) + (I - B^+ B) V* (B B*)^+.
    Callers generating V = X B - B Y may skip the membership check.
    """
    b = as_matrix(b)
    v = as_matrix(v)
    if check_tangent and not tangent_membership(b, v, tol):
        raise PreconditionError("V is not tangent at B (corner block nonzero)")
    rb = moore_penrose(b, tol)
    ident_m = np.eye(b.shape[0], dtype=complex)
    ident_n = np.eye(b.shape[1], dtype=complex)
    btb_p = pinv_matrix(b.conj().T @ b, tol)
    bbt_p = pinv_matrix(b @ b.conj().T, tol)
    return (
        -rb.pinv @ v @ rb.pinv
        + btb_p @ v.conj().T @ (ident_m - b @ rb.pinv)
        + (ident_n - rb.pinv @ b) @ v.conj().T @ bbt_p
    )
