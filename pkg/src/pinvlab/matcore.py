"""Dense complex linear-algebra kernel.

Factorizations, numerical rank, subspace operations and symmetric gauge
norms (operator, Schatten-p, Ky Fan-k).  Everything downstream builds on
the routines here.  Matrices are plain complex ``numpy`` arrays; helpers
validate shape and finiteness at the boundaries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, PreconditionError


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical tolerances used across the package.

    rank_rel: relative singular-value cutoff for numerical rank.
    residual_abs: absolute residual floor for consistency checks.
    neighborhood_shrink: safety factor in (0,1) for local constructions.
    """

    rank_rel: float = 1e-10
    residual_abs: float = 1e-10
    neighborhood_shrink: float = 0.5

    def __post_init__(self):
        if self.rank_rel <= 0 or self.residual_abs <= 0:
            raise PreconditionError("tolerances must be strictly positive")
        if not 0 < self.neighborhood_shrink < 1:
            raise PreconditionError("neighborhood_shrink must lie in (0,1)")


DEFAULT_TOL = ToleranceConfig()


def as_matrix(a) -> np.ndarray:
    """Validate and return ``a`` as a 2-d complex array with finite entries."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise PreconditionError(f"expected a 2-d array, got shape {m.shape}")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise PreconditionError(f"matrix dimensions must be positive, got {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise PreconditionError("matrix entries must be finite")
    return m


# ---------------------------------------------------------------------------
# JSON interchange: {"rows": m, "cols": n, "data": [[re, im], ...]} row-major.


def matrix_to_json(a) -> dict:
    m = as_matrix(a)
    flat = m.reshape(-1)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def matrix_from_json(obj) -> np.ndarray:
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise PreconditionError(f"malformed matrix JSON: {exc}") from exc
    if rows < 1 or cols < 1:
        raise PreconditionError("matrix dimensions must be positive")
    if len(data) != rows * cols:
        raise PreconditionError(
            f"data length {len(data)} does not match {rows}x{cols}"
        )
    try:
        flat = np.array([complex(re, im) for re, im in data])
    except (TypeError, ValueError) as exc:
        raise PreconditionError(f"malformed matrix entry: {exc}") from exc
    return as_matrix(flat.reshape(rows, cols))


def save_matrix(a, path):
    with open(path, "w") as fh:
        json.dump(matrix_to_json(a), fh)


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PreconditionError(f"invalid JSON in {path}: {exc}") from exc
    return matrix_from_json(obj)


# ---------------------------------------------------------------------------
# Symmetric gauge norms.


@dataclass(frozen=True)
class GaugeNorm:
    """A symmetric gauge function evaluated on singular values.

    kind is one of "op", "schatten", "kyfan".  Schatten carries an
    exponent p >= 1, Ky Fan a positive integer k.
    """

    kind: str
    p: float = 0.0
    k: int = 0

    @staticmethod
    def operator() -> "GaugeNorm":
        return GaugeNorm("op")

    @staticmethod
    def schatten(p: float) -> "GaugeNorm":
        if p < 1:
            raise PreconditionError("Schatten exponent must satisfy p >= 1")
        return GaugeNorm("schatten", p=float(p))

    @staticmethod
    def kyfan(k: int) -> "GaugeNorm":
        if k < 1:
            raise PreconditionError("Ky Fan index must be a positive integer")
        return GaugeNorm("kyfan", k=int(k))

    @staticmethod
    def parse(text: str) -> "GaugeNorm":
        """Parse "op", "s1", "s2", "sp:<p>" or "kyfan:<k>"."""
        if text == "op":
            return GaugeNorm.operator()
        if text == "s1":
            return GaugeNorm.schatten(1)
        if text == "s2":
            return GaugeNorm.schatten(2)
        if text.startswith("sp:"):
            return GaugeNorm.schatten(float(text[3:]))
        if text.startswith("kyfan:"):
            return GaugeNorm.kyfan(int(text[6:]))
        raise PreconditionError(f"unknown gauge spec {text!r}")

    def of_singular_values(self, s) -> float:
        s = np.sort(np.abs(np.asarray(s, dtype=float)))[::-1]
        if s.size == 0:
            return 0.0
        if self.kind == "op":
            return float(s[0])
        if self.kind == "schatten":
            if np.isinf(self.p):
                return float(s[0])
            return float(np.sum(s**self.p) ** (1.0 / self.p))
        if self.kind == "kyfan":
            return float(np.sum(s[: self.k]))
        raise PreconditionError(f"unknown gauge kind {self.kind!r}")

    def label(self) -> str:
        if self.kind == "op":
            return "op"
        if self.kind == "schatten":
            return f"s{self.p:g}"
        return f"kyfan:{self.k}"


OP_NORM = GaugeNorm.operator()
TRACE_NORM = GaugeNorm.schatten(1)
FROBENIUS_NORM = GaugeNorm.schatten(2)


def gauge_norm(a, g: GaugeNorm = OP_NORM) -> float:
    """Apply the symmetric gauge ``g`` to the singular values of ``a``."""
    m = as_matrix(a)
    s = np.linalg.svd(m, compute_uv=False)
    return g.of_singular_values(s)


# ---------------------------------------------------------------------------
# Factorizations.


@dataclass(frozen=True)
class SvdResult:
    U: np.ndarray        # rows x rows, unitary
    singular_values: np.ndarray  # length min(rows, cols), nonincreasing
    Vt: np.ndarray       # cols x cols, rows of V-conjugate-transpose
    rank: int
    rank_tolerance: float

    def reconstruct(self) -> np.ndarray:
        m, n = self.U.shape[0], self.Vt.shape[0]
        sigma = np.zeros((m, n))
        k = len(self.singular_values)
        sigma[:k, :k] = np.diag(self.singular_values)
        return self.U @ sigma @ self.Vt


def svd(a, tol: ToleranceConfig = DEFAULT_TOL) -> SvdResult:
    """Full SVD with a declared numerical-rank cutoff.

    rank_tolerance = tol.rank_rel * max(m, n) * sigma_1; the zero matrix
    gets tolerance 0 and rank 0.  LAPACK convergence failures are
    re-raised as ConvergenceError.
    """
    m = as_matrix(a)
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"SVD did not converge: {exc}") from exc
    sigma1 = float(s[0]) if s.size else 0.0
    cutoff = tol.rank_rel * max(m.shape) * sigma1
    rank = int(np.sum(s > cutoff))
    return SvdResult(u, s, vt, rank, cutoff)


def eigh(h, tol: ToleranceConfig = DEFAULT_TOL):
    """Spectral decomposition of a Hermitian matrix.

    The input is symmetrized internally; inputs that are not Hermitian to
    a 1e-10 relative tolerance are rejected.  Returns (Q, eigenvalues)
    with eigenvalues ascending.
    """
    m = as_matrix(h)
    if m.shape[0] != m.shape[1]:
        raise PreconditionError("eigh requires a square matrix")
    scale = np.linalg.norm(m)
    skew = np.linalg.norm(m - m.conj().T)
    if skew > 1e-10 * max(scale, 1.0):
        raise PreconditionError(
            f"matrix is not Hermitian: ||H - H*||_F = {skew:.3e}"
        )
    sym = 0.5 * (m + m.conj().T)
    try:
        w, q = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigh did not converge: {exc}") from exc
    return q, w


# ---------------------------------------------------------------------------
# Subspace bases.


def range_basis(a, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the column space, as columns."""
    res = svd(a, tol)
    return res.U[:, : res.rank]


def null_basis(a, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the nullspace, as columns."""
    res = svd(a, tol)
    return res.Vt[res.rank :, :].conj().T


def orthonormal_complement_basis(cols, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of span(cols).

    ``cols`` may have zero columns, in which case the identity basis of
    the ambient space is returned.
    """
    c = np.asarray(cols, dtype=complex)
    if c.ndim != 2:
        raise PreconditionError("expected a 2-d array of columns")
    n = c.shape[0]
    if c.shape[1] == 0:
        return np.eye(n, dtype=complex)
    res = svd(c, tol)
    return res.U[:, res.rank :]


def projector_onto(cols) -> np.ndarray:
    """Orthogonal projector onto span(cols) (columns assumed orthonormal)."""
    c = np.asarray(cols, dtype=complex)
    return c @ c.conj().T
