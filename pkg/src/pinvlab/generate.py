"""Seeded random matrix models used by the experiment harness and tests.

Complex Ginibre entries are the base model; prescribed-rank matrices are
produced by SVD surgery, positive matrices by conjugation of positive
diagonals, and sequence families by rank-preserving or rank-jumping
perturbation schedules.  All generators take an explicit
``numpy.random.Generator`` so every experiment is reproducible from a
single seed.
"""

from __future__ import annotations

import numpy as np

from .matcore import DEFAULT_TOL, svd


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def ginibre(rng, m: int, n: int) -> np.ndarray:
    """Complex Gaussian matrix with unit-variance entries."""
    return (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2.0)


def unitary(rng, n: int) -> np.ndarray:
    """Haar-ish unitary from the QR factorization of a Ginibre sample."""
    q, r = np.linalg.qr(ginibre(rng, n, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def fixed_rank(rng, m: int, n: int, r: int, sv_range=(0.5, 2.0)) -> np.ndarray:
    """Random m x n matrix of exact rank r with singular values in sv_range."""
    if not 0 <= r <= min(m, n):
        raise ValueError(f"rank {r} infeasible for shape {(m, n)}")
    if r == 0:
        return np.zeros((m, n), dtype=complex)
    u = unitary(rng, m)[:, :r]
    v = unitary(rng, n)[:, :r]
    s = np.sort(rng.uniform(*sv_range, size=r))[::-1]
    return (u * s) @ v.conj().T


def hermitian(rng, n: int, scale: float = 1.0) -> np.ndarray:
    g = ginibre(rng, n, n)
    return scale * 0.5 * (g + g.conj().T)


def psd_fixed_rank(rng, n: int, r: int, ev_range=(0.5, 2.0)) -> np.ndarray:
    """Hermitian PSD matrix of exact rank r."""
    if r == 0:
        return np.zeros((n, n), dtype=complex)
    q = unitary(rng, n)[:, :r]
    ev = rng.uniform(*ev_range, size=r)
    return (q * ev) @ q.conj().T


def positive_definite(rng, n: int, ev_range=(0.5, 2.0)) -> np.ndarray:
    return psd_fixed_rank(rng, n, n, ev_range)


def near_identity(rng, n: int, scale: float = 0.05) -> np.ndarray:
    """Invertible matrix within ``scale`` of the identity in operator norm."""
    g = ginibre(rng, n, n)
    g *= scale / max(np.linalg.norm(g, 2), 1e-300)
    return np.eye(n, dtype=complex) + g


def rank_preserving_perturbation(rng, b, scale: float) -> np.ndarray:
    """(I + X) B (I + Y) with small X, Y: same rank, distance O(scale)."""
    m, n = b.shape
    return near_identity(rng, m, scale) @ b @ near_identity(rng, n, scale)


def rank_jump_perturbation(rng, b, eps: float,
                           tol=DEFAULT_TOL) -> np.ndarray:
    """B plus eps times a partial isometry from N(B) into R(B)^perp.

    Raises ValueError when B has neither nullspace nor corange to spare.
    """
    res = svd(b, tol)
    r = res.rank
    m, n = b.shape
    if r >= min(m, n):
        raise ValueError("no room to increase the rank of B")
    left = res.U[:, r]
    right = res.Vt[r, :].conj()
    return b + eps * np.outer(left, right.conj())


def in_stratum_family(rng, b, length: int, scale: float = 0.2) -> list:
    """Convergent sequence B_n -> B staying in the zero stratum of B."""
    return [rank_preserving_perturbation(rng, b, scale * 0.5**k)
            for k in range(length)]


def jump_family(rng, b, length: int, scale: float = 0.2) -> list:
    """Convergent sequence B_n -> B whose tail sits in a lower stratum."""
    return [rank_jump_perturbation(rng, b, scale * 0.5**k)
            for k in range(length)]


def tangent_pair(rng, m: int, n: int, scale: float = 1.0):
    """Directions (X, Y) generating the tangent vector X B - B Y at any B."""
    return ginibre(rng, m, m) * scale, ginibre(rng, n, n) * scale


def partial_isometry(rng, m: int, n: int, r: int) -> np.ndarray:
    if r == 0:
        return np.zeros((m, n), dtype=complex)
    return unitary(rng, m)[:, :r] @ unitary(rng, n)[:, :r].conj().T
