"""Multi-rank secular function: coefficients, evaluation and deflation.

The updated eigenvalues of ``diag(lam) + U J U^T`` are the roots of

    f(x) = det(I_k - J U^T (x I - diag(lam))^{-1} U) = 1 - sum_j alpha_j / (x - lam_j)

where each weight ``alpha_j`` comes from a k x k adjugate built from the
j-th row of ``U``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from symupdate.core import LowRankUpdate, RepeatedEigenvalueError, SpectralDecomposition, spectral_scale

EPS = np.finfo(float).eps
MERGE_RTOL = 1e-12
ZERO_WEIGHT_RTOL = 1e-14


@dataclass(frozen=True)
class SecularCoefficients:
    """``f(x) = leading - sum_j weights[j] / (x - poles[j])``.

    ``index`` optionally maps each pole back to its position in the
    eigenvalue list it was built from.
    """

    poles: np.ndarray
    weights: np.ndarray
    leading: float = 1.0
    index: np.ndarray | None = None

    def __post_init__(self):
        poles = np.asarray(self.poles, dtype=float).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if poles.shape != weights.shape:
            raise ValueError("poles and weights differ in length")
        if np.any(np.diff(poles) <= 0):
            raise ValueError("poles must be strictly increasing")
        if not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "leading", float(self.leading))
        if self.index is not None:
            object.__setattr__(self, "index", np.asarray(self.index, dtype=int))

    @property
    def size(self) -> int:
        return self.poles.size

    def __call__(self, x):
        return eval_secular(self, x)


@dataclass(frozen=True)
class TransformedUpdate:
    u: np.ndarray
    signs: np.ndarray

    @property
    def k(self) -> int:
        return self.u.shape[1]


def transform_update(d: SpectralDecomposition, upd: LowRankUpdate) -> TransformedUpdate:
    if d.n != upd.n:
        raise ValueError(f"dimension mismatch: decomposition is {d.n}, update is {upd.n}")
    return TransformedUpdate(d.q.T @ upd.kmat, upd.signs.copy())


def adjugate(m: np.ndarray) -> np.ndarray:
    """Adjugates of a stack of k x k matrices, shape (..., k, k).

    Explicit cofactors for k <= 3; larger k goes through the SVD, which
    stays well defined when ``m`` is singular.
    """
    k = m.shape[-1]
    if k == 1:
        return np.ones_like(m)
    if k == 2:
        out = np.empty_like(m)
        out[..., 0, 0] = m[..., 1, 1]
        out[..., 1, 1] = m[..., 0, 0]
        out[..., 0, 1] = -m[..., 0, 1]
        out[..., 1, 0] = -m[..., 1, 0]
        return out
    if k == 3:
        out = np.empty_like(m)
        for i in range(3):
            for j in range(3):
                r = [x for x in range(3) if x != j]
                c = [x for x in range(3) if x != i]
                minor = (m[..., r[0], c[0]] * m[..., r[1], c[1]]
                         - m[..., r[0], c[1]] * m[..., r[1], c[0]])
                out[..., i, j] = (-1) ** (i + j) * minor
        return out
    u, s, vt = np.linalg.svd(m)
    # adj(U S V^T) = det(U) det(V) V adj(S) U^T, adj(S)_ii = prod_{j != i} s_j
    prods = np.empty_like(s)
    for i in range(k):
        prods[..., i] = np.prod(np.delete(s, i, axis=-1), axis=-1)
    dets = np.linalg.det(u) * np.linalg.det(vt)
    return dets[..., None, None] * np.einsum("...ji,...j,...kj->...ik", vt, prods, u)


def _pole_gram(lam: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Stack of ``U^T D_i U`` with ``D_i = diag(1 / (lam_s - lam_i))``, zero at s = i."""
    n, k = u.shape
    diff = lam[None, :] - lam[:, None]
    np.fill_diagonal(diff, 1.0)
    inv = 1.0 / diff
    np.fill_diagonal(inv, 0.0)
    outer = (u[:, :, None] * u[:, None, :]).reshape(n, k * k)
    return (inv @ outer).reshape(n, k, k)


def secular_weights(lam, tu: TransformedUpdate) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    u = np.asarray(tu.u, dtype=float)
    signs = np.asarray(tu.signs, dtype=float)
    n, k = u.shape
    if k == 0:
        raise ValueError("rank must be at least 1")
    if lam.size != n:
        raise ValueError("pole count does not match rows of U")
    if np.any(np.diff(lam) <= 0):
        raise ValueError("poles must be strictly increasing; deflate repeated eigenvalues first")
    if k == 1:
        return signs[0] * u[:, 0] ** 2
    m = np.eye(k)[None] + signs[None, :, None] * _pole_gram(lam, u)
    return np.einsum("ia,iab,ib->i", u, adjugate(m), u * signs)


def secular_coefficients(lam, tu: TransformedUpdate) -> SecularCoefficients:
    """Weights of the multi-rank secular function for distinct poles ``lam``.

    Weights that vanish relative to the total weight are removed; the
    surviving poles' positions are kept in ``index``. The total is capped
    by ``||U||_F^2``: nearly coincident poles carry huge weights of
    opposite sign that cancel, and must not swamp the others.
    """
    lam = np.asarray(lam, dtype=float)
    alpha = secular_weights(lam, tu)
    total = min(float(np.sum(np.abs(alpha))), float(np.sum(np.asarray(tu.u) ** 2)))
    keep = np.abs(alpha) > ZERO_WEIGHT_RTOL * (1.0 + total)
    idx = np.flatnonzero(keep)
    return SecularCoefficients(lam[idx], alpha[idx], 1.0, idx)


def eval_secular(c: SecularCoefficients, x):
    x = np.asarray(x, dtype=float)
    diff = x[..., None] - c.poles
    if np.any(np.abs(diff) <= 1e-300):
        raise ValueError("secular function evaluated at a pole")
    return c.leading - np.sum(c.weights / diff, axis=-1)


def secular_determinant(lam, tu: TransformedUpdate, x: float) -> float:
    """Direct ``det(I - J U^T (x I - Lambda)^{-1} U)``; O(n k^2) reference value."""
    lam = np.asarray(lam, dtype=float)
    g = tu.u.T @ (tu.u / (x - lam)[:, None])
    return float(np.linalg.det(np.eye(tu.k) - tu.signs[:, None] * g))


def rank2_split(a, b):
    """Write ``a b^T + b a^T`` as ``u1 u1^T - u2 u2^T``.

    ``[[0, 1], [1, 0]] = S diag(1, -1) S^T`` with ``S = [[1, 1], [1, -1]] / sqrt(2)``,
    so ``(u1, u2) = (a b) S``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = np.sqrt(0.5)
    return s * (a + b), s * (a - b)


def rank2_update(a, b) -> LowRankUpdate:
    u1, u2 = rank2_split(a, b)
    return LowRankUpdate(np.column_stack([u1, u2]), [1.0, -1.0])


@dataclass
class DeflatedProblem:
    """An update reduced to distinct poles with nonzero weights.

    ``basis`` is the eigenvector matrix after rotations inside clusters of
    equal eigenvalues, ``u`` the matching rows of ``Q^T K`` and ``lam`` the
    (possibly split) poles. Positions in ``fixed`` keep their eigenpair;
    ``coeffs`` covers the remaining ones.
    """

    lam: np.ndarray
    u: np.ndarray
    signs: np.ndarray
    basis: np.ndarray | None
    fixed: np.ndarray
    coeffs: SecularCoefficients
    scale: float

    @property
    def active(self) -> np.ndarray:
        return self.coeffs.index


def _row_live(rows: np.ndarray, unorm: float, scale: float) -> np.ndarray:
    """Rows of ``U`` large enough to move an eigenvalue above rounding level."""
    return np.linalg.norm(rows, axis=1) * max(1.0, unorm) > 8 * EPS * scale


def _householder_compress(rows: np.ndarray):
    """Orthogonal H with ``H^T rows`` zero below its first rank(rows) rows."""
    h, r = np.linalg.qr(rows, mode="complete")
    return h, h.T @ rows


def deflate_problem(lam, u, signs, basis=None) -> DeflatedProblem:
    """Merge near-equal poles, drop vanishing rows and zero weights."""
    lam = np.array(lam, dtype=float)
    u = np.array(u, dtype=float)
    signs = np.asarray(signs, dtype=float)
    basis = None if basis is None else np.array(basis, dtype=float)
    n, k = u.shape
    scale = spectral_scale(lam)
    unorm = np.linalg.norm(u)

    # clusters of (numerically) equal eigenvalues: rotate so that the update
    # rows inside a cluster span as few rows as possible; the rest keep
    # their eigenvalue unchanged
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and lam[stop] - lam[stop - 1] <= MERGE_RTOL * max(scale, abs(lam[stop])):
            stop += 1
        if stop - start > 1:
            sl = slice(start, stop)
            lam[sl] = lam[start]
            h, rows = _householder_compress(u[sl])
            # only the first min(m, k) rows can be nonzero after the rotation
            rows[k:] = 0.0
            live = np.flatnonzero(_row_live(rows, unorm, scale))
            if live.size > 1:
                raise RepeatedEigenvalueError(float(lam[start]), int(live.size))
            # rows past the rank are rounding noise: zero them so every later
            # liveness test agrees that they sit on an unchanged eigenvalue
            rows[np.setdiff1d(np.arange(rows.shape[0]), live)] = 0.0
            u[sl] = rows
            if basis is not None:
                basis[:, sl] = basis[:, sl] @ h
        start = stop

    live = _row_live(u, unorm, scale)
    live &= np.concatenate([[True], np.diff(lam) > 0])
    cand = np.flatnonzero(live)
    tu = TransformedUpdate(u[cand], signs)
    c = secular_coefficients(lam[cand], tu)
    active = cand[c.index]
    coeffs = SecularCoefficients(c.poles, c.weights, 1.0, active)
    fixed = np.setdiff1d(np.arange(n), active)
    return DeflatedProblem(lam, u, signs, basis, fixed, coeffs, scale)
