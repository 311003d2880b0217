"""Updated eigenvectors from updated eigenvalues.

For a new eigenvalue ``x`` the eigenvector is ``Q (Lambda - x I)^{-1} L a`` where
``L = Q^T K`` and ``a`` spans the null space of the k x k matrix
``I + J L^T (Lambda - x I)^{-1} L``.
"""

from __future__ import annotations

import time

import numpy as np

from symupdate.core import (
    LowRankUpdate,
    RepeatedEigenvalueError,
    SpectralDecomposition,
    UpdateError,
    UpdateResult,
    apply_update,
    ortho_error,
    reconstruct,
    residual_fro,
)
from symupdate.rootfind import EigenvalueSolution, Root, solve_eigenvalues
from symupdate.secular import DeflatedProblem, _row_live, deflate_problem, transform_update

NULL_RTOL = 1e-6


def null_problem(lam, l, signs, x: float) -> np.ndarray:
    """``I + J L^T (Lambda - x I)^{-1} L``."""
    lam = np.asarray(lam, dtype=float)
    k = l.shape[1]
    g = l.T @ (l / (lam - x)[:, None])
    return np.eye(k) + np.asarray(signs)[:, None] * g


def null_direction(m):
    """Unit vector minimising ``||m x||`` and the achieved residual."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if not np.all(np.isfinite(m)):
        raise UpdateError("eigvec", "null problem has non-finite entries")
    _, s, vt = np.linalg.svd(m)
    return vt[-1], float(s[-1])


def _fix_sign(v: np.ndarray) -> np.ndarray:
    i = np.argmax(np.abs(v), axis=0)
    s = np.sign(v[i, np.arange(v.shape[1])] if v.ndim == 2 else v[i])
    s = np.where(s == 0, 1.0, s)
    return v * s


def update_eigenvector(d: SpectralDecomposition, upd: LowRankUpdate, lambda_new: float) -> np.ndarray:
    """Unit eigenvector of ``A + K J K^T`` for the updated eigenvalue ``lambda_new``."""
    tu = transform_update(d, upd)
    prob = deflate_problem(d.lam, tu.u, tu.signs, d.q)
    live = _live_rows(prob)
    gap = np.abs(prob.lam - lambda_new)
    near = int(np.argmin(gap))
    if gap[near] <= 1e-12 * prob.scale:
        u = _pole_vector(prob, live, near)
        return _fix_sign(prob.basis @ u)
    lam, l = prob.lam[live], prob.u[live]
    m = null_problem(lam, l, prob.signs, lambda_new)
    a0, res = null_direction(m)
    if res > NULL_RTOL * max(1.0, np.linalg.norm(m, 2)):
        raise UpdateError("eigvec", f"{lambda_new!r} is not an updated eigenvalue "
                                    f"(smallest singular value {res:.3g})")
    u = np.zeros(prob.lam.size)
    u[live] = (l @ a0) / (lam - lambda_new)
    u /= np.linalg.norm(u)
    return _fix_sign(prob.basis @ u)


def _live_rows(prob: DeflatedProblem) -> np.ndarray:
    return np.flatnonzero(_row_live(prob.u, np.linalg.norm(prob.u), prob.scale))


def _pole_vector(prob: DeflatedProblem, live: np.ndarray, i: int) -> np.ndarray:
    """Eigenvector (in the rotated basis) for an eigenvalue sitting on pole ``i``.

    A pole without update weight keeps its basis vector. Otherwise the
    vector comes from the null space of the bordered system
    ``[[J + U^T D_i U, -w], [w^T, 0]]`` with ``w`` the pole's row of ``U``.
    """
    n = prob.lam.size
    u = np.zeros(n)
    if i not in set(live.tolist()):
        u[i] = 1.0
        return u
    others = live[live != i]
    lam_o, u_o = prob.lam[others], prob.u[others]
    w = prob.u[i]
    k = w.size
    dinv = 1.0 / (lam_o - prob.lam[i])
    g = u_o.T @ (u_o * dinv[:, None])
    bord = np.zeros((k + 1, k + 1))
    bord[:k, :k] = np.diag(prob.signs) + g
    bord[:k, k] = -w
    bord[k, :k] = w
    z, _ = null_direction(bord)
    y, t = z[:k], z[k]
    u[others] = -(u_o @ y) * dinv
    u[i] = t
    return u / np.linalg.norm(u)


def _active_vectors(prob: DeflatedProblem, live: np.ndarray, roots: list) -> np.ndarray:
    """Eigenvectors (rotated basis coordinates) for all active roots, batched."""
    n = prob.lam.size
    k = prob.u.shape[1]
    if not roots:
        return np.zeros((n, 0))
    l = prob.u[live]
    origins = np.array([r.origin for r in roots])
    taus = np.array([r.tau for r in roots])
    # lam_j - root, formed as (lam_j - origin) - tau to keep the offset digits
    diff = (prob.lam[live][None, :] - origins[:, None]) - taus[:, None]
    bad = diff == 0
    if np.any(bad):
        diff = np.where(bad, np.finfo(float).tiny, diff)
    dinv = 1.0 / diff
    outer = (l[:, :, None] * l[:, None, :]).reshape(l.shape[0], k * k)
    m = np.eye(k)[None] + prob.signs[None, :, None] * (dinv @ outer).reshape(len(roots), k, k)
    _, s, vt = np.linalg.svd(m)
    a0 = vt[:, -1, :]
    mnorm = s[:, 0]
    worst = np.max(s[:, -1] / np.maximum(mnorm, 1.0))
    if worst > NULL_RTOL:
        raise UpdateError("eigvec", f"null problem not singular at a computed root "
                                    f"(relative singular value {worst:.3g})")
    w = np.zeros((n, len(roots)))
    w[live] = (l @ a0.T) * dinv.T
    w /= np.linalg.norm(w, axis=0)
    return w


def rotated_eigenvectors(sol: EigenvalueSolution):
    """Ascending eigenvalues and eigenvectors in the coordinates of ``sol.problem.basis``.

    The updated eigenvector matrix is ``basis @ coords``; callers that only
    need products with it can skip forming it. ``moved`` flags the columns
    that belong to roots of the secular function rather than to fixed poles.
    """
    prob = sol.problem
    n = prob.lam.size
    live = _live_rows(prob)
    w = _active_vectors(prob, live, sol.roots)
    vals = [r.value for r in sol.roots]
    fixed_cols = np.zeros((n, prob.fixed.size))
    for j, i in enumerate(prob.fixed):
        fixed_cols[:, j] = _pole_vector(prob, live, int(i))
        vals.append(prob.lam[i])
    coords = np.hstack([w, fixed_cols])
    vals = np.asarray(vals)
    order = np.argsort(vals, kind="stable")
    moved = order < w.shape[1]
    return vals[order], coords[:, order], moved


def assemble(d: SpectralDecomposition, sol: EigenvalueSolution, reorthogonalize: bool = False):
    """Eigenvalues and eigenvector matrix from an eigenvalue solution."""
    vals, coords, moved = rotated_eigenvectors(sol)
    q_new = sol.problem.basis @ coords
    # eigenvectors pinned to an untouched pole keep the sign they came in with
    q_new[:, moved] = _fix_sign(q_new[:, moved])
    if reorthogonalize:
        q_new, r = np.linalg.qr(q_new)
        q_new *= np.sign(np.diag(r))
    return vals, q_new


def _decompose(d: SpectralDecomposition, upd: LowRankUpdate, tol, method, parallel,
               reorthogonalize) -> SpectralDecomposition:
    try:
        sol = solve_eigenvalues(d, upd, tol, method, parallel)
    except RepeatedEigenvalueError:
        if upd.k == 1:
            raise
        # take the first column as an exact rank-1 update (one column always
        # compresses a cluster to a single row) and carry on with the rest
        first = LowRankUpdate(upd.kmat[:, :1], upd.signs[:1])
        rest = LowRankUpdate(upd.kmat[:, 1:], upd.signs[1:])
        mid = _decompose(d, first, tol, "auto", parallel, False)
        return _decompose(mid, rest, tol, "auto", parallel, reorthogonalize)
    vals, q_new = assemble(d, sol, reorthogonalize)
    return SpectralDecomposition(q_new, vals)


def update_decomposition(d: SpectralDecomposition, upd: LowRankUpdate, tol: float | None = None,
                         method: str = "auto", parallel: bool = False,
                         reorthogonalize: bool = False) -> UpdateResult:
    """Updated decomposition of ``A + K J K^T`` together with its error metrics."""
    t0 = time.perf_counter()
    out = _decompose(d, upd, tol, method, parallel, reorthogonalize)
    wall = time.perf_counter() - t0
    target = apply_update(reconstruct(d), upd)
    return UpdateResult(out, residual_fro(out, target), ortho_error(out.q), wall)
