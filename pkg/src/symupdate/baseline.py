"""Reference solvers: cyclic Jacobi and first-order perturbation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from symupdate.core import (
    LowRankUpdate,
    SpectralDecomposition,
    SymmetricDense,
    UpdateError,
    spectral_scale,
)


@dataclass(frozen=True)
class JacobiConfig:
    tol: float = 1e-12
    max_sweeps: int = 60

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")


def _off(a: np.ndarray) -> float:
    off = a.copy()
    np.fill_diagonal(off, 0.0)
    return float(np.linalg.norm(off))


def jacobi_evd(a: SymmetricDense, cfg: JacobiConfig = JacobiConfig()) -> SpectralDecomposition:
    """Eigendecomposition by cyclic-by-row Jacobi rotations.

    Sweeps run over the upper triangle row by row; each rotation zeroes one
    off-diagonal pair. Stops once the off-diagonal Frobenius mass falls to
    ``cfg.tol * ||a||_F``.
    """
    w = np.array(a.entries, dtype=float)
    n = w.shape[0]
    v = np.eye(n)
    target = cfg.tol * float(np.linalg.norm(w))
    sweeps = 0
    while _off(w) > target:
        if sweeps == cfg.max_sweeps:
            raise UpdateError("jacobi", f"no convergence after {sweeps} sweeps "
                                        f"(off-diagonal mass {_off(w):.3e}, target {target:.3e})")
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = w[p, q]
                if apq == 0.0:
                    continue
                app, aqq = w[p, p], w[q, q]
                # skip entries that no longer register against the diagonal
                if abs(apq) < 1e-18 * (abs(app) + abs(aqq)):
                    w[p, q] = w[q, p] = 0.0
                    continue
                theta = (aqq - app) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                wp, wq = w[:, p].copy(), w[:, q].copy()
                w[:, p] = c * wp - s * wq
                w[:, q] = s * wp + c * wq
                wp, wq = w[p, :].copy(), w[q, :].copy()
                w[p, :] = c * wp - s * wq
                w[q, :] = s * wp + c * wq
                w[p, p] = app - t * apq
                w[q, q] = aqq + t * apq
                w[p, q] = w[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        sweeps += 1
    lam = np.diag(w).copy()
    order = np.argsort(lam, kind="stable")
    return SpectralDecomposition(v[:, order], lam[order])


def perturbation_update(d: SpectralDecomposition, upd: LowRankUpdate) -> SpectralDecomposition:
    """First-order estimate of the eigenpairs of ``A + K J K^T``.

    With ``E = (Q^T K) J (Q^T K)^T``: ``lam_j + E_jj`` and
    ``v_j + sum_{i != j} E_ij / (lam_j - lam_i) v_i``, normalised.
    No higher-order terms and no re-orthogonalisation.
    """
    if d.n != upd.n:
        raise ValueError(f"dimension mismatch: decomposition is {d.n}, update is {upd.n}")
    lam = d.lam
    gaps = np.diff(lam)
    if gaps.size and gaps.min() < 1e-12 * spectral_scale(lam):
        raise UpdateError("perturbation", f"eigenvalue gap {gaps.min():.3e} too small for first-order theory")
    u = d.q.T @ upd.kmat
    e = (u * upd.signs) @ u.T
    diff = lam[None, :] - lam[:, None]  # diff[i, j] = lam_j - lam_i
    np.fill_diagonal(diff, 1.0)
    coef = e / diff
    np.fill_diagonal(coef, 1.0)
    v = d.q @ coef
    v /= np.linalg.norm(v, axis=0)
    new = lam + np.diag(e)
    order = np.argsort(new, kind="stable")
    return SpectralDecomposition(v[:, order], new[order])
