"""Domain types, instance generation and reconstruction metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_GAP = 1e-6


class UpdateError(RuntimeError):
    """Numerical failure inside the update pipeline.

    ``stage`` names the pipeline step that failed so callers (and the CLI)
    can report where things went wrong.
    """

    def __init__(self, stage: str, message: str, partial=None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.partial = partial


class RepeatedEigenvalueError(UpdateError):
    """A repeated eigenvalue meets two or more independent update directions.

    The secular function then has a higher-order pole; callers split the
    update into narrower pieces (see ``eigvec.update_decomposition``).
    """

    def __init__(self, value: float, rows: int):
        super().__init__("secular", f"eigenvalue {value!r} is repeated and receives {rows} "
                                    "independent update rows")
        self.value = value


@dataclass(frozen=True)
class SymmetricDense:
    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def fro(self) -> float:
        return float(np.linalg.norm(self.entries))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvector matrix ``q`` (columns) and ascending eigenvalues ``lam``.

    Orthonormality is not enforced at construction since updated
    decompositions carry a small, measured orthonormality error; use
    :meth:`ortho_err` to inspect it.
    """

    q: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        lam = np.array(self.lam, dtype=float).reshape(-1)
        if q.ndim != 2 or q.shape != (lam.size, lam.size):
            raise ValueError(f"q has shape {q.shape}, expected ({lam.size}, {lam.size})")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(lam))):
            raise ValueError("decomposition has non-finite entries")
        if np.any(np.diff(lam) < 0):
            raise ValueError("eigenvalues must be sorted ascending")
        q.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "lam", lam)

    @property
    def n(self) -> int:
        return self.lam.size

    def ortho_err(self) -> float:
        return ortho_error(self.q)

    @property
    def scale(self) -> float:
        return spectral_scale(self.lam)


@dataclass(frozen=True)
class LowRankUpdate:
    """The perturbation ``sum_r signs[r] * K[:, r] K[:, r]^T``."""

    kmat: np.ndarray
    signs: np.ndarray = field(default=None)

    def __post_init__(self):
        kmat = np.array(self.kmat, dtype=float)
        if kmat.ndim == 1:
            kmat = kmat[:, None]
        if kmat.ndim != 2 or kmat.shape[1] < 1:
            raise ValueError(f"K must be an n x k matrix, got shape {kmat.shape}")
        n, k = kmat.shape
        if k > n:
            raise ValueError(f"rank {k} exceeds dimension {n}")
        if not np.all(np.isfinite(kmat)):
            raise ValueError("K has non-finite entries")
        if self.signs is None:
            signs = np.ones(k)
        else:
            signs = np.array(self.signs, dtype=float).reshape(-1)
        if signs.size != k or not np.all(np.abs(signs) == 1.0):
            raise ValueError("signs must hold one value in {+1, -1} per column of K")
        kmat.setflags(write=False)
        signs.setflags(write=False)
        object.__setattr__(self, "kmat", kmat)
        object.__setattr__(self, "signs", signs)

    @property
    def n(self) -> int:
        return self.kmat.shape[0]

    @property
    def k(self) -> int:
        return self.kmat.shape[1]

    def dense(self) -> np.ndarray:
        return (self.kmat * self.signs) @ self.kmat.T


@dataclass(frozen=True)
class UpdateResult:
    decomposition: SpectralDecomposition
    residual_fro: float
    ortho_err: float
    wall_time: float


def spectral_scale(lam) -> float:
    lam = np.asarray(lam)
    return max(1.0, float(np.max(np.abs(lam)))) if lam.size else 1.0


def ortho_error(q: np.ndarray) -> float:
    """max-norm of ``q^T q - I``."""
    g = q.T @ q
    g[np.diag_indices_from(g)] -= 1.0
    return float(np.max(np.abs(g))) if g.size else 0.0


def reconstruct(d: SpectralDecomposition) -> SymmetricDense:
    return SymmetricDense((d.q * d.lam) @ d.q.T)


def apply_update(a: SymmetricDense, u: LowRankUpdate) -> SymmetricDense:
    if a.n != u.n:
        raise ValueError(f"dimension mismatch: matrix is {a.n}, update is {u.n}")
    return SymmetricDense(a.entries + u.dense())


def residual_fro(d: SpectralDecomposition, target: SymmetricDense) -> float:
    return float(np.linalg.norm((d.q * d.lam) @ d.q.T - target.entries))


def random_instance(n: int, k: int, target_norm: float, seed: int, signs=None):
    """Seeded (decomposition, update) pair for tests and benchmarks.

    Eigenvalues are uniform on [-1, 1] with adjacent gaps of at least
    ``MIN_GAP``; ``K`` is Gaussian rescaled to Frobenius norm ``target_norm``.
    """
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if target_norm <= 0:
        raise ValueError("target_norm must be positive")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q *= np.where(np.diag(r) < 0, -1.0, 1.0)
    lam = np.sort(rng.uniform(-1.0, 1.0, n))
    for i in range(1, n):
        if lam[i] - lam[i - 1] < MIN_GAP:
            lam[i] = lam[i - 1] + MIN_GAP
    kmat = rng.standard_normal((n, k))
    kmat *= target_norm / np.linalg.norm(kmat)
    return SpectralDecomposition(q, lam), LowRankUpdate(kmat, signs)
