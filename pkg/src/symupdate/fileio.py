"""Matrix Market and CSV input/output.

Matrices travel as Matrix Market array files; eigenvalues, eigenvector
matrices and update factors as headerless comma-separated text. A factor
file may start with a comment line ``# signs: +1,-1,...``.
"""

from __future__ import annotations

import io
import re

import numpy as np
import scipy.io
import scipy.sparse

from symupdate.core import LowRankUpdate, SpectralDecomposition, SymmetricDense

_SIGNS = re.compile(r"^\s*#\s*signs\s*:\s*(.*)$", re.IGNORECASE)


def read_matrix_market(path) -> SymmetricDense:
    m = scipy.io.mmread(path)
    a = m.toarray() if scipy.sparse.issparse(m) else np.asarray(m)
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{path}: expected a square matrix, got shape {a.shape}")
    if not np.allclose(a, a.T, rtol=1e-12, atol=0.0):
        raise ValueError(f"{path}: matrix is not symmetric")
    return SymmetricDense(a)


def write_matrix_market(path, a: SymmetricDense) -> None:
    scipy.io.mmwrite(path, np.asarray(a.entries), symmetry="symmetric", precision=17)


def parse_signs(text: str) -> np.ndarray:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if not parts:
        raise ValueError("empty sign list")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ValueError(f"bad sign list {text!r}") from exc


def read_matrix_csv(path) -> np.ndarray:
    a = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{path}: non-finite entries")
    return a


def read_vector_csv(path) -> np.ndarray:
    """A vector stored one value per line (or as a single row)."""
    return read_matrix_csv(path).reshape(-1)


def read_update_csv(path, signs=None) -> LowRankUpdate:
    """n x k factor; explicit ``signs`` override a ``# signs:`` comment line."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    found = None
    for line in text.splitlines():
        m = _SIGNS.match(line)
        if m:
            found = parse_signs(m.group(1))
            break
    kmat = np.loadtxt(io.StringIO(text), delimiter=",", comments="#", ndmin=2)
    if signs is None:
        signs = found
    return LowRankUpdate(kmat, signs)


def read_eigen_csv(q_path, lam_path) -> SpectralDecomposition:
    return SpectralDecomposition(read_matrix_csv(q_path), read_vector_csv(lam_path))


def write_matrix_csv(path, a) -> None:
    np.savetxt(path, np.atleast_2d(a), delimiter=",", fmt="%.17g")


def write_vector_csv(path, v) -> None:
    np.savetxt(path, np.asarray(v).reshape(-1, 1), delimiter=",", fmt="%.17g")


def write_update_csv(path, upd: LowRankUpdate) -> None:
    header = "signs: " + ",".join(f"{s:+.0f}" for s in upd.signs)
    np.savetxt(path, upd.kmat, delimiter=",", fmt="%.17g", header=header, comments="# ")
