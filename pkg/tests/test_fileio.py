import numpy as np
import pytest

from symupdate.core import LowRankUpdate, SpectralDecomposition, SymmetricDense
from symupdate.fileio import (
    parse_signs,
    read_eigen_csv,
    read_matrix_market,
    read_update_csv,
    read_vector_csv,
    write_matrix_csv,
    write_matrix_market,
    write_update_csv,
    write_vector_csv,
)


def test_matrix_market_round_trip(tmp_path):
    a = SymmetricDense([[1.0, 0.25], [0.25, 3.0]])
    path = tmp_path / "a.mtx"
    write_matrix_market(path, a)
    assert np.array_equal(read_matrix_market(path).entries, a.entries)


def test_matrix_market_rejects_nonsymmetric(tmp_path):
    path = tmp_path / "g.mtx"
    path.write_text("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n")
    with pytest.raises(ValueError, match="not symmetric"):
        read_matrix_market(path)


def test_matrix_market_sparse_coordinate(tmp_path):
    path = tmp_path / "s.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n1 1 2.0\n3 2 -1.0\n")
    a = read_matrix_market(path).entries
    assert np.array_equal(a, [[2.0, 0, 0], [0, 0, -1.0], [0, -1.0, 0]])


def test_update_signs_comment_and_override(tmp_path):
    upd = LowRankUpdate([[1.0, 0.5], [0.0, 2.0], [3.0, -1.0]], [1.0, -1.0])
    path = tmp_path / "k.csv"
    write_update_csv(path, upd)
    back = read_update_csv(path)
    assert np.array_equal(back.kmat, upd.kmat) and np.array_equal(back.signs, [1.0, -1.0])
    assert np.array_equal(read_update_csv(path, np.array([-1.0, -1.0])).signs, [-1.0, -1.0])


def test_update_without_signs_defaults_positive(tmp_path):
    path = tmp_path / "k.csv"
    path.write_text("1,0\n1,1\n")
    assert np.array_equal(read_update_csv(path).signs, [1.0, 1.0])


def test_single_column_update(tmp_path):
    path = tmp_path / "k.csv"
    path.write_text("1\n2\n3\n")
    assert read_update_csv(path).kmat.shape == (3, 1)


def test_parse_signs():
    assert np.array_equal(parse_signs("+1,-1, 1"), [1.0, -1.0, 1.0])
    for bad in ("", "a,b"):
        with pytest.raises(ValueError):
            parse_signs(bad)


def test_eigen_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    q = np.linalg.qr(rng.standard_normal((5, 5)))[0]
    lam = np.sort(rng.standard_normal(5))
    write_matrix_csv(tmp_path / "q.csv", q)
    write_vector_csv(tmp_path / "l.csv", lam)
    d = read_eigen_csv(tmp_path / "q.csv", tmp_path / "l.csv")
    assert np.array_equal(d.q, q) and np.array_equal(d.lam, lam)


def test_vector_accepts_single_row(tmp_path):
    path = tmp_path / "v.csv"
    path.write_text("0,1,2\n")
    assert np.array_equal(read_vector_csv(path), [0.0, 1.0, 2.0])


def test_non_finite_rejected(tmp_path):
    path = tmp_path / "v.csv"
    path.write_text("1\nnan\n")
    with pytest.raises(ValueError):
        read_vector_csv(path)
