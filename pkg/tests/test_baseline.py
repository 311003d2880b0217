import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symupdate.baseline import JacobiConfig, jacobi_evd, perturbation_update
from symupdate.core import (
    LowRankUpdate,
    SpectralDecomposition,
    SymmetricDense,
    UpdateError,
    apply_update,
    reconstruct,
)
from symupdate.eigvec import update_decomposition

from conftest import instance

SQ2 = np.sqrt(2.0)


def test_config_validation():
    with pytest.raises(ValueError):
        JacobiConfig(tol=0.0)
    with pytest.raises(ValueError):
        JacobiConfig(max_sweeps=0)


def test_jacobi_diagonal():
    d = jacobi_evd(SymmetricDense(np.diag([3.0, 1.0])))
    assert np.array_equal(d.lam, [1.0, 3.0])
    assert np.array_equal(np.abs(d.q), [[0.0, 1.0], [1.0, 0.0]])


def test_jacobi_swap_matrix():
    d = jacobi_evd(SymmetricDense([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(d.lam, [-1.0, 1.0])
    assert np.allclose(np.abs(d.q[:, 0] @ [1, -1]) / SQ2, 1.0)
    assert np.allclose(np.abs(d.q[:, 1] @ [1, 1]) / SQ2, 1.0)


def test_jacobi_quadratic_example():
    assert np.allclose(jacobi_evd(SymmetricDense([[1.0, 1.0], [1.0, 3.0]])).lam, [2 - SQ2, 2 + SQ2])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(1, 25))
def test_jacobi_reconstruction(seed, n):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n))
    a = SymmetricDense((m + m.T) / 2)
    cfg = JacobiConfig()
    d = jacobi_evd(a, cfg)
    fro = np.linalg.norm(a.entries)
    assert np.linalg.norm(reconstruct(d).entries - a.entries) <= 10 * cfg.tol * fro + 1e-300
    assert np.all(np.diff(d.lam) >= 0)
    assert np.allclose(d.lam, np.linalg.eigvalsh(a.entries), atol=1e-11 * max(fro, 1))


def test_jacobi_sweep_cap():
    rng = np.random.default_rng(0)
    m = rng.standard_normal((12, 12))
    with pytest.raises(UpdateError) as info:
        jacobi_evd(SymmetricDense(m + m.T), JacobiConfig(tol=1e-14, max_sweeps=1))
    assert info.value.stage == "jacobi"


def test_perturbation_diagonal_example():
    d = SpectralDecomposition(np.eye(2), [1.0, 2.0])
    out = perturbation_update(d, LowRankUpdate([[0.01], [0.0]]))
    assert out.lam[0] == pytest.approx(1.0001, abs=1e-15)
    assert np.allclose(out.q, np.eye(2))


def test_perturbation_null_update():
    d, _ = instance(0, 8, 2, 1.0)
    out = perturbation_update(d, LowRankUpdate(np.zeros((8, 2))))
    assert np.array_equal(out.lam, d.lam) and np.allclose(out.q, d.q)


def test_perturbation_rejects_repeated_eigenvalues():
    d = SpectralDecomposition(np.eye(3), [0.0, 1.0, 1.0])
    with pytest.raises(UpdateError):
        perturbation_update(d, LowRankUpdate(np.ones((3, 1))))


def _eig_errors(n, k, norm, seeds, signs=None):
    pert, ours = [], []
    for seed in seeds:
        d, u = instance(seed, n, k, norm, signs)
        ref = np.linalg.eigvalsh(apply_update(reconstruct(d), u).entries)
        pert.append(np.linalg.norm(perturbation_update(d, u).lam - ref))
        ours.append(np.linalg.norm(update_decomposition(d, u).decomposition.lam - ref))
    return np.array(pert), np.array(ours)


def test_perturbation_fails_at_moderate_norm():
    pert, ours = _eig_errors(100, 3, 0.3, range(3))
    assert np.all(pert >= 10 * np.maximum(ours, 1e-16))


def test_perturbation_error_scales_fourth_power():
    big, _ = _eig_errors(30, 2, 0.02, range(20))
    small, _ = _eig_errors(30, 2, 0.01, range(20))
    assert np.median(big) / np.median(small) >= 8


def test_perturbation_eigenvectors_first_order_accurate():
    # with the right denominator sign the vector error is second order in E
    errs = []
    for norm in (0.1, 0.05):
        d, u = instance(1, 20, 2, norm)
        ref = jacobi_evd(apply_update(reconstruct(d), u))
        out = perturbation_update(d, u)
        align = np.sign(np.sum(out.q * ref.q, axis=0))
        errs.append(np.linalg.norm(out.q - ref.q * align))
    assert errs[0] / errs[1] >= 8


@pytest.mark.parametrize("signs", [(1, -1), (-1, -1)])
def test_signed_perturbation_matches_oracle_at_small_norm(signs):
    d, u = instance(2, 30, 2, 1e-3, signs)
    ref = jacobi_evd(apply_update(reconstruct(d), u)).lam
    assert np.max(np.abs(perturbation_update(d, u).lam - ref)) <= 1e-9
