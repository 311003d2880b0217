import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from symupdate.core import UpdateError
from symupdate.secular import SecularCoefficients, TransformedUpdate, secular_coefficients
from symupdate.sturm import (
    SturmChain,
    SturmStep,
    build_chain,
    chain_start,
    count_all_roots,
    count_roots,
    deflate,
    identity_residual,
    interval_parity,
    long_division,
)

SQ2 = np.sqrt(2.0)
EXAMPLE = SecularCoefficients([0.0, 1.0], [2.0, 1.0])  # p0 = x^2 - 4x + 2


def test_chain_start_worked_example():
    s0, s1 = chain_start(EXAMPLE)
    assert s0.c == 1.0 and np.array_equal(s0.weights, [2.0, 1.0])
    assert s1.c == 2.0
    assert np.allclose(s1.poles, [0.0]) and np.allclose(s1.weights, [4.0])
    for x in (-3.0, 0.5, 7.0):
        assert abs(s1(x) - (2 * x - 4)) < 1e-12


def test_chain_start_symmetric_rank1():
    c = SecularCoefficients([0.0, 1.0], [0.5, 0.5])
    s0, s1 = chain_start(c)
    assert s1.c == 2.0
    h = 1e-5
    deriv = (s0(5 + h) - s0(5 - h)) / (2 * h)
    assert abs(s1(5.0) - deriv) < 1e-10 * max(1, abs(deriv)) + 1e-8


def test_chain_start_single_pole():
    _, s1 = chain_start(SecularCoefficients([0.0], [1.0]))
    assert s1.c == 1.0 and s1.poles.size == 0


def test_chain_start_requires_unit_leading():
    with pytest.raises(ValueError):
        chain_start(SecularCoefficients([0.0], [1.0], leading=2.0))


def test_long_division_worked_example():
    s0, s1 = chain_start(EXAMPLE)
    s2 = long_division(s0, s1)
    assert s2.a == 0.5 and s2.b == 2.0 and s2.c == 2.0 and s2.poles.size == 0
    x = 7.0
    assert -s0(x) + s2.a * (x - s2.b) * s1(x) == pytest.approx(2.0)
    assert s2(x) == pytest.approx(2.0)


def test_long_division_termination_guard():
    s0, s1 = chain_start(EXAMPLE)
    tiny = SturmStep(1, 1e-20, s1.weights, s1.poles)
    assert long_division(s0, tiny, eps_c=1e-12) is None


def test_b_sign_against_cubic_expansion():
    # poles (0, 1, 3), weights (1, -0.5, 2): p0 = pi0 * f0 expanded by hand with numpy.poly
    d = np.array([0.0, 1.0, 3.0])
    a = np.array([1.0, -0.5, 2.0])
    p0 = np.poly(d)
    for j in range(3):
        p0 = np.polysub(p0, a[j] * np.poly(np.delete(d, j)))
    p1 = np.polyder(p0)
    quot, rem = np.polydiv(p0, p1)
    p2 = -rem
    s0, s1 = chain_start(SecularCoefficients(d, a))
    s2 = long_division(s0, s1)
    # p0 = q p1 - p2 with linear q: the quotient's root is B
    assert s2.b == pytest.approx(-quot[1] / quot[0])
    for x in (-2.0, 0.5, 2.0, 5.0):
        lhs = -s0(x) + s2.a * (x - s2.b) * s1(x)
        assert lhs == pytest.approx(s2(x), rel=1e-12)
    # p2 is proportional to the negated remainder with a positive factor
    xs = np.array([-2.0, 0.5, 2.0, 5.0])
    ratio = s2(xs) / np.polyval(p2, xs)
    assert np.all(ratio > 0) and np.allclose(ratio, ratio[0])


def _chain_residual(chain):
    worst = 0.0
    rng = np.random.default_rng(0)
    d = chain.steps[0].poles
    xs = rng.uniform(d[0] - 1, d[-1] + 1, 20)
    for m in range(2, len(chain.steps)):
        s = chain.steps[m]
        p2, p1 = chain.steps[m - 2](xs), chain.steps[m - 1](xs)
        rhs = (-p2 + s.a * (xs - s.b) * p1) / s.scale
        size = (np.abs(p2) + np.abs(s.a * (xs - s.b) * p1)) / s.scale
        worst = max(worst, float(np.max(np.abs(s(xs) - rhs) / size)))
    return worst


def _random_coeffs(seed, n, k):
    rng = np.random.default_rng(seed)
    lam = np.sort(rng.uniform(-1, 1, n))
    tu = TransformedUpdate(rng.standard_normal((n, k)), rng.choice([-1.0, 1.0], k))
    return lam, tu, secular_coefficients(lam, tu)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(2, 12), k=st.integers(1, 3))
def test_division_identity_every_step(seed, n, k):
    _, _, c = _random_coeffs(seed, n, k)
    chain = build_chain(c)
    assert _chain_residual(chain) <= 1e-8


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(2, 12), k=st.integers(1, 3))
def test_p1_is_derivative_of_p0(seed, n, k):
    _, _, c = _random_coeffs(seed, n, k)
    s0, s1 = chain_start(c)
    scale = max(1.0, float(np.max(np.abs(c.poles))))
    h = 1e-6 * scale
    rng = np.random.default_rng(seed)
    for x in rng.uniform(c.poles[0] - 1, c.poles[-1] + 1, 20):
        fd = (s0(x + h) - s0(x - h)) / (2 * h)
        assert abs(s1(x) - fd) <= 1e-5 * max(abs(fd), abs(s1(x)), 1e-3)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(13, 30), k=st.integers(2, 3))
def test_long_chains_keep_division_identity(seed, n, k):
    # deep chains lose accuracy; the builder must stop before a bad step
    _, _, c = _random_coeffs(seed, n, k)
    assert _chain_residual(build_chain(c)) <= 1e-8


def test_identity_residual_flags_corrupted_step():
    s0, s1 = chain_start(EXAMPLE)
    s2 = long_division(s0, s1)
    xs = np.array([-1.0, 0.5, 3.0])
    assert np.max(identity_residual(s0, s1, s2, xs)) < 1e-15
    bad = SturmStep(2, s2.c * (1 + 1e-6), s2.weights, s2.poles, s2.a, s2.b, s2.scale)
    assert np.max(identity_residual(s0, s1, bad, xs)) > 1e-8


def test_count_all_roots_when_only_pairs_remain():
    # seeds whose chains end early with every remaining interval of even parity
    for seed in (66, 84, 86, 104):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 31))
        k = int(rng.integers(1, 4))
        lam, tu, c = _random_coeffs(seed, n, k)
        ev = np.linalg.eigvalsh(np.diag(lam) + (tu.u * tu.signs) @ tu.u.T)
        res = count_all_roots(c, max_per_interval=k)
        edges = np.concatenate([[-np.inf], c.poles, [np.inf]])
        assert np.array_equal(res.counts, np.histogram(ev, bins=edges)[0])
        assert res.rounds > 1


def test_count_roots_examples():
    chain = build_chain(EXAMPLE)
    assert chain.complete and np.all(chain.leading > 0)
    assert count_roots(chain, -np.inf, np.inf) == (2, True)
    assert count_roots(chain, 0.5, 0.6)[0] == 1
    assert count_roots(chain, 10.0, 11.0)[0] == 0


def test_worked_chain_constants():
    s0, s1 = chain_start(EXAMPLE)
    s2 = long_division(s0, s1)
    assert (s0.c, s1.c, s2.c) == (1.0, 2.0, 2.0)


def test_complete_positive_chain_counts_all():
    for seed in range(30):
        _, _, c = _random_coeffs(seed, 6, 1)
        chain = build_chain(c)
        if chain.complete and np.all(chain.leading > 0):
            assert count_roots(chain, -np.inf, np.inf)[0] == c.size


def test_sign_variation_matches_oracle():
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 31))
        k = int(rng.integers(1, 4))
        lam, tu, c = _random_coeffs(seed, n, k)
        ev = np.linalg.eigvalsh(np.diag(lam) + (tu.u * tu.signs) @ tu.u.T)
        moved = np.min(np.abs(ev[:, None] - lam[None, :]), axis=1) > 1e-10
        res = count_all_roots(c, max_per_interval=k)
        assert res.total == int(moved.sum()) == c.size
        hits += 1
    assert hits == 100


def test_partial_chain_is_lower_bound():
    for seed in range(60):
        rng = np.random.default_rng(seed)
        lam, tu, c = _random_coeffs(seed, 30, 3)
        chain = build_chain(c)
        got, certified = count_roots(chain, -np.inf, np.inf)
        assert got <= c.size
        if certified:
            assert got == c.size


def test_deflate_examples():
    beta = deflate(EXAMPLE, [2 - SQ2])
    assert np.allclose(beta.poles, [1.0]) and beta.weights[0] == pytest.approx(SQ2 + 1)
    assert abs(beta(2 + SQ2)) < 1e-12
    assert deflate(EXAMPLE, []) is EXAMPLE
    both = deflate(EXAMPLE, [2 - SQ2, 2 + SQ2])
    assert both.size == 0 and both.leading == 1.0


def test_deflate_nearest_pairing_keeps_lower_pole():
    beta = deflate(EXAMPLE, [2 - SQ2], pairing="nearest")
    assert np.allclose(beta.poles, [0.0]) and beta.weights[0] == pytest.approx(2 + SQ2)
    assert abs(beta(2 + SQ2)) < 1e-12


def test_deflate_rejects_pole_root():
    with pytest.raises(ValueError):
        deflate(EXAMPLE, [1.0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(2, 12), k=st.integers(1, 3))
def test_deflation_preserves_remaining_roots(seed, n, k):
    lam, tu, c = _random_coeffs(seed, n, k)
    ev = np.linalg.eigvalsh(np.diag(lam) + (tu.u * tu.signs) @ tu.u.T)
    rng = np.random.default_rng(seed)
    take = np.sort(rng.choice(ev.size, size=int(rng.integers(1, ev.size)), replace=False))
    dist = np.min(np.abs(ev[take, None] - lam[None, :]), axis=1)
    if np.any(dist < 1e-6):
        return
    rest = np.delete(ev, take)
    defl = deflate(c, ev[take])
    scale = 1 + np.sum(np.abs(defl.weights))
    for x in rest:
        if np.min(np.abs(x - defl.poles), initial=np.inf) > 1e-6:
            gap = np.min(np.abs(x - defl.poles), initial=1.0)
            assert abs(defl(x)) <= 1e-8 * scale / min(gap, 1.0) + 1e-8


def test_count_all_roots_examples():
    res = count_all_roots(EXAMPLE)
    assert list(res.counts) == [0, 1, 1]
    rng = np.random.default_rng(1)
    for n in range(1, 9):
        c = SecularCoefficients(np.arange(n, dtype=float), rng.uniform(0.1, 1, n))
        assert list(count_all_roots(c).counts) == [0] + [1] * n
    empty = SecularCoefficients([], [])
    assert count_all_roots(empty).total == 0


def test_interval_parity_of_example():
    assert list(interval_parity(EXAMPLE)) == [0, 1, 1]
