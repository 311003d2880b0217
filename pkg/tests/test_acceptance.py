"""Acceptance criteria, one test each; every test records a PASS/FAIL line.

The lines are printed as they are produced (visible with ``-s``) and again
in the terminal summary of every run.
"""

import numpy as np
import pytest

from symupdate import bench
from symupdate.baseline import jacobi_evd
from symupdate.core import (
    LowRankUpdate,
    SpectralDecomposition,
    SymmetricDense,
    apply_update,
    ortho_error,
    random_instance,
    reconstruct,
)
from symupdate.eigvec import update_decomposition
from symupdate.locate import ShiftKind, locate_rank2
from symupdate.secular import deflate_problem, transform_update
from symupdate.sturm import build_chain, chain_start, count_all_roots, count_roots, long_division

from conftest import interval_counts

REPORT: list[str] = []


def report(number, ok: bool, detail: str):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    REPORT.append(line)
    print(line)
    assert ok, line


def _suite():
    """200 seeded instances: n in {10, 30, 50, 100}, k in {1, 2, 3, 5}, random signs."""
    out = []
    for i in range(200):
        n = (10, 30, 50, 100)[i % 4]
        k = (1, 2, 3, 5)[(i // 4) % 4]
        rng = np.random.default_rng(10_000 + i)
        signs = rng.choice([-1.0, 1.0], k)
        out.append(random_instance(n, k, float(rng.uniform(0.1, 3.0)), 10_000 + i, signs))
    return out


@pytest.fixture(scope="module")
def suite_results():
    rows = []
    for d, upd in _suite():
        target = apply_update(reconstruct(d), upd)
        oracle = jacobi_evd(target)
        res = update_decomposition(d, upd)
        rows.append((d, upd, target, oracle, res))
    return rows


def test_criterion_1_oracle_equivalence(suite_results):
    worst = 0.0
    for _, _, target, oracle, res in suite_results:
        err = np.linalg.norm(res.decomposition.lam - oracle.lam)
        worst = max(worst, err / (1e-8 * (1 + np.linalg.norm(target.entries))))
    report(1, worst <= 1.0, f"{len(suite_results)} instances, worst error / bound = {worst:.2e}")


def test_criterion_2_reconstruction_and_orthonormality(suite_results):
    worst_res = worst_orth = 0.0
    for _, _, target, _, res in suite_results:
        worst_res = max(worst_res, res.residual_fro / (1e-7 * np.linalg.norm(target.entries)))
        worst_orth = max(worst_orth, ortho_error(res.decomposition.q) / 1e-6)
    ok = worst_res <= 1.0 and worst_orth <= 1.0
    report(2, ok, f"worst residual / bound = {worst_res:.2e}, worst ortho / bound = {worst_orth:.2e}")


def test_criterion_3_golden_2x2():
    d = SpectralDecomposition(np.eye(2), [0.0, 1.0])
    upd = LowRankUpdate([[1.0, 0.0], [1.0, 1.0]], [1.0, 1.0])
    out = update_decomposition(d, upd).decomposition
    a = apply_update(reconstruct(d), upd).entries
    val_err = float(np.max(np.abs(out.lam - [2 - np.sqrt(2), 2 + np.sqrt(2)])))
    vec_err = float(np.max(np.linalg.norm(a @ out.q - out.q * out.lam, axis=0)))
    ok = val_err <= 1e-12 and vec_err <= 1e-12
    report(3, ok, f"eigenvalue error {val_err:.1e}, eigenvector residual {vec_err:.1e}")


def test_criterion_4_rank2_location():
    kinds = {ShiftKind.DOUBLE_RIGHT: [1.0, 1.0], ShiftKind.DOUBLE_LEFT: [-1.0, -1.0],
             ShiftKind.MIXED: [1.0, -1.0]}
    hits = total = 0
    for kind, signs in kinds.items():
        for seed in range(100):
            rng = np.random.default_rng(20_000 + seed)
            n = int(rng.integers(3, 41))
            d, upd = random_instance(n, 2, float(rng.uniform(0.1, 3.0)), 20_000 + seed, signs)
            tu = transform_update(d, upd)
            c = deflate_problem(d.lam, tu.u, tu.signs).coeffs
            loc = locate_rank2(c.weights, kind)
            oracle = jacobi_evd(apply_update(reconstruct(d), upd)).lam
            expect = interval_counts(oracle, c.poles)
            total += 1
            hits += int(c.size == n and loc.total == n and np.array_equal(loc.counts, expect))
    report(4, hits == total, f"{hits}/{total} rank-2 location vectors match the oracle")


def _rank3_instances():
    for seed in range(100):
        rng = np.random.default_rng(30_000 + seed)
        n = int(rng.integers(3, 31))
        signs = rng.choice([-1.0, 1.0], 3)
        d, upd = random_instance(n, 3, float(rng.uniform(0.1, 3.0)), 30_000 + seed, signs)
        tu = transform_update(d, upd)
        yield d, upd, deflate_problem(d.lam, tu.u, tu.signs).coeffs


def test_criterion_5_sturm_counting():
    exact = chains = over = 0
    for d, upd, c in _rank3_instances():
        oracle = jacobi_evd(apply_update(reconstruct(d), upd)).lam
        expect = interval_counts(oracle, c.poles)
        res = count_all_roots(c, max_per_interval=3)
        exact += int(res.total == d.n and np.array_equal(res.counts, expect))
        # every chain, partial or not and including the restarts on deflated
        # functions, stays at or below the number of roots it is counting
        for chain in [build_chain(c), *res.chains]:
            chains += 1
            over += int(count_roots(chain, -np.inf, np.inf)[0] > chain.npoles)
    report(5, exact == 100 and over == 0,
           f"{exact}/100 exact interval counts, {over}/{chains} chains over-count on the whole line")


def _identity_residual(chain, xs):
    worst = 0.0
    for m in range(2, len(chain.steps)):
        s = chain.steps[m]
        p2, p1 = chain.steps[m - 2](xs), chain.steps[m - 1](xs)
        rhs = (-p2 + s.a * (xs - s.b) * p1) / s.scale
        size = (np.abs(p2) + np.abs(s.a * (xs - s.b) * p1)) / s.scale
        worst = max(worst, float(np.max(np.abs(s(xs) - rhs) / size)))
    return worst


def test_criterion_6_sturm_internals():
    worst_div = worst_fd = 0.0
    for seed, (_, _, c) in enumerate(_rank3_instances()):
        rng = np.random.default_rng(seed)
        xs = rng.uniform(c.poles[0] - 1, c.poles[-1] + 1, 20)
        worst_div = max(worst_div, _identity_residual(build_chain(c), xs))
        s0, s1 = chain_start(c)
        h = 1e-6 * max(1.0, float(np.max(np.abs(c.poles))))
        for x in xs:
            fd = (s0(x + h) - s0(x - h)) / (2 * h)
            worst_fd = max(worst_fd, abs(s1(x) - fd) / max(abs(fd), abs(s1(x)), 1e-3))
    from symupdate.secular import SecularCoefficients

    s0, s1 = chain_start(SecularCoefficients([0.0, 1.0], [2.0, 1.0]))
    s2 = long_division(s0, s1)
    worked = (s0.c, s1.c, s2.c) == (1.0, 2.0, 2.0)
    ok = worst_div <= 1e-8 and worst_fd <= 1e-5 and worked
    report(6, ok, f"division residual {worst_div:.1e}, derivative mismatch {worst_fd:.1e}, "
                  f"worked chain {(s0.c, s1.c, s2.c)}")


def test_criterion_7_interlacing(suite_results):
    checked = violations = 0
    pos = [(d, upd, res) for d, upd, _, _, res in suite_results
           if upd.k == 2 and np.all(upd.signs > 0)]
    for seed in range(200):
        rng = np.random.default_rng(40_000 + seed)
        n = (10, 30, 50, 100)[seed % 4]
        d, upd = random_instance(n, 2, float(rng.uniform(0.1, 3.0)), 40_000 + seed, [1.0, 1.0])
        pos.append((d, upd, update_decomposition(d, upd)))
    for d, _, res in pos:
        old, new = d.lam, res.decomposition.lam
        checked += 1
        violations += int(np.any(new < old) or np.any(new[:-2] > old[2:]))
    report(7, violations == 0, f"{checked} positive rank-2 updates, {violations} interlacing violations")


def test_criterion_8_scaling_order():
    sizes = [100, 200, 400, 800]
    methods = ["rank2", "rank1_twice", "rank_k_sturm", "direct_evd"]
    records = bench.run_bench(sizes, 3, 5, methods, seed=0)
    p = {f.method: f.p for f in bench.fit_records(records, methods)}
    ok = p["rank2"] < p["rank1_twice"] < p["direct_evd"] and p["rank_k_sturm"] < p["direct_evd"]
    detail = ", ".join(f"p({m}) = {p[m]:.2f} (reference {bench.REFERENCE_P[m]})" for m in methods)
    report(8, ok, detail)


def _eig_errors(norm):
    out = {"proposed": [], "perturbation": []}
    for k in range(1, 11):
        for row in bench.compare_rank(100, k, norm, 0):
            if row[1] in out:
                out[row[1]].append(row[2])
    return {m: np.array(v) for m, v in out.items()}


def test_criterion_9_perturbation_contrast():
    small, large = _eig_errors(0.01), _eig_errors(0.3)
    ratio_small = float(np.max(small["perturbation"] / small["proposed"]))
    proposed_change = float(np.max(np.maximum(large["proposed"] / small["proposed"],
                                              small["proposed"] / large["proposed"])))
    pert_growth = float(np.min(large["perturbation"] / small["perturbation"]))
    part_a = ratio_small <= 100
    part_b = proposed_change < 10 and pert_growth >= 100
    report(9, part_a and part_b,
           f"(a) {'ok' if part_a else 'fails'}: perturbation / proposed at norm 0.01 up to "
           f"{ratio_small:.1e} (limit 100); (b) {'ok' if part_b else 'fails'}: proposed changes "
           f"up to {proposed_change:.1f}x (limit 10), perturbation grows at least "
           f"{pert_growth:.1e}x (needs 100)")
