"""Zero finders for secular functions and the eigenvalue update pipeline."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from symupdate.core import LowRankUpdate, RepeatedEigenvalueError, SpectralDecomposition, UpdateError
from symupdate.secular import (
    DeflatedProblem,
    SecularCoefficients,
    deflate_problem,
    transform_update,
)

EPS = np.finfo(float).eps
SECTIONS = 8


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    expected: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty bracket ({self.lo}, {self.hi})")
        if self.expected < 1:
            raise ValueError("bracket must be expected to hold a root")


@dataclass(frozen=True)
class Root:
    """A root stored as ``origin + tau`` with ``origin`` a pole (or 0).

    Keeping the offset from the nearest pole preserves the digits of
    ``lambda_j - root`` needed by the eigenvector formula.
    """

    origin: float
    tau: float

    @property
    def value(self) -> float:
        return self.origin + self.tau


class _Shifted:
    """Secular function evaluated in coordinates centred on one pole."""

    def __init__(self, c: SecularCoefficients, origin: float):
        self.c = c
        self.origin = origin
        self.delta = c.poles - origin

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        return self.c.leading - np.sum(self.c.weights / (tau[..., None] - self.delta), axis=-1)


def _nearest_pole(c: SecularCoefficients, x: float) -> float:
    if c.size == 0:
        return 0.0
    i = np.searchsorted(c.poles, x)
    cand = c.poles[max(i - 1, 0):i + 1]
    return float(cand[np.argmin(np.abs(cand - x))])


def _end_sign(c: SecularCoefficients, x: float, side: int) -> float:
    """Sign of f just inside an endpoint; ``side`` is +1 at a left end, -1 at a right end."""
    hit = np.flatnonzero(c.poles == x)
    if hit.size:
        # f ~ -alpha / (x - d): positive offsets on the left end
        return float(-np.sign(c.weights[hit[0]]) * side)
    return float(np.sign(c.leading - np.sum(c.weights / (x - c.poles))))


def _refine(c: SecularCoefficients, lo: float, hi: float, s_lo: float, tol: float | None,
            sections: int = SECTIONS) -> Root:
    """Shrink a sign-change bracket with equidistant sampling.

    Terminates once the bracket is narrower than ``tol`` or can no longer
    be split in floating point.
    """
    origin = _nearest_pole(c, 0.5 * (lo + hi))
    fs = _Shifted(c, origin)
    a, b = lo - origin, hi - origin
    sa = s_lo
    rounds = 0
    while True:
        width = b - a
        if tol is not None and width < tol:
            break
        if width <= 2 * EPS * max(abs(a), abs(b)) or rounds > 400:
            break
        mid = 0.5 * (a + b)
        new_origin = _nearest_pole(c, origin + mid)
        if new_origin != origin:
            a, b = a + (origin - new_origin), b + (origin - new_origin)
            origin, fs = new_origin, _Shifted(c, new_origin)
        t = a + (b - a) * np.arange(1, sections + 1) / (sections + 1)
        t = t[(t > a) & (t < b)]
        if t.size == 0:
            break
        st = np.sign(fs(t))
        if np.any(st == 0):
            j = int(np.flatnonzero(st == 0)[0])
            return Root(origin, float(t[j]))
        flips = np.flatnonzero(st != sa)
        if flips.size == 0:
            a = t[-1]
        else:
            j = int(flips[0])
            b = t[j]
            if j > 0:
                a = t[j - 1]
        rounds += 1
    fa, fb = np.abs(fs(np.array([a, b])))
    return Root(origin, float(a if fa <= fb else b))


def _end_signs(c: SecularCoefficients, xs, side: int) -> np.ndarray:
    """Vectorised :func:`_end_sign`."""
    xs = np.asarray(xs, dtype=float)
    out = np.empty(xs.size)
    idx = np.searchsorted(c.poles, xs)
    idx = np.minimum(idx, c.size - 1)
    hit = c.poles[idx] == xs
    out[hit] = -np.sign(c.weights[idx[hit]]) * side
    if np.any(~hit):
        f, _, _ = _sample(c, xs[~hit])
        out[~hit] = np.sign(f)
    return out


def refine_brackets(c: SecularCoefficients, lo, hi, s_lo, tol: float | None = None,
                    chunks: int = 1) -> list[Root]:
    """Bisection on many single-root brackets at once.

    After one halving in absolute coordinates every bracket touches at
    most one pole, which becomes its origin; the rest runs on the offset
    from that pole. ``chunks > 1`` splits the work over threads.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    s_lo = np.asarray(s_lo, dtype=float)
    if lo.size == 0:
        return []
    if chunks > 1 and lo.size > chunks:
        parts = np.array_split(np.arange(lo.size), chunks)
        with ThreadPoolExecutor(max_workers=chunks) as pool:
            res = pool.map(lambda ix: refine_brackets(c, lo[ix], hi[ix], s_lo[ix], tol), parts)
            return [r for part in res for r in part]
    mid = 0.5 * (lo + hi)
    f, _, _ = _sample(c, mid)
    sm = np.sign(f)
    go_left = sm != s_lo
    lo, hi = np.where(go_left, lo, mid), np.where(go_left, mid, hi)
    exact = sm == 0
    centre = 0.5 * (lo + hi)
    pos = np.searchsorted(c.poles, centre)
    left_p = c.poles[np.maximum(pos - 1, 0)]
    right_p = c.poles[np.minimum(pos, c.size - 1)]
    origin = np.where(np.abs(centre - left_p) <= np.abs(right_p - centre), left_p, right_p)
    origin = np.where(exact, mid, origin)
    a, b = lo - origin, hi - origin
    delta = c.poles[None, :] - origin[:, None]
    floor = 0.0 if tol is None else tol
    for _ in range(1100):
        t = 0.5 * (a + b)
        live = ~exact & (b - a > floor) & (t > a) & (t < b)
        if not np.any(live):
            break
        rows = np.flatnonzero(live)
        ft = c.leading - np.sum(c.weights / (t[rows, None] - delta[rows]), axis=1)
        st = np.sign(ft)
        left_half = st != s_lo[rows]
        b[rows] = np.where(left_half, t[rows], b[rows])
        a[rows] = np.where(left_half, a[rows], t[rows])
        hit = st == 0
        if np.any(hit):
            a[rows[hit]] = b[rows[hit]] = t[rows[hit]]
    tau = np.where(exact, 0.0, 0.5 * (a + b))
    return [Root(float(o), float(x)) for o, x in zip(origin, tau)]


def _sample(c, x):
    """f, f' and a rounding-noise level for f at points ``x``."""
    x = np.asarray(x, dtype=float)
    r = 1.0 / (x[:, None] - c.poles[None, :])
    terms = c.weights * r
    f = c.leading - np.sum(terms, axis=1)
    df = np.sum(terms * r, axis=1)
    noise = 64 * EPS * (abs(c.leading) + np.sum(np.abs(terms), axis=1))
    return f, df, noise


def _curvature_bound(c: SecularCoefficients, a: float, b: float, skip: np.ndarray) -> float:
    """Upper bound on ``|f''|`` over ``[a, b]`` from the poles not in ``skip``."""
    dist = np.maximum(np.maximum(c.poles - b, a - c.poles), 0.0)
    w = np.abs(c.weights)
    keep = ~skip
    if np.any(keep & (dist == 0)):
        return np.inf
    return float(2 * np.sum(w[keep] / dist[keep] ** 3))


def _segment_settled(c: SecularCoefficients, xs, fs, ds, ss, i: int) -> bool:
    """True if segment ``i`` provably holds no root (same signs) or one root (a sign change).

    Uses a second-order Taylor bound from an end point; a pole at an end
    is split off first, its term having the sign of f near that end.
    """
    a, b = xs[i], xs[i + 1]
    w = b - a
    skip = (c.poles == a) | (c.poles == b)
    if np.count_nonzero(skip) > 1:
        return False
    m = _curvature_bound(c, a, b, skip)
    if not np.isfinite(m):
        return False
    pole = np.flatnonzero(skip)
    for e, sgn in ((i, 1.0), (i + 1, -1.0)):
        if np.isnan(fs[e]):
            continue
        g, dg = fs[e], ds[e]
        if pole.size:
            p = pole[0]
            r = 1.0 / (xs[e] - c.poles[p])
            g, dg = g + c.weights[p] * r, dg - c.weights[p] * r * r
            if pole.size and ss[i] != ss[i + 1]:
                return False
        if ss[i] == ss[i + 1]:
            s = ss[i]
            # s*g(e + sgn t) >= s*g(e) + s*g'(e)*sgn*t - m t^2 / 2, concave in t
            if s * g > 0 and s * g + s * dg * sgn * w - 0.5 * m * w * w > 0:
                return True
        elif abs(dg) - m * w > 0:
            return True
    return False


def _search(c: SecularCoefficients, lo: float, hi: float, expected: int, tol: float | None,
            sections: int = SECTIONS):
    """Refine a sample grid on ``(lo, hi)`` until ``expected`` roots are accounted for.

    Sign changes account for one root each. Samples whose value is below
    the rounding level carry no sign; a run of them between two samples of
    equal sign counts as a double root. Segments are refined best-first,
    preferring those where a Newton step from an end lands inside, and
    segments are dropped once a Taylor bound settles their root count.
    Returns ``(brackets, tangencies)`` where brackets are ``(a, b, sign_a)``.
    """
    xs = np.array([lo, hi], dtype=float)
    ss = np.array([_end_sign(c, lo, +1), _end_sign(c, hi, -1)])
    fs = np.full(2, np.nan)
    ds = np.full(2, np.nan)
    ns = np.zeros(2)
    for i in range(2):
        if not np.any(c.poles == xs[i]):
            fs[i], ds[i], ns[i] = (v[0] for v in _sample(c, xs[i:i + 1]))
    settled = np.array([False])
    floor = tol if tol is not None else 0.0

    def account():
        reliable = np.flatnonzero(np.isnan(fs) | (np.abs(fs) > ns))
        brackets, tangent = [], []
        for i, j in zip(reliable[:-1], reliable[1:]):
            if ss[i] != ss[j]:
                brackets.append((xs[i], xs[j], ss[i]))
            elif j > i + 1:
                k = i + 1 + int(np.argmin(np.abs(fs[i + 1:j])))
                tangent.append(float(xs[k]))
        return brackets, tangent, reliable

    for _ in range(200 * expected + 50):
        brackets, tangent, reliable = account()
        if len(brackets) + 2 * len(tangent) >= expected:
            break
        rel = np.zeros(xs.size, dtype=bool)
        rel[reliable] = True
        open_ = ~settled & rel[:-1] & rel[1:]
        if not np.any(open_):
            break
        width = np.diff(xs)
        flip = ss[:-1] != ss[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            step_a = -fs[:-1] / ds[:-1]
            step_b = -fs[1:] / ds[1:]
            reach_a = np.where(step_a > 0, step_a / width, np.inf)
            reach_b = np.where(step_b < 0, -step_b / width, np.inf)
        reach_a = np.where(np.isnan(reach_a), 1.0, reach_a)
        reach_b = np.where(np.isnan(reach_b), 1.0, reach_b)
        # widest first, among segments a Newton step points into, then the rest,
        # sign changes last
        tier = np.where(np.minimum(reach_a, reach_b) <= 1.0, 0.0, 1.0) + 2.0 * flip
        score = np.where(open_, tier - width / (hi - lo + width.max()), np.inf)
        seg = int(np.argmin(score))
        a, b = xs[seg], xs[seg + 1]
        if b - a <= max(floor, 4 * EPS * max(1.0, abs(a), abs(b))):
            settled[seg] = True
            if tol is not None and not flip[seg] and min(reach_a[seg], reach_b[seg]) <= 1.0:
                k = seg if abs(np.nan_to_num(fs[seg], nan=np.inf)) <= abs(
                    np.nan_to_num(fs[seg + 1], nan=np.inf)) else seg + 1
                # a dip that cannot be resolved further: record it as a double root
                fs[k] = 0.0
            continue
        new_x = a + (b - a) * np.arange(1, sections + 1) / (sections + 1)
        new_x = new_x[(new_x > a) & (new_x < b)]
        f, df, noise = _sample(c, new_x)
        s = np.sign(f)
        s[s == 0] = ss[seg]
        xs = np.concatenate([xs[:seg + 1], new_x, xs[seg + 1:]])
        ss = np.concatenate([ss[:seg + 1], s, ss[seg + 1:]])
        fs = np.concatenate([fs[:seg + 1], f, fs[seg + 1:]])
        ds = np.concatenate([ds[:seg + 1], df, ds[seg + 1:]])
        ns = np.concatenate([ns[:seg + 1], noise, ns[seg + 1:]])
        fresh = np.array([_segment_settled(c, xs, fs, ds, ss, i)
                          for i in range(seg, seg + new_x.size + 1)])
        settled = np.concatenate([settled[:seg], fresh, settled[seg + 1:]])
    brackets, tangent, _ = account()
    return brackets, tangent


def search_roots(c: SecularCoefficients, lo: float, hi: float, expected: int, tol=None):
    """Roots in ``(lo, hi)`` certified by a sign change, up to ``expected`` of them."""
    brackets, _ = _search(c, lo, hi, expected, tol)
    return [_refine(c, a, b, s, tol).value for a, b, s in brackets[:expected]]


def _dnc_roots(c: SecularCoefficients, b: RootBracket, tol=None) -> list[Root]:
    brackets, tangent = _search(c, b.lo, b.hi, b.expected, tol)
    roots = refine_brackets(c, [x[0] for x in brackets], [x[1] for x in brackets],
                            [x[2] for x in brackets], tol)
    for t in tangent:
        o = _nearest_pole(c, t)
        roots.extend([Root(o, t - o), Root(o, t - o)])
    if len(roots) != b.expected:
        raise UpdateError(
            "rootfind",
            f"expected {b.expected} roots in ({b.lo:.17g}, {b.hi:.17g}), found {len(roots)}",
            partial=sorted(r.value for r in roots),
        )
    roots.sort(key=lambda r: r.value)
    return roots


def dnc_solve(c: SecularCoefficients, b: RootBracket, tol: float | None = None) -> list[float]:
    """Divide-and-conquer zero finder on a bracket known to hold ``b.expected`` roots.

    Each round samples ``SECTIONS`` equidistant interior points and keeps
    the sub-brackets where the sign changes. Brackets that hide an even
    number of roots are refined around the sample closest to zero until a
    sign change appears or the width drops below ``tol``, in which case a
    double root is reported. ``tol=None`` refines to machine precision.
    """
    return [r.value for r in _dnc_roots(c, b, tol)]


def solve_rank1(lam, zeta, sigma: float, tol: float | None = None) -> np.ndarray:
    """Eigenvalues of ``diag(lam) + sigma zeta zeta^T`` by bisection, one root per interval."""
    lam = np.asarray(lam, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    if sigma == 0:
        return lam.copy()
    roots = _solve_rank1_roots(lam, zeta, sigma, tol)
    return np.sort(np.array([r.value for r in roots]))


def _rank1_coeffs(lam, zeta, sigma):
    w = sigma * zeta**2
    keep = np.abs(w) > 1e-14 * (1.0 + np.sum(np.abs(w)))
    keep &= np.concatenate([[True], np.diff(lam) > 0])
    return SecularCoefficients(lam[keep], w[keep], 1.0, np.flatnonzero(keep))


def _solve_rank1_roots(lam, zeta, sigma, tol, c=None) -> list[Root]:
    """Roots of the active part only (the caller keeps deflated poles)."""
    if c is None:
        c = _rank1_coeffs(lam, zeta, sigma)
        fixed = np.setdiff1d(np.arange(lam.size), c.index)
    else:
        fixed = np.empty(0, dtype=int)
    d = c.poles
    if d.size == 0:
        return [Root(float(x), 0.0) for x in lam[fixed]]
    reach = float(np.sum(np.abs(c.weights))) * (1 + 1e-9)
    reach += 4 * EPS * max(1.0, abs(d[0]), abs(d[-1]))
    if sigma > 0:
        edges = np.concatenate([d, [d[-1] + reach]])
        s_lo = -1.0  # f -> -inf just right of each pole
    else:
        edges = np.concatenate([[d[0] - reach], d])
        s_lo = 1.0
    roots = refine_brackets(c, edges[:-1], edges[1:], np.full(d.size, s_lo), tol)
    roots.extend(Root(float(x), 0.0) for x in lam[fixed])
    return roots


def _det_signs(lam, u, signs, origins, taus) -> np.ndarray:
    """Sign of ``det(I + J U^T (Lambda - x)^{-1} U)`` at ``x = origin + tau``, batched.

    This determinant has the sign of the secular function but is formed
    straight from ``U``, so it keeps its accuracy when the weights cancel.
    """
    k = u.shape[1]
    diff = (lam[None, :] - origins[:, None]) - taus[:, None]
    diff = np.where(diff == 0, np.finfo(float).tiny, diff)
    outer = (u[:, :, None] * u[:, None, :]).reshape(u.shape[0], k * k)
    m = np.eye(k)[None] + signs[None, :, None] * ((1.0 / diff) @ outer).reshape(-1, k, k)
    # det(xI - A') / prod(x - lam) = det(I - J U^T (x - Lambda)^{-1} U)
    return np.sign(np.linalg.det(m))


def polish_roots(c: SecularCoefficients, lam, u, signs, roots: list, tol: float | None = None) -> list:
    """Tighten roots by bisection on the sign of the direct determinant.

    Each root is first bracketed by doubling a window around it, never
    reaching past half the gap to a neighbouring root or pole; roots that
    cannot be bracketed (double roots, clusters) are returned unchanged.
    """
    if not roots:
        return roots
    lam = np.asarray(lam, dtype=float)
    u = np.asarray(u, dtype=float)
    signs = np.asarray(signs, dtype=float)
    origins = np.array([r.origin for r in roots])
    taus = np.array([r.tau for r in roots])
    vals = origins + taus
    marks = np.sort(np.concatenate([vals, c.poles]))
    pos = np.searchsorted(marks, vals)
    # gap to the nearest other mark: skip the root's own entry
    left = np.array([vals[i] - marks[p - 1] if p > 0 else np.inf for i, p in enumerate(pos)])
    right = np.array([marks[p + 1] - vals[i] if p + 1 < marks.size else np.inf for i, p in enumerate(pos)])
    room = 0.5 * np.minimum(left, right)
    f, df, noise = _sample(c, vals)
    step = np.maximum(np.abs(noise / np.where(df == 0, np.inf, df)), 8 * EPS * np.maximum(1.0, np.abs(vals)))
    lo, hi = taus - step, taus + step
    s_lo = _det_signs(lam, u, signs, origins, lo)
    s_hi = _det_signs(lam, u, signs, origins, hi)
    ok = (s_lo != s_hi) & (s_lo != 0) & (s_hi != 0)
    for _ in range(60):
        grow = np.flatnonzero(~ok & (2 * step <= room))
        if grow.size == 0:
            break
        step[grow] *= 2
        lo[grow], hi[grow] = taus[grow] - step[grow], taus[grow] + step[grow]
        s_lo[grow] = _det_signs(lam, u, signs, origins[grow], lo[grow])
        s_hi[grow] = _det_signs(lam, u, signs, origins[grow], hi[grow])
        ok = (s_lo != s_hi) & (s_lo != 0) & (s_hi != 0)
    floor = 0.0 if tol is None else tol
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        live = np.flatnonzero(ok & (hi - lo > floor) & (mid > lo) & (mid < hi))
        if live.size == 0:
            break
        sm = _det_signs(lam, u, signs, origins[live], mid[live])
        left_half = sm != s_lo[live]
        hi[live] = np.where(left_half, mid[live], hi[live])
        lo[live] = np.where(left_half, lo[live], mid[live])
    new = np.where(ok, 0.5 * (lo + hi), taus)
    return [Root(r.origin, float(t)) for r, t in zip(roots, new)]


def slice_roots(c: SecularCoefficients, lam, u, signs, b: RootBracket) -> list[Root]:
    """Roots in a bracket by bisection on eigenvalue counts (spectrum slicing).

    Slow but immune to inaccurate weights: each step counts the eigenvalues
    of ``diag(lam) + U J U^T`` below the midpoint from matrix inertia.
    Eigenvalues pinned to zero-weight poles inside the bracket are dropped.
    """
    from symupdate.locate import count_below

    signs = np.asarray(signs, dtype=float)
    found = []
    stack = [(b.lo, b.hi, count_below(lam, u, signs, b.lo), count_below(lam, u, signs, b.hi))]
    while stack:
        a, z, na, nz = stack.pop()
        if nz == na:
            continue
        mid = 0.5 * (a + z)
        if not a < mid < z:
            found.extend([mid] * (nz - na))
            continue
        nm = count_below(lam, u, signs, mid)
        stack.append((mid, z, nm, nz))
        stack.append((a, mid, na, nm))
    found = sorted(found)
    for p in lam[(lam > b.lo) & (lam < b.hi) & ~np.isin(lam, c.poles)]:
        if found:
            found.pop(int(np.argmin(np.abs(np.asarray(found) - p))))
    if len(found) != b.expected:
        raise UpdateError("rootfind", f"expected {b.expected} roots in ({b.lo:.17g}, {b.hi:.17g}), "
                                      f"counted {len(found)}", partial=found)
    out = []
    for x in found:
        o = _nearest_pole(c, x)
        out.append(Root(o, x - o))
    return out


@dataclass
class EigenvalueSolution:
    """Updated eigenvalues with the bookkeeping the eigenvector step needs."""

    problem: DeflatedProblem
    roots: list  # Root objects for the active poles, ascending
    method: str

    def values(self) -> np.ndarray:
        p = self.problem
        vals = np.concatenate([[r.value for r in self.roots], p.lam[p.fixed]])
        return np.sort(vals)


def _brackets_from_counts(c: SecularCoefficients, counts, lo: float, hi: float):
    edges = np.concatenate([[lo], c.poles, [hi]])
    return [RootBracket(edges[i], edges[i + 1], int(counts[i]))
            for i in range(counts.size) if counts[i] > 0]


def _run(brackets, solve, parallel: bool):
    if parallel and len(brackets) > 1:
        with ThreadPoolExecutor() as pool:
            parts = list(pool.map(solve, brackets))
    else:
        parts = [solve(b) for b in brackets]
    return [r for part in parts for r in part]


def solve_eigenvalues(d: SpectralDecomposition, upd: LowRankUpdate, tol: float | None = None,
                      method: str = "auto", parallel: bool = False,
                      confirm: bool = True) -> EigenvalueSolution:
    """Full pipeline up to the updated eigenvalues.

    ``method`` is one of ``auto``, ``rank1``, ``rank2`` or ``sturm``; ``auto``
    picks the rank-1 path for k = 1, the sign-based locator for k = 2 and
    the Sturm locator otherwise.
    """
    try:
        tu = transform_update(d, upd)
    except ValueError as exc:
        raise UpdateError("transform", str(exc)) from exc
    return solve_transformed(d.lam, tu.u, tu.signs, tol, method, parallel, confirm, basis=d.q)


def solve_transformed(lam, u, signs, tol: float | None = None, method: str = "auto",
                      parallel: bool = False, confirm: bool = True, basis=None) -> EigenvalueSolution:
    """Updated eigenvalues of ``diag(lam) + U J U^T``; see :func:`solve_eigenvalues`."""
    from symupdate import locate

    signs = np.asarray(signs, dtype=float)
    try:
        prob = deflate_problem(lam, u, signs, basis)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise UpdateError("secular", str(exc)) from exc
    c = prob.coeffs
    k = signs.size
    if method == "auto":
        method = {1: "rank1", 2: "rank2"}.get(k, "sturm")
    if c.size == 0:
        return EigenvalueSolution(prob, [], method)

    if method == "rank1":
        if k != 1:
            raise UpdateError("rootfind", "rank-1 path needs k = 1")
        roots = _rank1_active(c, signs[0], tol, parallel)
        return EigenvalueSolution(prob, sorted(roots, key=lambda r: r.value), method)

    lo, hi = _outer_bounds(c, float(np.sum(np.asarray(u, dtype=float) ** 2)))
    # rows that enter the secular function; zero-weight ones pin an eigenvalue
    # to their pole but still shape the determinant
    cand = np.flatnonzero(np.linalg.norm(prob.u, axis=1) > 0)
    lam_c, u_c = prob.lam[cand], prob.u[cand]
    if method == "rank2":
        if k != 2:
            raise UpdateError("locate", "rank-2 locator needs k = 2")
        kind = locate.shift_kind(signs)
        try:
            loc = locate.locate_rank2(c.weights, kind)
        except ValueError as exc:
            raise UpdateError("locate", str(exc)) from exc
        if confirm:
            loc = locate.confirm_pairs(c, loc)
    elif method == "sturm":
        try:
            loc = locate.locate_rank_k(c, max_per_interval=k)
        except UpdateError as exc:
            if exc.stage != "sturm":
                raise
            # the chain could not certify (typically poles split inside a
            # cluster); count from matrix inertia instead
            loc = locate.inertia_counts(lam_c, u_c, prob.signs, c)
    else:
        raise ValueError(f"unknown method {method!r}")
    brackets = _brackets_from_counts(c, loc.counts, lo, hi)
    # multi-root brackets are sampled until every root sits in its own
    # sign-change bracket; all single-root brackets are then bisected at once
    multi = [b for b in brackets if b.expected > 1]
    searched = _run(multi, lambda b: [(b, *_search(c, b.lo, b.hi, b.expected, tol))], parallel)
    ends = [(b.lo, b.hi) for b in brackets if b.expected == 1]
    roots = []
    for b, found, tangent in searched:
        if len(found) + 2 * len(tangent) == b.expected:
            ends.extend((x[0], x[1]) for x in found)
            for t in tangent:
                o = _nearest_pole(c, t)
                roots.extend([Root(o, t - o), Root(o, t - o)])
        else:
            # sampling could not separate the roots; slice by eigenvalue counts
            roots.extend(slice_roots(c, lam_c, u_c, prob.signs, b))
    a = [e[0] for e in ends]
    roots += refine_brackets(c, a, [e[1] for e in ends], _end_signs(c, a, +1), tol, _chunks(parallel))
    roots = polish_roots(c, lam_c, u_c, prob.signs, sorted(roots, key=lambda r: r.value), tol)
    return EigenvalueSolution(prob, roots, method)


def _rank1_active(c, sigma, tol, parallel):
    d = c.poles
    reach = float(np.sum(np.abs(c.weights))) * (1 + 1e-9) + 4 * EPS * max(1.0, abs(d[0]), abs(d[-1]))
    if sigma > 0:
        edges = np.concatenate([d, [d[-1] + reach]])
        s_lo = -1.0
    else:
        edges = np.concatenate([[d[0] - reach], d])
        s_lo = 1.0
    return refine_brackets(c, edges[:-1], edges[1:], np.full(d.size, s_lo), tol, _chunks(parallel))


def _chunks(parallel: bool) -> int:
    return max(2, os.cpu_count() or 1) if parallel else 1


def _outer_bounds(c: SecularCoefficients, k2: float):
    """Finite ends for the unbounded intervals.

    Roots lie within ``sum |alpha|`` of the outer poles, and within the
    Weyl bound ``||K||_F^2`` of the old spectrum; the tighter one is used.
    """
    from symupdate.sturm import root_bounds

    lo, hi = root_bounds(c)
    k2 = k2 * (1 + 1e-9)
    pad = 4 * EPS * max(1.0, abs(c.poles[0]), abs(c.poles[-1]))
    return max(lo, c.poles[0] - k2 - pad), min(hi, c.poles[-1] + k2 + pad)


def update_eigenvalues(d: SpectralDecomposition, upd: LowRankUpdate, tol: float | None = None,
                       method: str = "auto", parallel: bool = False) -> np.ndarray:
    """Ascending eigenvalues of ``Q diag(lam) Q^T + K J K^T``."""
    try:
        return solve_eigenvalues(d, upd, tol, method, parallel).values()
    except RepeatedEigenvalueError:
        if upd.k == 1:
            raise
        # splitting the update needs the intermediate eigenvectors
        from symupdate.eigvec import update_decomposition

        return update_decomposition(d, upd, tol, method, parallel).decomposition.lam
