"""Modified Sturm chain carried in secular form.

Each chain member is stored as ``p_m(x) = f_m(x) * pi_m(x)`` with
``f_m(x) = c_m - sum_j alpha_j / (x - d_j)`` and ``pi_m`` the product over
the remaining poles. Every division step drops the largest pole.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from symupdate.core import UpdateError
from symupdate.secular import SecularCoefficients, eval_secular

# a step whose leading constant falls below this fraction of its own size
# marks the end of the usable chain
TERMINATE_RTOL = 1e-10
# relative cancellation tolerated when forming c_m before the chain is
# considered to have lost its sign information
CANCEL_RTOL = 1e-6
# largest relative residual of the three-term identity a step may show at
# the check points before it is judged too inaccurate to count with
IDENTITY_RTOL = 1e-10
# number of check points spread over (and just beyond) the pole range
CHECK_POINTS = 16


@dataclass(frozen=True)
class SturmStep:
    m: int
    c: float
    weights: np.ndarray
    poles: np.ndarray
    # recurrence data: p_m = (-p_{m-2} + a (x - b) p_{m-1}) / scale
    a: float | None = None
    b: float | None = None
    scale: float = 1.0
    cancellation: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        diff = x[..., None] - self.poles
        f = self.c - np.sum(self.weights / diff, axis=-1)
        return f * np.prod(diff, axis=-1)

    def secular(self, x):
        x = np.asarray(x, dtype=float)
        return self.c - np.sum(self.weights / (x[..., None] - self.poles), axis=-1)

    def magnitude(self) -> float:
        if self.poles.size == 0:
            return abs(self.c)
        spread = max(self.poles[-1] - self.poles[0], np.max(np.abs(self.poles)), 1e-300)
        return abs(self.c) + float(np.sum(np.abs(self.weights))) / spread


@dataclass
class SturmChain:
    steps: list = field(default_factory=list)
    complete: bool = False

    @property
    def npoles(self) -> int:
        return self.steps[0].poles.size

    @property
    def leading(self) -> np.ndarray:
        return np.array([s.c for s in self.steps])


@dataclass
class RootCount:
    """Per-interval root counts over the poles of the counted function.

    ``counts[i]`` covers ``(poles[i-1], poles[i]]`` with ``poles[-1] = -inf`` and
    ``poles[n] = +inf``. ``found`` lists roots located along the way and
    ``rounds`` the number of chains built.
    """

    counts: np.ndarray
    found: np.ndarray
    rounds: int
    chains: list

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def chain_start(c0: SecularCoefficients):
    """Steps 0 and 1: ``p_0 = f_0 pi_0`` and its derivative."""
    if c0.leading != 1.0:
        raise ValueError("chain must start from a secular function with leading constant 1")
    d, a = c0.poles, c0.weights
    n = d.size
    step0 = SturmStep(0, 1.0, a.copy(), d.copy())
    if n == 0:
        raise ValueError("constant secular function has no derivative step")
    if n == 1:
        return step0, SturmStep(1, 1.0, np.empty(0), np.empty(0))
    diff = d[:, None] - d[None, :]
    np.fill_diagonal(diff, 1.0)
    terms = (a[:, None] + a[None, :]) / diff
    np.fill_diagonal(terms, 0.0)
    mu = 1.0 - terms.sum(axis=1)
    # sum(mu) is n exactly: the double sum is antisymmetric
    c1 = float(n)
    step1 = SturmStep(1, c1, (d[-1] - d[:-1]) * mu[:-1], d[:-1].copy())
    return step0, step1


def long_division(prev2: SturmStep, prev1: SturmStep, eps_c: float = 0.0):
    """Next chain member ``-p_{m-2} + A (x - B) p_{m-1}``, or None if ``c_{m-1}`` is too small.

    The residues at the remaining poles follow from evaluating the three
    term identity at each pole; ``c_m`` from evaluating it at the pole
    being dropped.
    """
    if prev1.poles.size == 0:
        raise ValueError("previous step is already constant")
    if prev2.poles.size != prev1.poles.size + 1:
        raise ValueError("steps must differ by exactly one pole")
    if abs(prev1.c) <= eps_c:
        return None
    c2, c1 = prev2.c, prev1.c
    a2, a1 = prev2.weights, prev1.weights
    e2, e1 = prev2.poles[-1], prev1.poles[-1]
    amul = c2 / c1
    s2, s1 = a2.sum() / c2, a1.sum() / c1
    bshift = e2 + s2 - s1
    d = prev1.poles[:-1]
    de1 = d - e1
    weights = amul * (d - bshift) * de1 * a1[:-1] - de1 * (d - e2) * a2[:-2]
    t0 = weights / (e1 - d)
    t1 = a2[-2] * (e1 - e2)
    t2 = amul * (e1 - bshift) * a1[-1]
    c = float(np.sum(t0) + t1 - t2)
    size = float(np.sum(np.abs(t0)) + abs(t1) + abs(t2))
    size += abs(amul * a1[-1]) * (abs(e2) + abs(s2) + abs(s1) + abs(e1))
    cancel = size / abs(c) if c != 0 else np.inf
    return SturmStep(prev1.m + 1, c, weights, d.copy(), amul, bshift, 1.0, cancel)


def _normalized(step: SturmStep) -> SturmStep:
    s = step.magnitude()
    if s == 0 or not np.isfinite(s):
        return step
    return SturmStep(step.m, step.c / s, step.weights / s, step.poles, step.a, step.b, s,
                     step.cancellation)


def _check_points(d: np.ndarray) -> np.ndarray:
    """Chebyshev-spaced points over the pole range widened by a pole gap on each side."""
    width = max(d[-1] - d[0], 1e-300)
    pad = width / max(d.size, 1)
    t = np.cos(np.pi * (np.arange(CHECK_POINTS) + 0.5) / CHECK_POINTS)
    return 0.5 * (d[0] + d[-1]) + (0.5 * width + pad) * t


def identity_residual(prev2: SturmStep, prev1: SturmStep, step: SturmStep, x) -> np.ndarray:
    """Relative residual of ``scale p_m = -p_{m-2} + A (x - B) p_{m-1}`` at the points ``x``.

    All three members are divided by the product over the poles of ``p_m``,
    so the check never forms products over many poles.
    """
    x = np.asarray(x, dtype=float)
    e1 = prev1.poles[-1]
    e2 = prev2.poles[-1]
    v2 = prev2.secular(x) * (x - e1) * (x - e2)
    v1 = step.a * (x - step.b) * prev1.secular(x) * (x - e1)
    v0 = step.secular(x) * step.scale
    size = np.abs(v2) + np.abs(v1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(size > 0, np.abs(v0 - (v1 - v2)) / size, 0.0)


def build_chain(c0: SecularCoefficients) -> SturmChain:
    """Chain from ``p_0`` down to a constant, stopping at the first unusable step.

    Steps are rescaled by positive factors as they are produced (sign
    counts are unchanged). A step is unusable when its leading constant is
    not clearly positive, was formed under heavy cancellation, or no longer
    satisfies the division identity at the check points; the chain then
    ends before it and ``complete`` is False.
    """
    if c0.size == 0:
        return SturmChain([SturmStep(0, 1.0, np.empty(0), np.empty(0))], True)
    s0, s1 = chain_start(c0)
    steps = [s0, s1]
    n = c0.size
    xs = _check_points(c0.poles)
    xs = xs[np.min(np.abs(xs[:, None] - c0.poles[None, :]), axis=1) > 0]
    while len(steps) <= n:
        nxt = long_division(steps[-2], steps[-1])
        if nxt is None:
            break
        nxt = _normalized(nxt)
        mag = nxt.magnitude()
        if not (nxt.c > TERMINATE_RTOL * mag) or nxt.cancellation * np.finfo(float).eps > CANCEL_RTOL:
            break
        if np.max(identity_residual(steps[-2], steps[-1], nxt, xs), initial=0.0) > IDENTITY_RTOL:
            break
        steps.append(nxt)
    return SturmChain(steps, len(steps) == n + 1)


def step_signs(step: SturmStep, x: np.ndarray) -> np.ndarray:
    """sign(p_m(x)) for an array of points; exact pole hits use the residue."""
    x = np.asarray(x, dtype=float)
    if step.poles.size == 0:
        return np.full(x.shape, np.sign(step.c))
    diff = x[:, None] - step.poles[None, :]
    hit = diff == 0
    safe = np.where(hit, np.inf, diff)
    f = step.c - np.sum(step.weights / safe, axis=1)
    above = np.sum(step.poles[None, :] > x[:, None], axis=1)
    parity = np.where(above % 2 == 0, 1.0, -1.0)
    if np.any(hit):
        rows, cols = np.nonzero(hit)
        f = f.copy()
        f[rows] = -step.weights[cols]
    return np.sign(f) * parity


def _variations(signs: np.ndarray) -> np.ndarray:
    """Sign changes along axis 0, zeros skipped. ``signs`` is (steps, points)."""
    out = np.zeros(signs.shape[1], dtype=int)
    last = np.zeros(signs.shape[1])
    for row in signs:
        nz = row != 0
        out += (nz & (last != 0) & (row != last)).astype(int)
        last = np.where(nz, row, last)
    return out


def variations(chain: SturmChain, x) -> np.ndarray:
    """V(x) for finite points ``x`` (array)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return _variations(np.array([step_signs(s, x) for s in chain.steps]))


def variations_at_infinity(chain: SturmChain):
    plus = np.array([[np.sign(s.c)] for s in chain.steps])
    minus = np.array([[np.sign(s.c) * (-1) ** s.poles.size] for s in chain.steps])
    return int(_variations(minus)[0]), int(_variations(plus)[0])


def count_roots(chain: SturmChain, a: float, b: float):
    """Roots of ``p_0`` in ``(a, b]`` as ``V(a) - V(b)``; infinite ends allowed.

    Returns ``(count, certified)``; a partial chain gives an uncertified
    value (over the whole line it is a lower bound).
    """
    if not a < b:
        raise ValueError("need a < b")
    vm, vp = variations_at_infinity(chain)
    finite = [x for x in (a, b) if np.isfinite(x)]
    vals = dict(zip(finite, variations(chain, finite))) if finite else {}
    va = vm if a == -np.inf else vals[a]
    vb = vp if b == np.inf else vals[b]
    return int(va - vb), chain.complete


def grid_counts(chain: SturmChain, grid) -> np.ndarray:
    """Counts over ``(-inf, g0], (g0, g1], ..., (g_last, inf)``."""
    grid = np.asarray(grid, dtype=float)
    vm, vp = variations_at_infinity(chain)
    v = np.concatenate([[vm], variations(chain, grid) if grid.size else [], [vp]])
    return (v[:-1] - v[1:]).astype(int)


def deflate(c0: SecularCoefficients, roots, pairing: str = "first") -> SecularCoefficients:
    """Remove known roots: ``p_0(x) / prod_s (x - xi_s)`` in secular form.

    One pole drops out per root and the remaining weights become
    ``beta_j = alpha_j * prod_s (d_j - d_{pair(s)}) / (d_j - xi_s)``.
    ``pairing="first"`` drops the lowest poles; ``"nearest"`` pairs each
    root with its closest unused pole, which keeps the factors near one
    and is what the restart loop uses.
    """
    if pairing not in ("first", "nearest"):
        raise ValueError(f"unknown pairing {pairing!r}")
    roots = np.sort(np.asarray(roots, dtype=float).reshape(-1))
    if roots.size == 0:
        return c0
    d = c0.poles
    if roots.size > d.size:
        raise ValueError("more roots than poles")
    width = max(1.0, float(np.max(np.abs(d))))
    dist = np.abs(roots[:, None] - d[None, :])
    if np.any(dist <= 1e-12 * width):
        raise ValueError("root coincides with a pole")
    free = np.ones(d.size, dtype=bool)
    pair = np.empty(roots.size, dtype=int)
    if pairing == "first":
        pair[:] = np.arange(roots.size)
        free[: roots.size] = False
    for s in np.argsort(dist.min(axis=1)) if pairing == "nearest" else ():
        cand = np.where(free, dist[s], np.inf)
        pair[s] = int(np.argmin(cand))
        free[pair[s]] = False
    keep = np.flatnonzero(free)
    dk = d[keep]
    factor = np.prod((dk[:, None] - d[pair][None, :]) / (dk[:, None] - roots[None, :]), axis=1)
    index = keep if c0.index is None else c0.index[keep]
    return SecularCoefficients(dk, c0.weights[keep] * factor, c0.leading, index)


def interval_parity(c: SecularCoefficients) -> np.ndarray:
    """1 where the interval between consecutive poles must hold an odd number of roots."""
    w = c.weights
    if w.size == 0:
        return np.zeros(1, dtype=int)
    inner = (w[:-1] * w[1:] > 0).astype(int)
    return np.concatenate([[int(w[0] < 0)], inner, [int(w[-1] > 0)]])


def root_bounds(c: SecularCoefficients):
    """All roots lie in ``[d_1 - W, d_n + W]`` with ``W = sum |alpha|``."""
    if c.size == 0:
        return -np.inf, np.inf
    w = float(np.sum(np.abs(c.weights)))
    pad = w * (1 + 1e-9) + 1e-300 + 4 * np.finfo(float).eps * max(1.0, abs(c.poles[0]), abs(c.poles[-1]))
    return c.poles[0] - pad, c.poles[-1] + pad


def _consistent(c: SecularCoefficients, counts: np.ndarray, max_per_interval=None) -> bool:
    if np.any(counts < 0) or counts.sum() != c.size:
        return False
    if np.any(counts % 2 != interval_parity(c)):
        return False
    if max_per_interval is not None and np.any(counts > max_per_interval):
        return False
    return True


def count_all_roots(c0: SecularCoefficients, max_per_interval=None, tol=None) -> RootCount:
    """Locate every root of ``f_0`` by Sturm chains with deflation restarts.

    A chain that reaches the constant term and is consistent with the
    interval parities fixes the counts outright. Otherwise roots that a
    sign change certifies are solved for, deflated away, and the chain is
    rebuilt on the smaller function.
    """
    from symupdate.rootfind import _end_signs, refine_brackets, search_roots

    grid = c0.poles
    current = SecularCoefficients(c0.poles, c0.weights, 1.0, np.arange(c0.size))
    found: list[float] = []
    chains = []
    lo_all, hi_all = root_bounds(c0)
    for rnd in range(c0.size + 1):
        if current.size == 0:
            counts = np.zeros(grid.size + 1, dtype=int)
            break
        chain = build_chain(current)
        chains.append(chain)
        if chain.complete:
            own = grid_counts(chain, current.poles)
            if _consistent(current, own, max_per_interval if rnd == 0 else None):
                counts = grid_counts(chain, grid)
                if counts.sum() == current.size:
                    break
        lo, hi = root_bounds(current)
        lo, hi = max(lo, lo_all), min(hi, hi_all)
        edges = np.concatenate([[lo], current.poles, [hi]])
        parity = interval_parity(current)
        # an odd interval holds at least one root, bracketed by its end signs
        odd = np.flatnonzero(parity)
        a = edges[odd]
        new = [r.value for r in refine_brackets(current, a, edges[odd + 1],
                                                _end_signs(current, a, +1), tol)]
        if not new:
            # only pairs are left: look where the (possibly partial) chain
            # points first, then anywhere
            hint = grid_counts(chain, current.poles)
            for group in (np.flatnonzero(hint >= 1), np.flatnonzero(hint == 0)):
                for i in group:
                    new.extend(search_roots(current, edges[i], edges[i + 1], 2, tol))
                if new:
                    break
        if not new:
            raise UpdateError("sturm", f"no certified roots in round {rnd} "
                                       f"({current.size} roots unaccounted)", partial=np.sort(found))
        found.extend(new)
        current = deflate(current, new, pairing="nearest")
    else:
        raise UpdateError("sturm", "restart cap exceeded", partial=np.sort(found))
    found_arr = np.sort(np.asarray(found))
    if found_arr.size:
        counts = counts + np.bincount(np.searchsorted(grid, found_arr, side="left"),
                                      minlength=grid.size + 1)
    return RootCount(counts, found_arr, len(chains), chains)
