"""Where do the updated eigenvalues fall among the old ones?"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from symupdate.core import UpdateError
from symupdate.secular import SecularCoefficients
from symupdate.sturm import build_chain, count_all_roots, count_roots


@dataclass(frozen=True)
class LocationVector:
    """``counts[i]`` roots in ``(lam_i, lam_{i+1})``, ``lam_0 = -inf``, ``lam_{n+1} = +inf``."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=int)
        if np.any(counts < 0):
            raise ValueError("negative root count")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


class ShiftKind(enum.Enum):
    DOUBLE_RIGHT = "double_right"
    DOUBLE_LEFT = "double_left"
    MIXED = "mixed"


def shift_kind(signs) -> ShiftKind:
    signs = np.asarray(signs)
    if signs.size != 2:
        raise ValueError("shift kinds are defined for rank-2 signatures")
    if np.all(signs > 0):
        return ShiftKind.DOUBLE_RIGHT
    if np.all(signs < 0):
        return ShiftKind.DOUBLE_LEFT
    return ShiftKind.MIXED


def _scan(alpha: np.ndarray, first: int, slack: int) -> np.ndarray:
    """Left-to-right scan shared by the rank-2 locators.

    An interval whose end weights agree in sign holds one root. Otherwise it
    holds none or two; two are forced when the roots placed so far fall
    short of what interlacing requires below the interval's right end
    (``slack`` is how far above its own index an eigenvalue may sit).
    """
    n = alpha.size
    counts = np.zeros(n + 1, dtype=int)
    counts[0] = first
    placed = first
    for i in range(1, n):
        if alpha[i - 1] * alpha[i] > 0:
            counts[i] = 1
            placed += 1
        elif placed + 2 > i + slack:
            counts[i] = 0
        else:
            counts[i] = 2
            placed += 2
    counts[n] = n - placed
    if not 0 <= counts[n] <= 2:
        raise ValueError(f"inconsistent rank-2 location: {counts[n]} roots left for the last interval")
    return counts


def locate_rank2(alpha, kind: ShiftKind) -> LocationVector:
    """Location vector of a rank-2 update from the signs of its secular weights."""
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha == 0):
        raise ValueError("zero weights must be deflated before locating")
    if alpha.size == 0:
        return LocationVector(np.zeros(1, dtype=int))
    kind = ShiftKind(kind)
    if kind is ShiftKind.DOUBLE_RIGHT:
        counts = _scan(alpha, 0, 0)
    elif kind is ShiftKind.DOUBLE_LEFT:
        # x -> -x turns a left shift into a right shift with weights -alpha reversed
        counts = _scan(-alpha[::-1], 0, 0)[::-1]
    else:
        counts = _scan(alpha, 0 if alpha[0] > 0 else 1, 1)
    return LocationVector(counts)


def interlacing_bounds(index: int, lam, rank: int, signs):
    """Courant-Weyl window ``(lo, hi)`` for the ``index``-th (1-based) updated eigenvalue.

    With ``p`` positive and ``q`` negative terms, ``lam_{index-q} <= new <= lam_{index+p}``;
    indices past either end map to infinities.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    if not 1 <= index <= n:
        raise ValueError(f"index {index} outside 1..{n}")
    signs = np.asarray(signs)
    if signs.size != rank:
        raise ValueError("one sign per rank expected")
    p = int(np.sum(signs > 0))
    q = rank - p
    lo_i, hi_i = index - q, index + p
    lo = lam[lo_i - 1] if lo_i >= 1 else -np.inf
    hi = lam[hi_i - 1] if hi_i <= n else np.inf
    return lo, hi


def locate_rank_k(c0: SecularCoefficients, max_per_interval=None) -> LocationVector:
    try:
        res = count_all_roots(c0, max_per_interval=max_per_interval)
    except UpdateError:
        raise
    except ValueError as exc:
        raise UpdateError("sturm", str(exc)) from exc
    return LocationVector(res.counts)


def count_below(lam, u, signs, x: float) -> int:
    """Number of eigenvalues of ``diag(lam) + U J U^T`` below ``x``, from matrix inertia.

    With the bordered matrix ``[[Lambda - x, U], [U^T, -J]]`` two Schur
    complements give ``#eig < x = #(lam < x) + neg(B) - #(J > 0)``, where
    ``B`` is the block left after eliminating every row whose pole differs
    from ``x``. Unlike a chain this is indifferent to how close poles are.
    """
    k = signs.size
    on = lam == x
    diff = lam[~on] - x
    uo = u[~on]
    w = u[on]
    r = w.shape[0]
    b = np.zeros((r + k, r + k))
    b[:r, r:] = w
    b[r:, :r] = w.T
    b[r:, r:] = -np.diag(signs) - uo.T @ (uo / diff[:, None])
    ev = np.linalg.eigvalsh(b)
    return int(np.sum(diff < 0)) + int(np.sum(ev < 0)) - int(np.sum(signs > 0))


def inertia_counts(lam, u, signs, c: SecularCoefficients) -> LocationVector:
    """Roots of ``c`` per pole interval, counted with :func:`count_below`.

    ``lam``/``u``/``signs`` describe the matrix whose secular function is
    ``c``; its poles are a subset of ``lam``. Eigenvalues pinned to poles
    outside ``c`` (rows with zero weight) are subtracted per interval.
    """
    lam = np.asarray(lam, dtype=float)
    u = np.asarray(u, dtype=float)
    signs = np.asarray(signs, dtype=float)
    d = c.poles
    below = np.array([count_below(lam, u, signs, x) for x in d], dtype=int)
    edges = np.concatenate([[-np.inf], d, [np.inf]])
    pinned = np.histogram(lam[~np.isin(lam, d)], bins=edges)[0]
    counts = np.diff(np.concatenate([[0], below, [lam.size]])) - pinned
    if np.any(counts < 0) or counts.sum() != d.size:
        raise UpdateError("locate", f"inertia counts {counts.tolist()} do not add up to {d.size}")
    return LocationVector(counts)


def confirm_pairs(c: SecularCoefficients, loc: LocationVector) -> LocationVector:
    """Cross-check the two-root intervals of a rank-2 location with a Sturm count.

    Only a complete chain is trusted; otherwise the check is left to the
    zero finder, which fails loudly if it cannot find both roots.
    """
    pairs = np.flatnonzero(loc.counts == 2)
    if pairs.size == 0:
        return loc
    chain = build_chain(c)
    if not chain.complete:
        return loc
    edges = np.concatenate([[-np.inf], c.poles, [np.inf]])
    for i in pairs:
        got, _ = count_roots(chain, edges[i], edges[i + 1])
        if got != 2:
            raise UpdateError("locate", f"interval {i}: sign scan says 2 roots, Sturm count says {got}")
    return loc
