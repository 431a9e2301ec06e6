"""Diagonal dominance of the fractional stiffness matrix.

The row deficit ``d_k = S_kk - sum_{j != k} |S_kj|`` decides strict
dominance.  Its behaviour splits on the sign of ``t_1(s)``, which vanishes
at ``s_0 ~ 0.2347``:

* ``s in [s_0, 1]``: every ``d_k > 0``;
* ``s in (0, s_0)``: dominance holds only up to a size ``N_0(s)``;
* ``s in (1, 3/2)``: only the first and last rows are dominant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import ConvergenceError, DomainError
from .kernel import (
    KernelParams, check_order, scale_As, stiffness_first_row, symbol_t,
)

S0_TOL = 1e-10
N_CAP = 10**6
# G_q below this index is summed directly, at or above it by its series
_SERIES_FROM = 3
_SERIES_MAX_TERMS = 400

REGIMES = ("strict_dd", "conditional_dd", "interior_non_dd")


def t1_of(s):
    """``t_1(s) = 7 + 3^{3-2s} - 2^{5-2s}``."""
    return 7.0 + 3.0 ** (3.0 - 2.0 * s) - 2.0 ** (5.0 - 2.0 * s)


def s_star():
    """Minimiser of ``t_1`` on ``(0, 3/2)``, in closed form."""
    ln2, ln3 = math.log(2.0), math.log(3.0)
    return 1.5 - (math.log(8.0 * ln2) - math.log(2.0 * ln3)) / (2.0 * (ln3 - ln2))


@lru_cache(maxsize=None)
def find_s0(tol=S0_TOL):
    """Root of ``t_1`` in ``(0, s*)`` by bisection to bracket width ``tol``."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    lo, hi = 0.0, s_star()
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if t1_of(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def row_deficits(params: KernelParams) -> np.ndarray:
    """``d_1 .. d_{N-1}`` from the scaled first row."""
    e = np.abs(stiffness_first_row(params).entries)
    m = params.size
    # csum[j] = sum_{p=1}^{j} |S_{k,k+p}|
    csum = np.concatenate(([0.0], np.cumsum(e[1:])))
    k = np.arange(1, m + 1)
    return e[0] - csum[k - 1] - csum[m - k]


def _check_generic(s):
    check_order(s)
    if s == 0.5 or s == 1.0:
        raise DomainError(f"partial sums are degenerate at s={s}")


def _g_direct(alpha, q):
    f = lambda x: float(x) ** alpha
    return f(q - 1) - 3.0 * f(q) + 3.0 * f(q + 1) - f(q + 2)


def _g_series(alpha, q):
    # expansion about c = q + 1/2; only odd powers k >= 3 survive, all of
    # one sign for alpha in (0, 3)
    c = q + 0.5
    coef = alpha * (alpha - 1.0) * (alpha - 2.0) / 6.0
    x = 1.0 / c
    xk = x ** 3
    a32, a12 = 1.5 ** 3, 0.5 ** 3
    acc = 0.0
    for k in range(3, 2 * _SERIES_MAX_TERMS, 2):
        term = coef * (a32 - 3.0 * a12) * xk
        acc += term
        if abs(term) <= 1e-17 * abs(acc):
            return -2.0 * c ** alpha * acc
        coef *= (alpha - k) * (alpha - k - 1.0) / ((k + 1.0) * (k + 2.0))
        xk *= x * x
        a32 *= 2.25
        a12 *= 0.25
    raise ConvergenceError("series for G_q did not converge", iterations=k)


def g_q(s, q):
    """Third difference ``f_{q-1} - 3f_q + 3f_{q+1} - f_{q+2}``, ``f_q = q^{3-2s}``."""
    alpha = 3.0 - 2.0 * s
    if q < 1:
        raise DomainError("q must be >= 1")
    return _g_direct(alpha, q) if q < _SERIES_FROM else _g_series(alpha, q)


def partial_abs_sum(s, m):
    """``sum_{p=2}^m |t_p|`` via the telescoped form ``±(G_1 - G_m)``."""
    _check_generic(s)
    if m < 2:
        raise DomainError("m must be >= 2")
    diff = g_q(s, 1) - g_q(s, m)
    # t_p (p >= 2) is positive for s in (1/2, 1) and negative otherwise
    return diff if 0.5 < s < 1.0 else -diff


def _mid_deficit(s, N):
    """Unscaled ``d_{floor(N/2)}`` (sign is all that matters)."""
    k = N // 2
    left, right = k - 1, N - 1 - k
    t0 = abs(symbol_t(s, 0))
    t1 = abs(t1_of(s))

    def side(m):
        if m <= 0:
            return 0.0
        return t1 + (partial_abs_sum(s, m) if m >= 2 else 0.0)

    return t0 - side(left) - side(right)


def _check_conditional(s):
    check_order(s)
    if not s < find_s0():
        raise DomainError(f"s={s} is not in (0, s0={find_s0():.6f})")


def n0_formula(s):
    """Sufficient size bound ``floor(2 (gamma(s)/t_1(s))^{1/(2s)})``."""
    _check_conditional(s)
    gam = (1.0 - 2.0 * s) * (1.0 - s) * (3.0 - 2.0 * s)
    return int(math.floor(2.0 * (gam / t1_of(s)) ** (1.0 / (2.0 * s))))


@lru_cache(maxsize=None)
def n0_exact(s, cap=N_CAP):
    """Largest ``N`` for which the stiffness matrix is strictly dominant.

    Uses the sign of the middle-row deficit, which is the smallest one, and
    brackets geometrically before bisecting on ``N``.
    """
    _check_conditional(s)
    lo = 4
    if _mid_deficit(s, lo) <= 0:
        raise DomainError(f"no dominant size found for s={s}")
    hi = lo
    while _mid_deficit(s, hi) > 0:
        lo = hi
        hi *= 2
        if hi > cap:
            raise ConvergenceError(f"N0 search for s={s} exceeded N={cap}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _mid_deficit(s, mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class DominanceReport:
    s: float
    N: int
    deficits: np.ndarray
    regime: str
    n0_formula: int | None = None
    n0_exact: int | None = None

    @property
    def min_deficit(self):
        return float(self.deficits.min())

    @property
    def argmin_k(self):
        """1-based row index of the smallest deficit."""
        return int(np.argmin(self.deficits)) + 1

    @property
    def strictly_dominant(self):
        return bool(np.all(self.deficits > 0))

    def as_dict(self):
        return {"s": self.s, "N": self.N, "regime": self.regime,
                "min_deficit": self.min_deficit, "argmin_k": self.argmin_k,
                "n0_formula": self.n0_formula, "n0_exact": self.n0_exact}


def regime_of(s, s0=None):
    """Regime label by order alone.

    ``strict_dd`` covers ``[s0, 1]``; at ``s = 1`` the interior deficits are
    exactly zero (tridiagonal ``{2, -1}``), so only the end rows are strict
    there.  ``DominanceReport.strictly_dominant`` reports the actual matrix.
    """
    check_order(s)
    s0 = find_s0() if s0 is None else s0
    if s < s0:
        return "conditional_dd"
    if s <= 1.0:
        return "strict_dd"
    return "interior_non_dd"


def classify(params: KernelParams, s0=None) -> DominanceReport:
    regime = regime_of(params.s, s0)
    nf = ne = None
    if regime == "conditional_dd":
        nf, ne = n0_formula(params.s), n0_exact(params.s)
    return DominanceReport(params.s, params.N, row_deficits(params), regime, nf, ne)


def sufficient_shift(params: KernelParams):
    """A diagonal shift ``r`` making ``S + r I`` strictly dominant.

    For ``s < s_0`` every deficit exceeds ``-4 A_s t_1 h^{1-2s}``, so that
    magnitude suffices; elsewhere no shift is needed below ``s = 1``.
    """
    s, h = params.s, params.h
    if s < find_s0():
        return 4.0 * scale_As(s) * t1_of(s) * h ** (1.0 - 2.0 * s)
    if s <= 1.0:
        return 0.0
    raise DomainError("a diagonal shift cannot restore dominance for s > 1 at all sizes")


def stabilized_first_row(params: KernelParams, shift=None):
    """First row of ``S + shift I`` (``shift`` defaults to :func:`sufficient_shift`)."""
    row = stiffness_first_row(params).entries.copy()
    row[0] += sufficient_shift(params) if shift is None else shift
    return row
