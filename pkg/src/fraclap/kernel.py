"""Closed-form stiffness matrix of the 1D integral fractional Laplacian.

For piecewise-linear hat functions on a uniform mesh of ``(a, b)`` the
Galerkin matrix ``S_kj = ((-Δ)^{s/2} φ_j, (-Δ)^{s/2} φ_k)`` is a symmetric
Toeplitz matrix whose first row is ``A_s h^{1-2s} t_p`` with::

    t_p = |p-2|^α - 4|p-1|^α + 6 p^α - 4 (p+1)^α + (p+2)^α,   α = 3 - 2s
    A_s = 1 / (2 Γ(4-2s) cos(sπ))

Direct evaluation of ``t_p`` loses all accuracy for large ``p`` (an
``O(p^{-1-2s})`` difference of ``O(p^{3-2s})`` terms) and near ``s = 1/2``
(both ``t_p`` and ``cos(sπ)`` vanish).  Everything here is computed through
the reduced symbol ``t_p / (1-2s)``, which is smooth in ``s`` and obtained
either from an ``expm1`` rewrite (``p <= 2``) or from the convergent
binomial series in ``1/p`` (``p >= 3``).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConvergenceError, DomainError

#: Fourth-difference stencil generating ``t_p``.
STENCIL = (1.0, -4.0, 6.0, -4.0, 1.0)
S_MAX = 1.5

# p below this uses the expm1 form, p at or above it the series in 1/p
_SERIES_FROM = 3
_SERIES_RTOL = 1e-17
_SERIES_MAX_TERMS = 400
# |s - 1| below this is treated as the classical Laplacian
_UNIT_SNAP = 1e-9


def check_order(s, upper=S_MAX):
    """Raise :class:`DomainError` unless ``0 < s < upper``."""
    if not (0.0 < s < upper):
        raise DomainError(f"fractional order s={s!r} must lie in (0, {upper})")


@dataclass(frozen=True)
class KernelParams:
    """Fractional order and uniform mesh of ``(a, b)`` with ``N`` elements."""

    s: float
    N: int
    a: float = -1.0
    b: float = 1.0

    def __post_init__(self):
        check_order(self.s)
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"N={self.N!r} must be an integer >= 2")
        if not self.a < self.b:
            raise DomainError(f"empty interval ({self.a}, {self.b})")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.N

    @property
    def size(self) -> int:
        """Number of interior nodes, i.e. the matrix dimension."""
        return self.N - 1

    def nodes(self) -> np.ndarray:
        """Interior nodes ``x_1 .. x_{N-1}``."""
        return self.a + self.h * np.arange(1, self.N)

    def grid(self) -> np.ndarray:
        """All nodes ``x_0 .. x_N`` including the two endpoints."""
        return self.a + self.h * np.arange(self.N + 1)


@dataclass(frozen=True)
class ToeplitzSymbol:
    """Generating vector of the stiffness matrix.

    ``values`` holds ``t_p`` (``r_p`` on the ``half`` branch, the integer
    stencil ``2, -1, 0, ...`` on the ``unit`` branch) and ``scale`` the
    factor turning them into matrix entries.
    """

    values: np.ndarray
    scale: float
    branch: str
    entries: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.values)


def _relative_expm1(x):
    """``expm1(x)/x`` with the removable singularity filled in."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = x != 0.0
    out[nz] = np.expm1(x[nz]) / x[nz]
    return out


def _reduced_direct(s, p):
    # sum c_i m^2 ln(m) E((1-2s) ln m); the m^2 moments of the stencil vanish
    e = 1.0 - 2.0 * s
    out = np.zeros(p.shape)
    for c, i in zip(STENCIL, range(-2, 3)):
        m = np.abs(p + i).astype(float)
        logm = np.log(np.where(m > 0, m, 1.0))
        out += c * m * m * logm * _relative_expm1(e * logm)
    return out


def _reduced_series(s, p):
    alpha = 3.0 - 2.0 * s
    p = p.astype(float)
    inv2 = 1.0 / (p * p)
    base = p ** alpha
    # binomial(alpha, 2n) / (alpha - 2), starting at n = 2
    coef = alpha * (alpha - 1.0) * (alpha - 3.0) / 24.0
    acc = np.zeros_like(p)
    pow1 = inv2 * inv2
    pow4 = 16.0 * pow1
    for n in range(2, _SERIES_MAX_TERMS):
        term = coef * (2.0 * pow4 - 8.0 * pow1) * base
        acc += term
        if np.all(np.abs(term) <= _SERIES_RTOL * np.abs(acc)):
            return acc
        coef *= (alpha - 2 * n) * (alpha - 2 * n - 1) / ((2 * n + 1) * (2 * n + 2))
        pow1 = pow1 * inv2
        pow4 = pow4 * 4.0 * inv2
    raise ConvergenceError("series for t_p did not converge", iterations=n)


def reduced_symbol(s, p):
    """``t_p / (1 - 2s)``, finite and accurate for every ``s`` in ``(0, 3/2)``.

    At ``s = 1/2`` this equals ``sum c_i (p+i)^2 ln|p+i|``.
    """
    p = np.atleast_1d(np.asarray(p))
    if np.any(p < 0):
        raise DomainError("p must be nonnegative")
    out = np.empty(p.shape)
    near = p < _SERIES_FROM
    if np.any(near):
        out[near] = _reduced_direct(s, p[near])
    if np.any(~near):
        out[~near] = _reduced_series(s, p[~near])
    return out


def _squeeze(values, like):
    return float(values[0]) if np.ndim(like) == 0 else values


def symbol_t(s, p):
    """Toeplitz symbol ``t_p`` for ``s != 1/2`` (scalar or array ``p``)."""
    check_order(s)
    if s == 0.5:
        raise DomainError("t_p/cos(sπ) is 0/0 at s=1/2; use symbol_half")
    return _squeeze((1.0 - 2.0 * s) * reduced_symbol(s, p), p)


def _cos_pi(s):
    # cos(sπ) = -sin((s - 1/2)π); s - 1/2 is exact, so this keeps full
    # relative accuracy as s -> 1/2
    return -math.sin(math.pi * (s - 0.5))


def scale_As(s):
    """``A_s = 1 / (2 Γ(4-2s) cos(sπ))``."""
    check_order(s)
    if s == 0.5:
        raise DomainError("A_s has a pole at s=1/2")
    return 1.0 / (2.0 * math.gamma(4.0 - 2.0 * s) * _cos_pi(s))


def symbol_half(p):
    """Entries at ``s = 1/2``: ``r_p = (1/2π) Σ c_i (p+i)^2 ln|p+i|``."""
    return _squeeze(reduced_symbol(0.5, p) / (2.0 * math.pi), p)


def stiffness_first_row(params: KernelParams) -> ToeplitzSymbol:
    """First row (= first column) of the stiffness matrix for ``params``."""
    s, h, m = params.s, params.h, params.size
    p = np.arange(m)
    if abs(s - 1.0) < _UNIT_SNAP:
        values = np.zeros(m)
        values[0] = 2.0
        if m > 1:
            values[1] = -1.0
        return ToeplitzSymbol(values, 1.0 / h, "unit", values / h)
    if s == 0.5:
        values = symbol_half(p)
        return ToeplitzSymbol(values, 1.0, "half", values.copy())
    scale = scale_As(s) * h ** (1.0 - 2.0 * s)
    values = (1.0 - 2.0 * s) * reduced_symbol(s, p)
    return ToeplitzSymbol(values, scale, "generic", scale * values)


def stiffness_operator(params: KernelParams):
    """The stiffness matrix as a :class:`~fraclap.toeplitz.SymmetricToeplitz`."""
    from .toeplitz import SymmetricToeplitz

    return SymmetricToeplitz(stiffness_first_row(params).entries)


def normalization_constant(s):
    """``C_s`` of the singular-integral definition, for ``s`` in ``(0, 1)``."""
    check_order(s, upper=1.0)
    return (2.0 ** (2 * s) * s * math.gamma(s + 0.5)
            / (math.sqrt(math.pi) * math.gamma(1.0 - s)))


def oracle_entry(params: KernelParams, k, j, rel_tol=1e-10, cutoff=200.0,
                 abs_floor=1e-13):
    """Entry ``S_kj`` by numerical quadrature in frequency space.

    Integrates ``4/(π h^{2s-1}) ∫_0^∞ y^{2s-4} cos(py) (1 - cos y)^2 dy``
    adaptively on ``(0, cutoff]``; the tail is split into its five cosine
    harmonics and handled by a Fourier-integral rule (the zero harmonic
    analytically).  ``abs_floor`` is the roundoff level of the rescaled
    integral, below which relative accuracy cannot be demanded.  Meant as an independent check of
    :func:`stiffness_first_row`, never for production use.
    """
    from scipy import integrate

    s, h = params.s, params.h
    if not (1 <= k <= params.size and 1 <= j <= params.size):
        raise DomainError(f"indices ({k}, {j}) outside 1..{params.size}")
    p = abs(k - j)
    power = 2.0 * s - 4.0

    def integrand(y):
        return y ** power * 4.0 * math.sin(0.5 * y) ** 4 * math.cos(p * y)

    chunk = min(1.0, math.pi / (p + 2))
    edges = np.append(np.arange(0.0, cutoff, chunk), cutoff)
    value = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            v, e = integrate.quad(integrand, lo, hi, epsabs=1e-16, epsrel=1e-13,
                                  limit=200)
            value += v
            err += e

    for c, i in zip(STENCIL, range(-2, 3)):
        m = abs(p + i)
        if m == 0:
            value += 0.25 * c * cutoff ** (power + 1.0) / (3.0 - 2.0 * s)
            continue
        v, e = _cosine_tail(power, m, cutoff)
        value += 0.25 * c * v
        err += 0.25 * abs(c) * e

    if err > rel_tol * abs(value) + abs_floor:
        raise ConvergenceError(
            f"quadrature error estimate {err:.3e} exceeds tolerance for |k-j|={p}",
            residual=err)
    return 4.0 / (math.pi * h ** (2.0 * s - 1.0)) * value


def _cosine_tail(beta, m, y0):
    """``∫_{y0}^∞ y^beta cos(m y) dy`` for ``beta < -1/2``.

    Two integrations by parts are done in closed form so that the remaining
    Fourier integral decays like ``y^{beta-2}``.
    """
    from scipy import integrate

    sin0, cos0 = math.sin(m * y0), math.cos(m * y0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        rest, err = integrate.quad(lambda y: y ** (beta - 2.0), y0, np.inf,
                                   weight="cos", wvar=m, epsabs=1e-16, limlst=200)
    value = (-y0 ** beta * sin0 / m
             - beta / m * (y0 ** (beta - 1.0) * cos0 / m + (beta - 1.0) / m * rest))
    return value, abs(beta * (beta - 1.0)) / (m * m) * err
