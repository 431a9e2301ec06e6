"""Gamma, Jacobi polynomials and Kummer's confluent hypergeometric function."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, DomainError

_KUMMER_MAX_TERMS = 5000
_KUMMER_RTOL = 1e-17


def gamma_fn(x):
    """Gamma function for ``x > 0`` (delegates to the C library)."""
    if not x > 0:
        raise DomainError(f"gamma_fn is only defined here for x > 0, got {x!r}")
    return math.gamma(x)


@dataclass(frozen=True)
class JacobiParams:
    n: int
    alpha: float
    beta: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise DomainError(f"degree n={self.n!r} must be a nonnegative integer")

    @property
    def classical(self):
        """True when both exponents exceed -1 (orthogonal family)."""
        return self.alpha > -1 and self.beta > -1


def _jacobi_recurrence(n, a, b, x):
    p0 = np.ones_like(x)
    if n == 0:
        return p0
    p1 = 0.5 * (a + b + 2.0) * x + 0.5 * (a - b)
    for k in range(1, n):
        c = 2.0 * k + a + b
        a1 = 2.0 * (k + 1) * (k + a + b + 1) * c
        a2 = (c + 1) * (a * a - b * b)
        a3 = c * (c + 1) * (c + 2)
        a4 = 2.0 * (k + a) * (k + b) * (c + 2)
        p0, p1 = p1, ((a2 + a3 * x) * p1 - a4 * p0) / a1
    return p1


def _jacobi_explicit(n, a, b, x):
    # P_n = (a+1)_n / n! * 2F1(-n, n+a+b+1; a+1; (1-x)/2)
    z = 0.5 * (1.0 - x)
    term = np.ones_like(x)
    acc = term.copy()
    for k in range(n):
        term = term * (k - n) * (k + n + a + b + 1) / ((k + a + 1) * (k + 1)) * z
        acc = acc + term
    return _pochhammer(a + 1.0, n) / math.factorial(n) * acc


def _pochhammer(a, n):
    out = 1.0
    for k in range(n):
        out *= a + k
    return out


def jacobi_P(params: JacobiParams, x):
    """Jacobi polynomial ``P_n^{(alpha, beta)}(x)``.

    The three-term recurrence is used for classical exponents.  Otherwise
    (e.g. ``beta = s - n``) its leading coefficient can vanish, and the
    terminating hypergeometric sum is evaluated instead; it needs only
    ``alpha`` not a negative integer.
    """
    n, a, b = params.n, params.alpha, params.beta
    xa = np.asarray(x, dtype=float)
    if params.classical:
        out = _jacobi_recurrence(n, a, b, xa)
    else:
        if a + 1 <= 0 and float(a).is_integer():
            raise DomainError(f"alpha={a} is a negative integer")
        out = _jacobi_explicit(n, a, b, xa)
    return float(out) if np.ndim(x) == 0 else out


def kummer_1f1(a, b, z):
    """Confluent hypergeometric ``1F1(a; b; z)`` for real arguments.

    Negative ``z`` goes through Kummer's transformation
    ``e^z 1F1(b-a; b; -z)`` so that the summed series has no large
    alternating terms.  Accepts scalar or array ``z``.
    """
    if b <= 0 and float(b).is_integer():
        raise DomainError(f"b={b} is a nonpositive integer")
    za = np.asarray(z, dtype=float)
    flat = za.ravel()
    out = np.empty_like(flat)
    neg = flat < 0
    if np.any(~neg):
        out[~neg] = _kummer_series(a, b, flat[~neg])
    if np.any(neg):
        out[neg] = np.exp(flat[neg]) * _kummer_series(b - a, b, -flat[neg])
    out = out.reshape(za.shape)
    return float(out) if np.ndim(z) == 0 else out


def _kummer_series(a, b, z):
    term = np.ones_like(z)
    acc = term.copy()
    for n in range(_KUMMER_MAX_TERMS):
        term = term * (a + n) / ((b + n) * (n + 1)) * z
        acc += term
        if np.all(np.abs(term) <= _KUMMER_RTOL * np.abs(acc)):
            return acc
    raise ConvergenceError("1F1 series did not converge", iterations=_KUMMER_MAX_TERMS)
