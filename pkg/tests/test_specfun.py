import math

import mpmath as mp
import numpy as np
import pytest

from fraclap.exceptions import DomainError
from fraclap.specfun import JacobiParams, gamma_fn, jacobi_P, kummer_1f1


def jacobi_ref(n, a, b, x):
    # explicit binomial sum in extended precision; valid for any real a, b
    a, b, x = mp.mpf(a), mp.mpf(b), mp.mpf(x)
    tot = mp.mpf(0)
    for k in range(n + 1):
        tot += mp.binomial(n + a, n - k) * mp.binomial(n + b, k) * ((x - 1) / 2) ** k * ((x + 1) / 2) ** (n - k)
    return float(tot)


def test_gamma_values():
    assert gamma_fn(4.0) == 6.0
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    assert gamma_fn(3.3) == pytest.approx(float(mp.gamma(mp.mpf("3.3"))), rel=1e-14)
    for x in (0.1, 0.7, 2.5, 9.1):
        assert gamma_fn(x + 1) == pytest.approx(x * gamma_fn(x), rel=1e-14)
    for bad in (0.0, -1.5):
        with pytest.raises(DomainError):
            gamma_fn(bad)


def test_jacobi_low_degree():
    x = np.linspace(-1, 1, 7)
    assert np.array_equal(jacobi_P(JacobiParams(0, 0.3, 0.1), x), np.ones(7))
    a, b = 0.4, -0.7
    p1 = 0.5 * (a - b) + 0.5 * (a + b + 2) * x
    assert np.allclose(jacobi_P(JacobiParams(1, a, b), x), p1, rtol=1e-15)
    assert jacobi_P(JacobiParams(3, -0.5, 0.5), 0.3) == pytest.approx(jacobi_ref(3, -0.5, 0.5, 0.3), rel=1e-13)
    with pytest.raises(DomainError):
        JacobiParams(-1, 0.0, 0.0)


@pytest.mark.parametrize("n,s", [(1, 0.3), (2, 0.75), (3, 0.5), (3, 0.95), (4, 1.2), (5, 0.1)])
def test_jacobi_nonclassical_beta(n, s):
    P = JacobiParams(n, -0.5, s - n)
    xs = np.linspace(-1, 1, 21)
    got = jacobi_P(P, xs)
    ref = np.array([jacobi_ref(n, -0.5, s - n, x) for x in xs])
    assert np.allclose(got, ref, rtol=1e-12, atol=1e-12 * np.abs(ref).max())


def test_jacobi_recurrence_residual():
    xs = np.linspace(-1, 1, 100)
    a, b = -0.5, 0.25
    P = [jacobi_P(JacobiParams(k, a, b), xs) for k in range(8)]
    for n in range(1, 7):
        c = 2 * n + a + b
        lhs = 2 * (n + 1) * (n + a + b + 1) * c * P[n + 1]
        rhs = ((c + 1) * (a * a - b * b) + c * (c + 1) * (c + 2) * xs) * P[n] \
            - 2 * (n + a) * (n + b) * (c + 2) * P[n - 1]
        assert np.abs(lhs - rhs).max() <= 1e-10 * np.abs(lhs).max()


def test_kummer_basic():
    assert kummer_1f1(1.3, 0.5, 0.0) == 1.0
    for z in (-3.0, 0.4, 5.0):
        assert kummer_1f1(0.7, 0.7, z) == pytest.approx(math.exp(z), rel=1e-14)
    ref = float(mp.hyp1f1(1.3, 0.5, -25))
    assert kummer_1f1(1.3, 0.5, -25.0) == pytest.approx(ref, rel=1e-12)
    with pytest.raises(DomainError):
        kummer_1f1(1.0, -2.0, 1.0)


def test_kummer_against_mpmath_grid():
    zs = np.linspace(-60, 30, 37)
    for a, b in [(1.3, 0.5), (1.8, 0.5), (0.2, 1.5), (2.5, 3.1)]:
        got = kummer_1f1(a, b, zs)
        ref = np.array([float(mp.hyp1f1(a, b, z)) for z in zs])
        assert np.allclose(got, ref, rtol=1e-12, atol=0)


def test_kummer_transformation():
    zs = np.linspace(-20, 20, 41)
    a, b = 1.65, 0.5
    lhs = kummer_1f1(a, b, zs)
    rhs = np.exp(zs) * kummer_1f1(b - a, b, -zs)
    assert np.allclose(lhs, rhs, rtol=1e-12)
