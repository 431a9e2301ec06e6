"""Fractional Poisson problem on (-1, 1) with manufactured solutions.

``(-Δ)^s u = f`` in ``(-1, 1)``, ``u = 0`` outside, with exact solution
``u = (1 - x^2)_+^{n+s}``.  Its right-hand side is a polynomial in ``x^2``
given by a Jacobi polynomial in ``1 - 2x^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError
from .kernel import KernelParams, check_order, stiffness_operator
from .specfun import JacobiParams, gamma_fn, jacobi_P
from .toeplitz import DEFAULT_TOL, solve_spd

LOADS = ("nodal", "gauss")


def exact_u(n, s, x):
    x = np.asarray(x, dtype=float)
    return np.maximum(1.0 - x * x, 0.0) ** (n + s)


def rhs_f(n, s, x):
    """``(-Δ)^s (1-x^2)_+^{n+s}`` for ``|x| < 1``.

    Equal to ``2^{2s} Γ(s+1/2) Γ(n+1+s) / Γ(n+1/2) P_n^{(-1/2, s-n)}(1-2x^2)``.
    """
    check_order(s)
    c = 2.0 ** (2 * s) * gamma_fn(s + 0.5) * gamma_fn(n + 1 + s) / gamma_fn(n + 0.5)
    x = np.asarray(x, dtype=float)
    return c * jacobi_P(JacobiParams(n, -0.5, s - n), 1.0 - 2.0 * x * x)


def load_vector(f, params: KernelParams, q=5):
    """Galerkin load ``b_j = ∫ f φ_j`` with ``q``-point Gauss-Legendre per element."""
    if q < 2:
        raise DomainError("need at least two quadrature points")
    g, w = np.polynomial.legendre.leggauss(q)
    h = params.h
    xg = params.grid()
    # quadrature nodes of every element, shape (N, q)
    xq = xg[:-1, None] + 0.5 * h * (g + 1.0)
    fw = np.asarray(f(xq), dtype=float) * w * (0.5 * h)
    right = fw @ (0.5 * (g + 1.0))   # rising half of the hat on each element
    left = fw @ (0.5 * (1.0 - g))    # falling half
    return right[:-1] + left[1:]


def lumped_load(f, params: KernelParams):
    """Nodal (lumped) load ``b_j = h f(x_j)``."""
    return params.h * np.asarray(f(params.nodes()), dtype=float)


@dataclass(frozen=True)
class PoissonProblem:
    s: float
    n: int
    N: int
    quadrature_points: int = 5
    load: str = "nodal"

    def __post_init__(self):
        check_order(self.s)
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n={self.n!r} must be an integer >= 1")
        if int(self.N) != self.N or self.N < 4:
            raise DomainError(f"N={self.N!r} must be an integer >= 4")
        if self.load not in LOADS:
            raise DomainError(f"load must be one of {LOADS}")

    @property
    def params(self):
        return KernelParams(self.s, self.N, -1.0, 1.0)

    @property
    def h(self):
        return 2.0 / self.N

    def rhs(self):
        f = lambda x: rhs_f(self.n, self.s, x)
        if self.load == "gauss":
            return load_vector(f, self.params, self.quadrature_points)
        return lumped_load(f, self.params)


def solve_poisson(problem: PoissonProblem, tol=DEFAULT_TOL):
    """Nodal values at the interior nodes."""
    S = stiffness_operator(problem.params)
    return solve_spd(S, problem.rhs(), tol=tol)


def max_nodal_error(problem: PoissonProblem, U=None):
    if U is None:
        U = solve_poisson(problem)
    x = problem.params.nodes()
    return float(np.max(np.abs(U - exact_u(problem.n, problem.s, x))))


def rates(errors, ratio=2.0):
    """Observed orders ``log(e_{r-1}/e_r)/log(ratio)``; first entry is NaN."""
    e = np.asarray(errors, dtype=float)
    out = np.full(e.shape, np.nan)
    out[1:] = np.log(e[:-1] / e[1:]) / math.log(ratio)
    return out


@dataclass
class ConvergenceTable:
    """Rows of (resolution, error, rate); ``label`` names the resolution column."""

    resolution: np.ndarray
    error: np.ndarray
    label: str = "h"
    meta: dict = field(default_factory=dict)

    @property
    def rate(self):
        return rates(self.error, self.resolution[0] / self.resolution[1]
                     if len(self.resolution) > 1 else 2.0)

    def rows(self):
        return [(float(r), float(e), float(c))
                for r, e, c in zip(self.resolution, self.error, self.rate)]

    def fitted_order(self):
        """Least-squares slope of log(error) against log(resolution)."""
        return float(np.polyfit(np.log(self.resolution), np.log(self.error), 1)[0])


def convergence_sweep(s, n, h_list, load="nodal", q=5):
    h_list = [float(h) for h in h_list]
    errs = []
    for h in h_list:
        N = 2.0 / h
        if abs(N - round(N)) > 1e-9:
            raise DomainError(f"h={h} does not divide (-1, 1) evenly")
        errs.append(max_nodal_error(PoissonProblem(s, n, int(round(N)), q, load)))
    return ConvergenceTable(np.array(h_list), np.array(errs), "h",
                            {"s": s, "n": n, "load": load})
