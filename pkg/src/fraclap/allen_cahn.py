"""Fractional Allen-Cahn equation ``u_t + ε² (-Δ)^s u + f(u) = g``.

Space is discretized with the stiffness matrix and a lumped (nodal) mass,
so with ``c = τ ε² / h`` the two time steppers read

* semi-implicit:   ``(I + c S) U^{n+1} = U^n - τ f(U^n) + τ g^{n+1}``
* Crank-Nicolson:  ``(I + c/2 S) U^{n+1} + τ/2 f(U^{n+1})
  = (I - c/2 S) U^n - τ/2 f(U^n) + τ/2 (g^n + g^{n+1})``

with ``f(u) = u (u - 1)(2u - 1) / 2``, the derivative of the double well
``F(u) = u^2 (u - 1)^2 / 4``.  For ``s`` in ``(s_0, 1]`` and ``g = 0`` both
keep ``U`` in ``[0, 1]`` and dissipate ``E_h`` when ``τ <= 2`` (semi-implicit)
or ``τ <= min(2, h^{2s} / (2ε²))`` (Crank-Nicolson).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .dominance import find_s0
from .exceptions import ConvergenceError, DomainError, MonitorViolation
from .kernel import KernelParams, check_order, stiffness_operator
from .specfun import gamma_fn, kummer_1f1
from .toeplitz import DEFAULT_TOL, SymmetricToeplitz, cg, solve_spd

SCHEMES = ("semi_implicit", "crank_nicolson")
SOLVERS = ("cg", "dense")
MONITOR_TOL = 1e-12
_FLOOR = 64 * np.finfo(float).eps


def reaction_f(u):
    return 0.5 * u * (u - 1.0) * (2.0 * u - 1.0)


def potential_F(u):
    return 0.25 * u * u * (u - 1.0) ** 2


def reaction_fprime(u):
    return 0.5 * (6.0 * u * u - 6.0 * u + 1.0)


def discrete_energy(U, S: SymmetricToeplitz, h, epsilon):
    """``E_h = ε²/2 U^T S U + h sum F(U_j)``."""
    U = np.asarray(U, dtype=float)
    return float(0.5 * epsilon ** 2 * (U @ S.matvec(U)) + h * potential_F(U).sum())


def varphi(s):
    """Lower bound factor ``φ(s)`` with ``S_kk = 1 / (h^{2s-1} φ(s))``.

    At ``s = 1/2`` this is the limit ``π / (4 ln 2)`` of the generic formula.
    """
    check_order(s)
    if s == 0.5:
        return math.pi / (4.0 * math.log(2.0))
    if abs(s - 1.0) < 1e-9:
        return 0.5
    return math.cos(s * math.pi) * gamma_fn(4.0 - 2.0 * s) / (2.0 ** (3.0 - 2.0 * s) - 4.0)


def semi_implicit_step_bound():
    return 2.0


def cn_step_bound(s, h, epsilon, sharp=False):
    """Largest step with guaranteed bounds for Crank-Nicolson.

    ``min(2, h^{2s} / (2ε²))``; with ``sharp=True`` the ``1/2`` is replaced by
    ``φ(s)`` (which is ``>= 1/2`` on ``(s_0, 1]``).
    """
    check_order(s)
    factor = varphi(s) if sharp else 0.5
    return min(2.0, h ** (2 * s) * factor / epsilon ** 2)


def guarantee_holds(s):
    """True when ``s`` lies in ``(s_0, 1]``, the range covered by the bounds."""
    return find_s0() < s <= 1.0


@dataclass
class ACConfig:
    s: float
    epsilon: float
    tau: float
    T: float
    N: int
    a: float = -1.0
    b: float = 1.0
    scheme: str = "semi_implicit"
    initial_condition: Optional[Callable] = None
    source: Optional[Callable] = None
    solver: str = "cg"
    newton_tol: float = 1e-12
    max_newton: int = 50
    check_monitors: bool = True

    def __post_init__(self):
        check_order(self.s)
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")
        if not self.tau > 0:
            raise DomainError("tau must be positive")
        if not self.T >= 0:
            raise DomainError("T must be nonnegative")
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}")
        if self.solver not in SOLVERS:
            raise DomainError(f"solver must be one of {SOLVERS}")
        steps = self.T / self.tau
        if abs(steps - round(steps)) > 1e-8 * max(1.0, steps):
            raise DomainError(f"T={self.T} is not a whole number of steps tau={self.tau}")
        self.params  # validates N, a, b

    @property
    def params(self):
        return KernelParams(self.s, self.N, self.a, self.b)

    @property
    def h(self):
        return self.params.h

    @property
    def n_steps(self):
        return int(round(self.T / self.tau))

    def step_bound(self):
        if self.scheme == "semi_implicit":
            return semi_implicit_step_bound()
        return cn_step_bound(self.s, self.h, self.epsilon)

    def guaranteed(self):
        """Whether the bound and energy guarantees apply (no source, s and τ admissible)."""
        return (self.source is None and guarantee_holds(self.s)
                and self.tau <= self.step_bound())


@dataclass
class ACState:
    U: np.ndarray
    t: float = 0.0
    step: int = 0


@dataclass
class MonitorTrace:
    t: list = field(default_factory=list)
    min_u: list = field(default_factory=list)
    max_u: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    newton_iterations: list = field(default_factory=list)

    def record(self, t, U, energy, newton=0):
        self.t.append(float(t))
        self.min_u.append(float(U.min()) if U.size else 0.0)
        self.max_u.append(float(U.max()) if U.size else 0.0)
        self.energy.append(float(energy))
        self.newton_iterations.append(int(newton))

    def rows(self):
        return list(zip(self.t, self.min_u, self.max_u, self.energy))

    def arrays(self):
        return {k: np.array(getattr(self, k)) for k in ("t", "min_u", "max_u", "energy")}


class Stepper:
    """Holds the operators of one configuration and advances states."""

    def __init__(self, config: ACConfig):
        self.config = config
        self.x = config.params.nodes()
        self.S = stiffness_operator(config.params)
        c = config.tau * config.epsilon ** 2 / config.h
        self.c = c
        if config.scheme == "semi_implicit":
            self.A = self.S.shifted(1.0, c)
        else:
            self.A = self.S.shifted(1.0, 0.5 * c)
        self._anorm = self.A.norm_bound()
        self._Ainv = None
        if config.solver == "dense":
            self._Ainv = scipy.linalg.inv(self.A.dense(), check_finite=False)
            self._precond = lambda r: self._Ainv @ r
        else:
            self._precond = self.A.preconditioner("circulant")

    def _solve_A(self, rhs, x0=None, tol=DEFAULT_TOL):
        if self._Ainv is not None:
            return self._Ainv @ rhs
        return solve_spd(self.A, rhs, tol=tol, x0=x0)

    def _source(self, t):
        g = self.config.source
        return 0.0 if g is None else np.asarray(g(self.x, t), dtype=float)

    def energy(self, U):
        return discrete_energy(U, self.S, self.config.h, self.config.epsilon)

    def step(self, state: ACState) -> tuple[ACState, int]:
        cfg = self.config
        tau = cfg.tau
        t1 = state.t + tau
        U = state.U
        if cfg.scheme == "semi_implicit":
            rhs = U - tau * reaction_f(U)
            if cfg.source is not None:
                rhs = rhs + tau * self._source(t1)
            return ACState(self._solve_A(rhs, x0=U), t1, state.step + 1), 0
        rhs = U - 0.5 * self.c * self.S.matvec(U) - 0.5 * tau * reaction_f(U)
        if cfg.source is not None:
            rhs = rhs + 0.5 * tau * (self._source(state.t) + self._source(t1))
        V, its = self.newton(rhs, U)
        return ACState(V, t1, state.step + 1), its

    def residual(self, V, rhs):
        return self.A.matvec(V) + 0.5 * self.config.tau * reaction_f(V) - rhs

    def newton(self, rhs, V0):
        """Solve ``A V + τ/2 f(V) = rhs``; falls back to damped Picard."""
        cfg = self.config
        half_tau = 0.5 * cfg.tau
        V = np.array(V0, dtype=float)
        scale = max(1.0, np.abs(rhs).max(initial=0.0))
        for it in range(cfg.max_newton + 1):
            R = self.residual(V, rhs)
            rn = np.abs(R).max(initial=0.0)
            floor = _FLOOR * (self._anorm * np.abs(V).max(initial=0.0) + scale)
            if rn <= max(cfg.newton_tol, floor):
                return V, it
            if it == cfg.max_newton:
                break
            d = half_tau * reaction_fprime(V)
            out = cg(lambda v: self.A.matvec(v) + d * v, R, tol=1e-13,
                     precond=self._precond, anorm=self._anorm + np.abs(d).max())
            V = V - out.x
        return self.picard(rhs, V)

    def picard(self, rhs, V0, damping=0.5, max_iter=10000):
        """Damped fixed-point iteration ``V <- (1-θ) V + θ A^{-1}(rhs - τ/2 f(V))``."""
        cfg = self.config
        V = np.array(V0, dtype=float)
        for it in range(max_iter):
            R = self.residual(V, rhs)
            rn = np.abs(R).max(initial=0.0)
            floor = _FLOOR * (self._anorm * np.abs(V).max(initial=0.0) + np.abs(rhs).max(initial=1.0))
            if rn <= max(cfg.newton_tol, floor):
                return V, cfg.max_newton + it
            V = (1.0 - damping) * V + damping * self._solve_A(
                rhs - 0.5 * cfg.tau * reaction_f(V), x0=V, tol=1e-15)
        raise ConvergenceError(
            f"nonlinear solve failed at residual {rn:.3e}", residual=rn,
            iterations=cfg.max_newton + max_iter)


def initial_state(config: ACConfig) -> ACState:
    x = config.params.nodes()
    if config.initial_condition is None:
        U = np.zeros_like(x)
    else:
        U = np.array(config.initial_condition(x), dtype=float)
        if U.shape != x.shape:
            raise DomainError("initial condition must return one value per interior node")
    return ACState(U, 0.0, 0)


def step_semi_implicit(state: ACState, config: ACConfig, stepper: Stepper | None = None):
    if config.scheme != "semi_implicit":
        raise DomainError("config.scheme is not semi_implicit")
    return (stepper or Stepper(config)).step(state)[0]


def step_crank_nicolson(state: ACState, config: ACConfig, stepper: Stepper | None = None):
    if config.scheme != "crank_nicolson":
        raise DomainError("config.scheme is not crank_nicolson")
    return (stepper or Stepper(config)).step(state)[0]


def run(config: ACConfig, record_every=1, snapshot_times=(), state=None):
    """Integrate to ``config.T``.

    Returns ``(state, trace, snapshots)``; ``snapshots`` maps each requested
    time to a copy of ``U``.  With guarantees in force (see
    :meth:`ACConfig.guaranteed`) and ``U^0`` in ``[0, 1]``, a bound or energy
    violation larger than ``1e-12`` raises :class:`MonitorViolation`.
    """
    stepper = Stepper(config)
    state = initial_state(config) if state is None else state
    trace = MonitorTrace()
    E = stepper.energy(state.U)
    trace.record(state.t, state.U, E)
    U0 = state.U
    tripwire = (config.check_monitors and config.guaranteed()
                and U0.min(initial=0.0) >= 0.0 and U0.max(initial=0.0) <= 1.0)
    wanted = sorted(float(t) for t in snapshot_times)
    snaps = {}
    _take_snapshots(snaps, wanted, state, config.tau)
    for n in range(config.n_steps):
        state, its = stepper.step(state)
        _take_snapshots(snaps, wanted, state, config.tau)
        keep = (n + 1) % record_every == 0 or n + 1 == config.n_steps
        if not (tripwire or keep):
            continue  # energy only needed for the trace or the tripwire
        E_new = stepper.energy(state.U)
        if tripwire:
            lo, hi = state.U.min(initial=0.0), state.U.max(initial=0.0)
            if lo < -MONITOR_TOL or hi > 1.0 + MONITOR_TOL:
                raise MonitorViolation(
                    f"step {state.step}: U left [0, 1] (min {lo:.3e}, max {hi:.17g})")
            if E_new > E + MONITOR_TOL * abs(E):
                raise MonitorViolation(
                    f"step {state.step}: energy rose from {E:.17g} to {E_new:.17g}")
        E = E_new
        if keep:
            trace.record(state.t, state.U, E, its)
    return state, trace, snaps


def _take_snapshots(snaps, wanted, state, tau):
    for t in wanted:
        if t not in snaps and abs(t - state.t) <= 0.5 * tau:
            snaps[t] = state.U.copy()


# ---------------------------------------------------------------- manufactured

def manufactured_exact(x, t, lam):
    x = np.asarray(x, dtype=float)
    return np.exp(-t - (lam * x) ** 2)


def manufactured_source(x, t, s, epsilon, lam):
    """Source making ``u = exp(-t - λ² x²)`` an exact solution."""
    return ManufacturedSource(s, epsilon, lam)(x, t)


class ManufacturedSource:
    """Callable ``g(x, t)`` caching the time-independent factors per grid."""

    def __init__(self, s, epsilon, lam):
        check_order(s, upper=1.5)
        self.s, self.epsilon, self.lam = s, epsilon, lam
        self._x = None

    def _parts(self, x):
        if self._x is None or self._x.shape != x.shape or not np.array_equal(self._x, x):
            s, lam = self.s, self.lam
            amp = (2.0 * lam) ** (2 * s) * gamma_fn(s + 0.5) * self.epsilon ** 2 / math.sqrt(math.pi)
            z = -(lam * x) ** 2
            self._x = np.array(x, dtype=float)
            self._frac = amp * kummer_1f1(s + 0.5, 0.5, z)
            self._gauss = np.exp(z)
        return self._frac, self._gauss

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        frac, E = self._parts(x)
        a = math.exp(-t)
        return a * frac - 0.5 * a * E - 1.5 * (a * E) ** 2 + (a * E) ** 3


def manufactured_config(N, tau, scheme, s=0.8, epsilon=0.1, lam=10.0, L=1.0, T=1.6,
                        solver="cg"):
    return ACConfig(s=s, epsilon=epsilon, tau=tau, T=T, N=N, a=-L, b=L, scheme=scheme,
                    initial_condition=lambda x: manufactured_exact(x, 0.0, lam),
                    source=ManufacturedSource(s, epsilon, lam), solver=solver)


def spatial_sweep(scheme, h_list, tau, s=0.8, epsilon=0.1, lam=10.0, L=1.0, T=1.6,
                  solver="dense"):
    """Max nodal error at ``T`` against the exact solution for each ``h``."""
    from .poisson import ConvergenceTable

    errs = []
    for h in h_list:
        N = int(round(2 * L / h))
        cfg = manufactured_config(N, tau, scheme, s, epsilon, lam, L, T, solver)
        state, _, _ = run(cfg, record_every=cfg.n_steps or 1)
        errs.append(np.abs(state.U - manufactured_exact(cfg.params.nodes(), T, lam)).max())
    return ConvergenceTable(np.array(h_list, dtype=float), np.array(errs), "h",
                            {"scheme": scheme, "tau": tau, "s": s})


def temporal_sweep(scheme, tau_list, h, reference_tau, s=0.8, epsilon=0.1, lam=10.0,
                   L=1.0, T=1.6, solver="dense"):
    """Error at ``T`` against a Crank-Nicolson run with step ``reference_tau``
    on the same mesh, which removes the spatial error from the comparison.

    The errors against the exact solution are kept in ``meta['exact_error']``.
    """
    from .poisson import ConvergenceTable

    N = int(round(2 * L / h))

    def final(tau, sch):
        cfg = manufactured_config(N, tau, sch, s, epsilon, lam, L, T, solver)
        return run(cfg, record_every=cfg.n_steps or 1)[0].U, cfg

    ref, cfg = final(reference_tau, "crank_nicolson")
    exact = manufactured_exact(cfg.params.nodes(), T, lam)
    errs, exact_errs = [], []
    for tau in tau_list:
        U, _ = final(tau, scheme)
        errs.append(np.abs(U - ref).max())
        exact_errs.append(np.abs(U - exact).max())
    return ConvergenceTable(np.array(tau_list, dtype=float), np.array(errs), "tau",
                            {"scheme": scheme, "h": h, "reference_tau": reference_tau,
                             "exact_error": exact_errs})


# ------------------------------------------------------------------ diagnostics

def decay_exponent(U, grid, window):
    """Least-squares slope of ``log|U|`` against ``log|x|`` for ``|x|`` in ``window``."""
    U = np.asarray(U, dtype=float)
    ax = np.abs(np.asarray(grid, dtype=float))
    lo, hi = window
    sel = (ax >= lo) & (ax <= hi) & (U != 0)
    if sel.sum() < 2:
        raise DomainError("fewer than two usable points in the window")
    return float(np.polyfit(np.log(ax[sel]), np.log(np.abs(U[sel])), 1)[0])


def _crossing(x, U, level, start=0):
    above = np.nonzero(U[start:] >= level)[0]
    if above.size == 0:
        raise DomainError(f"profile never reaches {level}")
    j = start + above[0]
    if j == 0:
        raise DomainError(f"profile starts above {level}")
    # linear interpolation between x_{j-1} and x_j
    w = (level - U[j - 1]) / (U[j] - U[j - 1])
    return x[j - 1] + w * (x[j] - x[j - 1]), j


def interfacial_width(U, grid, lo=0.01, hi=0.99):
    """Distance between the first ``lo`` and ``hi`` crossings scanning left to right."""
    x = np.asarray(grid, dtype=float)
    U = np.asarray(U, dtype=float)
    x_lo, j = _crossing(x, U, lo)
    x_hi, _ = _crossing(x, U, hi, start=j - 1)
    return float(x_hi - x_lo)
