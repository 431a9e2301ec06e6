"""Symmetric Toeplitz operators: FFT matvec, preconditioned CG, spectra."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, eigsh

from .exceptions import ConvergenceError, DomainError

DEFAULT_TOL = 1e-12
DENSE_LIMIT = 4096
PRECONDITIONERS = ("none", "diagonal", "circulant")
_FLOOR = 64 * np.finfo(float).eps
# target for the inner solves of inverse Lanczos
_INNER_TOL = 1e-11


def _embedding_size(m):
    n = 1
    while n < 2 * m - 1:
        n *= 2
    return n


class SymmetricToeplitz:
    """Symmetric Toeplitz matrix held by its (already scaled) first column.

    Products use a circulant embedding of size the next power of two at
    least ``2M - 1``, so a matvec costs ``O(M log M)``.
    """

    def __init__(self, first_column):
        col = np.array(first_column, dtype=float).ravel()
        if col.size == 0:
            raise DomainError("empty generating vector")
        self.first_column = col
        self.M = col.size
        n = _embedding_size(self.M)
        emb = np.zeros(n)
        emb[:self.M] = col
        if self.M > 1:
            emb[n - self.M + 1:] = col[:0:-1]
        self._n = n
        self._spec = np.fft.rfft(emb)
        self._pc_eigs = None

    @property
    def shape(self):
        return (self.M, self.M)

    def __len__(self):
        return self.M

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.M:
            raise DomainError(f"vector of length {x.shape[0]} for a {self.M}x{self.M} operator")
        if x.ndim == 1:
            y = np.fft.irfft(self._spec * np.fft.rfft(x, self._n), self._n)
            return y[:self.M]
        y = np.fft.irfft(self._spec[:, None] * np.fft.rfft(x, self._n, axis=0),
                         self._n, axis=0)
        return y[:self.M]

    __matmul__ = matvec

    def norm_bound(self):
        """``|t_0| + 2 sum |t_p|``, an upper bound on the 2-norm."""
        return float(np.abs(self.first_column[0]) + 2.0 * np.abs(self.first_column[1:]).sum())

    def dense(self):
        return scipy.linalg.toeplitz(self.first_column)

    def diagonal(self):
        return np.full(self.M, self.first_column[0])

    def shifted(self, alpha=1.0, beta=1.0):
        """``alpha I + beta T`` as a new operator."""
        col = beta * self.first_column
        col[0] += alpha
        return SymmetricToeplitz(col)

    def circulant_eigenvalues(self):
        """Eigenvalues of T. Chan's optimal circulant approximation.

        ``c_k = ((M-k) t_k + k t_{M-k}) / M``; for SPD ``T`` the result is SPD.
        """
        if self._pc_eigs is None:
            m = self.M
            t = self.first_column
            k = np.arange(m)
            c = (m - k) * t
            c[1:] += k[1:] * t[m - k[1:]]
            c /= m
            self._pc_eigs = np.fft.fft(c).real
        return self._pc_eigs

    def preconditioner(self, kind="circulant"):
        """Callable applying the inverse of the chosen preconditioner."""
        if kind == "none":
            return None
        if kind == "diagonal":
            d = self.first_column[0]
            return lambda r: r / d
        if kind == "circulant":
            lam = self.circulant_eigenvalues()
            if np.any(lam <= 0):
                raise DomainError("circulant preconditioner is not positive definite")
            return lambda r: np.fft.ifft(np.fft.fft(r) / lam).real
        raise DomainError(f"unknown preconditioner {kind!r}; expected one of {PRECONDITIONERS}")

    def as_linear_operator(self):
        return LinearOperator(self.shape, matvec=self.matvec, dtype=float)


def matvec(T: SymmetricToeplitz, x):
    return T.matvec(x)


@dataclass
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool
    # preconditioned residual norms sqrt(r^T M^{-1} r), one per iteration
    history: list = field(default_factory=list, repr=False)


def cg(apply_A, b, tol=DEFAULT_TOL, max_iter=None, precond=None, x0=None,
       restarts=5, anorm=None):
    """Preconditioned conjugate gradients for an SPD operator.

    Converged means ``||b - A x|| <= tol ||b||``, or, when ``anorm`` (an upper
    bound on ``||A||``) is given, that the residual has reached the roundoff
    floor ``64 eps (anorm ||x|| + ||b||)``; for ill-conditioned systems the
    first test can be out of reach even for the correctly rounded solution.
    If the recursive residual converges before the true one (it drifts on
    ill-conditioned systems), CG restarts from the current iterate up to
    ``restarts`` times.  Never raises; inspect ``converged`` on the result.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if max_iter is None:
        max_iter = 10 * n
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return CGResult(np.zeros(n), 0, 0.0, True)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)

    def target():
        if anorm is None:
            return tol * bnorm
        return max(tol * bnorm, _FLOOR * (anorm * np.linalg.norm(x) + bnorm))

    history = []
    it = 0
    for _ in range(restarts + 1):
        r = b - apply_A(x)
        if np.linalg.norm(r) <= target() or it >= max_iter:
            break
        z = r if precond is None else precond(r)
        p = z.copy()
        rz = r @ z
        history.append(np.sqrt(abs(rz)))
        while it < max_iter:
            Ap = apply_A(p)
            pAp = p @ Ap
            if pAp <= 0:
                break
            a = rz / pAp
            x += a * p
            r -= a * Ap
            it += 1
            if np.linalg.norm(r) <= target():
                break
            z = r if precond is None else precond(r)
            rz_new = r @ z
            history.append(np.sqrt(abs(rz_new)))
            p = z + (rz_new / rz) * p
            rz = rz_new
    rnorm = np.linalg.norm(b - apply_A(x))
    return CGResult(x, it, rnorm / bnorm, rnorm <= target(), history)


def solve_spd(T: SymmetricToeplitz, b, tol=DEFAULT_TOL, max_iter=None,
              preconditioner="circulant", x0=None):
    """Solve ``T x = b`` by PCG; raises :class:`ConvergenceError` on failure."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != T.M:
        raise DomainError(f"right-hand side of length {b.shape[0]} for size {T.M}")
    out = cg(T.matvec, b, tol=tol, max_iter=max_iter,
             precond=T.preconditioner(preconditioner), x0=x0, anorm=T.norm_bound())
    if not out.converged:
        raise ConvergenceError(
            f"CG stopped after {out.iterations} iterations at relative residual {out.residual:.3e}",
            residual=out.residual, iterations=out.iterations)
    return out.x


def extreme_eigs(T: SymmetricToeplitz, tol=1e-10):
    """``(lambda_min, lambda_max)`` of an SPD Toeplitz operator.

    Both come from implicitly restarted Lanczos: on ``T`` for the top of the
    spectrum, on ``T^{-1}`` (applied with :func:`solve_spd`) for the bottom.
    Small operators are handled by a dense symmetric eigensolver.
    """
    if T.M <= 2:
        w = np.linalg.eigvalsh(T.dense())
        return float(w[0]), float(w[-1])
    try:
        top = eigsh(T.as_linear_operator(), k=1, which="LA", tol=tol,
                    return_eigenvectors=False)[0]
        pc = T.preconditioner("circulant")
        # ARPACK tolerates slightly inexact operators; the attainable residual
        # is about eps * cond, so the best CG iterate is used without raising
        inv = LinearOperator(T.shape, dtype=float,
                             matvec=lambda x: cg(T.matvec, np.ravel(x), tol=_INNER_TOL,
                                                 precond=pc).x)
        bottom = 1.0 / eigsh(inv, k=1, which="LA", tol=tol,
                             return_eigenvectors=False)[0]
    except Exception as exc:  # ARPACK reports non-convergence with its own types
        if isinstance(exc, ConvergenceError):
            raise
        raise ConvergenceError(f"Lanczos iteration failed: {exc}") from exc
    return float(bottom), float(top)


@dataclass
class SpectrumReport:
    s: float
    sizes: list
    lambda_min: np.ndarray
    lambda_max: np.ndarray
    cond: np.ndarray
    e_min: float
    e_max: float
    e_cond: float

    def rows(self):
        return [(int(n), float(a), float(b), float(c))
                for n, a, b, c in zip(self.sizes, self.lambda_min, self.lambda_max, self.cond)]


def _slope(n, y):
    return float(np.polyfit(np.log(n), np.log(y), 1)[0])


def condition_scaling(s, sizes, a=-1.0, b=1.0, tol=1e-10):
    """Extreme eigenvalues of the stiffness matrix over ``sizes`` (element
    counts N) with log-log least-squares exponents."""
    from .kernel import KernelParams, stiffness_operator

    sizes = [int(n) for n in sizes]
    if any(n2 <= n1 for n1, n2 in zip(sizes, sizes[1:])):
        raise DomainError("sizes must be strictly ascending")
    lo, hi = [], []
    for n in sizes:
        lmin, lmax = extreme_eigs(stiffness_operator(KernelParams(s, n, a, b)), tol=tol)
        lo.append(lmin)
        hi.append(lmax)
    lo, hi = np.array(lo), np.array(hi)
    cond = hi / lo
    nn = np.array(sizes, dtype=float)
    return SpectrumReport(s, sizes, lo, hi, cond,
                          _slope(nn, lo), _slope(nn, hi), _slope(nn, cond))
