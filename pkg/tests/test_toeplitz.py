import numpy as np
import pytest
import scipy.linalg

from fraclap.exceptions import ConvergenceError, DomainError
from fraclap.kernel import KernelParams, stiffness_operator
from fraclap.toeplitz import (
    SymmetricToeplitz, cg, condition_scaling, extreme_eigs, matvec, solve_spd,
)

SEED = 90210


def test_identity_generator():
    T = SymmetricToeplitz(np.eye(7)[0])
    x = np.arange(7.0)
    assert np.allclose(matvec(T, x), x, atol=1e-15)
    assert np.allclose(solve_spd(T, x), x)


def test_unit_row_on_constant_vector():
    N = 10
    p = KernelParams(1.0, N, 0.0, 1.0)
    T = stiffness_operator(p)
    y = T @ np.full(N - 1, 3.0)
    expect = np.zeros(N - 1)
    expect[[0, -1]] = 3.0 / p.h
    assert np.allclose(y, expect, atol=1e-10)


@pytest.mark.parametrize("M", [1, 2, 3, 17, 64, 100, 512])
def test_fft_matvec_matches_dense(M):
    rng = np.random.default_rng(SEED + M)
    T = SymmetricToeplitz(rng.normal(size=M))
    D = T.dense()
    for _ in range(100 if M <= 100 else 20):
        x = rng.normal(size=M)
        ref = D @ x
        assert np.linalg.norm(T.matvec(x) - ref) <= 1e-12 * max(np.linalg.norm(ref), 1.0)
    X = rng.normal(size=(M, 3))
    assert np.allclose(T.matvec(X), D @ X, rtol=1e-12, atol=1e-12)


def test_stiffness_matvec_matches_dense():
    rng = np.random.default_rng(SEED)
    for s in (0.2, 0.5, 0.9, 1.3):
        T = stiffness_operator(KernelParams(s, 513))
        D = T.dense()
        for _ in range(100):
            x = rng.normal(size=512)
            ref = D @ x
            assert np.linalg.norm(T.matvec(x) - ref) <= 1e-12 * np.linalg.norm(ref)


def test_symmetry_of_products():
    rng = np.random.default_rng(SEED + 1)
    T = stiffness_operator(KernelParams(0.7, 200))
    for _ in range(20):
        x, y = rng.normal(size=199), rng.normal(size=199)
        a, b = (T @ x) @ y, x @ (T @ y)
        assert abs(a - b) <= 1e-12 * (np.abs(T @ x) @ np.abs(y))


def test_dimension_mismatch():
    T = SymmetricToeplitz([2.0, -1.0, 0.0])
    with pytest.raises(DomainError):
        T.matvec(np.ones(4))
    with pytest.raises(DomainError):
        solve_spd(T, np.ones(2))
    with pytest.raises(DomainError):
        SymmetricToeplitz([])


def test_solve_recovers_ones_for_laplacian():
    N = 128
    p = KernelParams(1.0, N, 0.0, 1.0)
    T = stiffness_operator(p)
    b = T @ np.ones(N - 1)
    for pc in ("none", "diagonal", "circulant"):
        x = solve_spd(T, b, preconditioner=pc)
        assert np.linalg.norm(T @ x - b) <= 1e-12 * np.linalg.norm(b) * 10
        assert np.allclose(x, 1.0, atol=1e-8)


def test_solve_matches_cholesky():
    rng = np.random.default_rng(SEED + 2)
    T = stiffness_operator(KernelParams(0.7, 256))
    b = rng.normal(size=255)
    x = solve_spd(T, b)
    ref = scipy.linalg.cho_solve(scipy.linalg.cho_factor(T.dense()), b)
    assert np.linalg.norm(x - ref) <= 1e-8 * np.linalg.norm(ref)
    assert np.linalg.norm(T @ x - b) <= 1e-12 * np.linalg.norm(b)


def test_solve_is_deterministic():
    rng = np.random.default_rng(SEED + 3)
    T = stiffness_operator(KernelParams(0.4, 300))
    b = rng.normal(size=299)
    assert np.array_equal(solve_spd(T, b), solve_spd(T, b))


def test_cg_nonconvergence_reports():
    T = stiffness_operator(KernelParams(0.9, 400))
    b = np.ones(399)
    with pytest.raises(ConvergenceError) as err:
        solve_spd(T, b, max_iter=3, preconditioner="none")
    assert err.value.iterations == 3 and err.value.residual > 1e-12


def test_pcg_energy_error_nonincreasing():
    # PCG minimises the T-norm of the error over a growing Krylov space, so
    # that norm cannot grow; replay the iteration to observe it
    rng = np.random.default_rng(SEED + 4)
    for s in (0.3, 0.8, 1.2):
        T = stiffness_operator(KernelParams(s, 512))
        x_true = rng.normal(size=511)
        b = T @ x_true
        out = cg(T.matvec, b, tol=1e-10, precond=T.preconditioner("circulant"), restarts=0)
        assert out.converged
        errs = []
        x = np.zeros_like(b)
        pc = T.preconditioner("circulant")
        r = b.copy()
        z = pc(r)
        p = z.copy()
        rz = r @ z
        for _ in range(out.iterations):
            e = x_true - x
            errs.append(np.sqrt(e @ (T @ e)))
            Ap = T @ p
            a = rz / (p @ Ap)
            x += a * p
            r -= a * Ap
            z = pc(r)
            rz, old = r @ z, rz
            p = z + rz / old * p
        errs = np.array(errs)
        assert np.all(np.diff(errs) <= 1e-10 * errs[0])


def test_circulant_preconditioner_speeds_up():
    rng = np.random.default_rng(SEED + 5)
    T = stiffness_operator(KernelParams(1.2, 1024))
    b = rng.normal(size=1023)
    plain = cg(T.matvec, b, tol=1e-8)
    pcg = cg(T.matvec, b, tol=1e-8, precond=T.preconditioner("circulant"))
    assert pcg.converged and pcg.iterations < plain.iterations / 3


def test_extreme_eigs_laplacian():
    N = 200
    p = KernelParams(1.0, N, 0.0, 1.0)
    k = np.arange(1, N)
    ev = 4 / p.h * np.sin(k * np.pi / (2 * N)) ** 2
    lo, hi = extreme_eigs(stiffness_operator(p))
    assert lo == pytest.approx(ev.min(), rel=1e-8)
    assert hi == pytest.approx(ev.max(), rel=1e-8)


def test_extreme_eigs_dense_reference():
    for s in (0.5, 0.1, 1.4):
        T = stiffness_operator(KernelParams(s, 128))
        w = np.linalg.eigvalsh(T.dense())
        lo, hi = extreme_eigs(T)
        assert lo == pytest.approx(w[0], rel=1e-8)
        assert hi == pytest.approx(w[-1], rel=1e-8)


def test_lambda_max_growth():
    rep = condition_scaling(0.9, [64, 128, 256, 512])
    assert abs(rep.e_max - 0.8) < 0.05
    assert np.allclose(rep.cond, rep.lambda_max / rep.lambda_min)


def test_positive_definite_across_orders():
    for s in (0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.4):
        for N in (32, 128, 512):
            lo, _ = extreme_eigs(stiffness_operator(KernelParams(s, N)))
            assert lo > 0


def test_condition_scaling_examples():
    assert abs(condition_scaling(1.0, [64, 128, 256, 512]).e_cond - 2.0) < 0.1
    rep = condition_scaling(0.75, [64, 128, 256, 512, 1024])
    assert abs(rep.e_cond - 1.5) < 0.15
    assert abs(condition_scaling(0.25, [64, 128, 256, 512, 1024]).e_min + 1.0) < 0.15
    with pytest.raises(DomainError):
        condition_scaling(0.5, [128, 64])
