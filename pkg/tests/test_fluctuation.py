import numpy as np
import pytest

from weylpath import (
    DeterminantPair,
    FluctuationCoeffs,
    block_tridiagonal,
    build_matrix,
    det_continuum,
    det_dense,
    det_recursive,
)
from weylpath.errors import SingularMatrix, StepTooLarge


def random_coeffs(rng, N, tau=0.13, hbar=1.0):
    draw = lambda: rng.normal(size=N) + 1j * rng.normal(size=N)
    return FluctuationCoeffs(A=draw(), B=draw(), C=draw(), tau=tau, hbar=hbar)


def cofactor_det(M):
    n = M.shape[0]
    if n == 1:
        return M[0, 0]
    total = 0.0j
    for j in range(n):
        minor = np.delete(np.delete(M, 0, axis=0), j, axis=1)
        total += (-1.0) ** j * M[0, j] * cofactor_det(minor)
    return total


def quad_form_direct(coeffs, xi, xi_star):
    """Second variation evaluated straight from its defining double sum."""
    N = coeffs.N
    lam = -0.5j * coeffs.tau / coeffs.hbar
    total = sum(
        lam * (coeffs.A[k] * xi[k] ** 2 + 2 * coeffs.C[k] * xi[k] * xi_star[k]
               + coeffs.B[k] * xi_star[k] ** 2)
        - 2.0 * xi[k] * xi_star[k]
        for k in range(N)
    )
    for k in range(1, N):
        for j in range(1, k + 1):
            total += 4.0 * xi_star[k] * xi[k - j] * (-1.0) ** (j + 1)
    return total


class TestBuildMatrix:
    def test_single_block(self):
        co = FluctuationCoeffs(A=[2.0], B=[3.0], C=[5.0], tau=0.4, hbar=2.0)
        lam = 1j * 0.4 / 2.0
        want = np.array([[lam * 2.0, lam * 5.0 + 2.0], [lam * 5.0 + 2.0, lam * 3.0]])
        assert np.allclose(build_matrix(co), want)

    def test_reproduces_quadratic_form(self):
        rng = np.random.default_rng(61)
        for N in (1, 2, 4, 7):
            co = random_coeffs(rng, N)
            M = build_matrix(co)
            for _ in range(5):
                xi = rng.normal(size=N) + 1j * rng.normal(size=N)
                xi_star = rng.normal(size=N) + 1j * rng.normal(size=N)
                # X ordering: (xi_N, xi*_N, ..., xi_1, xi*_1)
                X = np.empty(2 * N, dtype=complex)
                X[0::2] = xi[::-1]
                X[1::2] = xi_star[::-1]
                got = -0.5 * X @ M @ X
                want = quad_form_direct(co, xi, xi_star)
                assert abs(got - want) <= 1e-12 * max(1.0, abs(want))

    def test_harmonic_determinant_product_form(self):
        om, tau, hbar = 0.9, 0.21, 1.0
        for N in (1, 3, 6):
            co = FluctuationCoeffs(
                A=np.zeros(N), B=np.zeros(N), C=om * hbar * np.ones(N),
                tau=tau, hbar=hbar,
            )
            got = det_dense(build_matrix(co))
            want = 2.0 ** (2 * N) * 1j ** (2 * N) * (1 + 0.5j * om * tau) ** (2 * N)
            assert abs(got - want) <= 1e-12 * abs(want)


class TestDetDense:
    def test_identity(self):
        assert det_dense(np.eye(4)) == pytest.approx(1.0)

    def test_scalar_diagonal_factoring(self):
        for N in (1, 2, 4):
            got = det_dense(2j * np.eye(2 * N))
            assert abs(got - (2j) ** (2 * N)) < 1e-12

    def test_against_cofactor_expansion(self):
        rng = np.random.default_rng(67)
        M = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        assert abs(det_dense(M) - cofactor_det(M)) < 1e-10 * abs(cofactor_det(M))

    def test_singular_matrix_raises(self):
        M = np.ones((3, 3), dtype=complex)
        with pytest.raises(SingularMatrix):
            det_dense(M)


class TestBlockTridiagonal:
    def test_preserves_determinant(self):
        rng = np.random.default_rng(71)
        for N in (1, 2, 5):
            co = random_coeffs(rng, N)
            M = build_matrix(co)
            B = block_tridiagonal(M)
            assert abs(det_dense(B) - det_dense(M) / (2j) ** (2 * N)) < 1e-10

    def test_banded_structure(self):
        rng = np.random.default_rng(73)
        co = random_coeffs(rng, 6)
        B = block_tridiagonal(build_matrix(co))
        n = B.shape[0]
        beyond = [abs(B[i, j]) for i in range(n) for j in range(n) if abs(i - j) > 3]
        assert max(beyond) == 0.0


class TestDetRecursive:
    def test_zero_coefficients(self):
        for N in (1, 4, 9):
            co = FluctuationCoeffs(
                A=np.zeros(N), B=np.zeros(N), C=np.zeros(N), tau=0.1
            )
            pair = det_recursive(co)
            assert isinstance(pair, DeterminantPair)
            assert abs(pair.Delta - 1.0) < 1e-14

    def test_harmonic_closed_form(self):
        om, tau = 1.3, 0.07
        for N in (1, 2, 5, 12):
            co = FluctuationCoeffs(
                A=np.zeros(N), B=np.zeros(N), C=om * np.ones(N), tau=tau
            )
            want = (1.0 + 0.5j * om * tau) ** (2 * N)
            assert abs(det_recursive(co).Delta - want) < 1e-12 * abs(want)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(79)
        for _ in range(60):
            N = int(rng.integers(1, 9))
            co = random_coeffs(rng, N, tau=float(rng.uniform(0.02, 0.4)))
            dense = det_dense(build_matrix(co)) / (2j) ** (2 * N)
            rec = det_recursive(co).Delta
            assert abs(rec - dense) <= 1e-10 * max(1.0, abs(dense))

    def test_prefactor_cancellation_identity(self):
        # [2^N / sqrt((-1)^N det M)]^2 == 1 / Delta_N, branch free
        rng = np.random.default_rng(83)
        for N in (1, 3, 6):
            co = random_coeffs(rng, N)
            M = build_matrix(co)
            lhs = 2.0 ** (2 * N) / ((-1.0) ** N * det_dense(M))
            rhs = 1.0 / det_recursive(co).Delta
            assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


class TestDetContinuum:
    def test_zero_coefficients(self):
        one = lambda t: 0.0
        assert abs(det_continuum(one, one, one, 2.0) - 1.0) < 1e-12

    def test_harmonic_exponential(self):
        om = 1.4
        zero = lambda t: 0.0
        C = lambda t: om  # hbar = 1
        got = det_continuum(zero, zero, C, 1.7, steps=256)
        assert abs(got - np.exp(1j * om * 1.7)) < 1e-10

    def test_zero_time(self):
        zero = lambda t: 0.0
        assert det_continuum(zero, zero, zero, 0.0) == 1.0

    def test_recursion_reaches_continuum_limit(self):
        # time-dependent coefficients sampled ever finer: first-order in tau
        om = 1.1
        A = lambda t: 0.3 * np.cos(t)
        B = lambda t: 0.2 * np.sin(t) + 0.1
        C = lambda t: om + 0.15 * t
        T = 1.2
        target = det_continuum(A, B, C, T, steps=1024)
        errs = []
        for N in (40, 80, 160, 320):
            tau = T / N
            ts = (np.arange(N) + 0.5) * tau
            co = FluctuationCoeffs(
                A=np.array([A(t) for t in ts]),
                B=np.array([B(t) for t in ts]),
                C=np.array([C(t) for t in ts]),
                tau=tau,
            )
            errs.append(abs(det_recursive(co).Delta - target))
        # observed order >= 1: halving tau at least halves the error
        for a, b in zip(errs, errs[1:]):
            assert b < 0.6 * a
        assert errs[-1] < 5e-3

    def test_step_halving_guard(self):
        om = 2.0
        zero = lambda t: 0.0
        C = lambda t: om
        with pytest.raises(StepTooLarge):
            det_continuum(zero, zero, C, 20.0, steps=16, step_tolerance=1e-12)
