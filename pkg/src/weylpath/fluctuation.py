"""Gaussian-fluctuation determinants for the midpoint discrete exponent.

The second variation of the discrete exponent defines a 2N x 2N symmetric
matrix.  After factoring 2i out of every element and a determinant-preserving
row/column reduction it becomes block tridiagonal, where a two-term Laplace
recursion evaluates it in O(N).  The continuum limit of that recursion is a
linear ODE whose solution ties the determinant to the second derivative of
the action (see the trajectories module).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor

from .errors import SingularMatrix, StepTooLarge

__all__ = [
    "FluctuationCoeffs",
    "DeterminantPair",
    "build_matrix",
    "block_tridiagonal",
    "det_dense",
    "det_recursive",
    "det_continuum",
]


@dataclass(frozen=True)
class FluctuationCoeffs:
    """Second derivatives of the symbol along a stationary path.

    ``A_k = d2H/dw_k^2`` (no-star direction), ``B_k = d2H/dw*_k^2`` and
    ``C_k = d2H/dw_k dw*_k``, sampled at the path points, plus the slice
    length ``tau`` and ``hbar``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    tau: float
    hbar: float = 1.0

    def __post_init__(self):
        for name in "ABC":
            object.__setattr__(
                self, name, np.atleast_1d(np.asarray(getattr(self, name), complex))
            )
        if not (len(self.A) == len(self.B) == len(self.C)):
            raise ValueError("A, B, C must have equal length")
        if self.tau <= 0 or self.hbar <= 0:
            raise ValueError("tau and hbar must be positive")

    @property
    def N(self) -> int:
        return len(self.A)


@dataclass(frozen=True)
class DeterminantPair:
    """Determinant Delta_N of the reduced matrix and its first minor Gamma_N."""

    Delta: complex
    Gamma: complex


def _indices(N: int):
    """Row of xi_k and xi*_k in the ordering (xi_N, xi*_N, ..., xi_1, xi*_1)."""

    def no_star(k):  # 1-based k
        return 2 * (N - k)

    def star(k):
        return 2 * (N - k) + 1

    return no_star, star


def build_matrix(coeffs: FluctuationCoeffs) -> np.ndarray:
    """Assemble the 2N x 2N quadratic-form matrix of the second variation.

    With X = (xi_N, xi*_N, ..., xi_1, xi*_1), the second variation of the
    discrete exponent is -1/2 X^T M X: diagonal 2x2 blocks
    ``[[i tau A_k/hbar, i tau C_k/hbar + 2], [., i tau B_k/hbar]]`` and the
    alternating couplings ``M[xi*_m, xi_n] = 4 (-1)^(m-n)`` for m > n.
    """
    N = coeffs.N
    lam = 1j * coeffs.tau / coeffs.hbar
    no_star, star = _indices(N)
    M = np.zeros((2 * N, 2 * N), dtype=complex)
    for k in range(1, N + 1):
        i, j = no_star(k), star(k)
        M[i, i] = lam * coeffs.A[k - 1]
        M[j, j] = lam * coeffs.B[k - 1]
        M[i, j] = M[j, i] = lam * coeffs.C[k - 1] + 2.0
    for m in range(2, N + 1):
        for n in range(1, m):
            val = 4.0 * (-1.0) ** (m - n)
            M[star(m), no_star(n)] = val
            M[no_star(n), star(m)] = val
    return M


def block_tridiagonal(matrix: np.ndarray) -> np.ndarray:
    """Reduce the (2i-factored) fluctuation matrix to block-tridiagonal form.

    Applies the congruence B = E^T (M / 2i) E where E adds each xi*_{m-1}
    column to the xi*_m column; determinant-preserving since det E = 1.
    The long-range alternating couplings cancel pairwise.
    """
    n2 = matrix.shape[0]
    if n2 % 2 != 0 or matrix.shape[1] != n2:
        raise ValueError("expected a square matrix of even dimension")
    N = n2 // 2
    _, star = _indices(N)
    E = np.eye(n2, dtype=complex)
    for m in range(2, N + 1):
        E[star(m - 1), star(m)] = 1.0
    return E.T @ (matrix / 2j) @ E


def det_dense(matrix: np.ndarray, pivot_threshold: float = 1e-13) -> complex:
    """Determinant via pivoted LU elimination.

    Raises
    ------
    SingularMatrix
        If the smallest pivot falls below ``pivot_threshold`` relative to
        the largest one.
    """
    matrix = np.asarray(matrix, dtype=complex)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)  # tiny pivots raise below
        lu, piv = lu_factor(matrix, check_finite=False)
    diag = np.abs(np.diag(lu))
    if diag.min() < pivot_threshold * max(diag.max(), 1e-300):
        raise SingularMatrix(
            f"pivot ratio {diag.min() / diag.max():.3e} below threshold"
        )
    sign = 1.0
    for i, p in enumerate(piv):
        if p != i:
            sign = -sign
    return complex(sign * np.prod(np.diag(lu)))


def det_recursive(coeffs: FluctuationCoeffs) -> DeterminantPair:
    """Laplace recursion for the block-tridiagonal reduced determinant.

    With a_k = tau A_k / 2 hbar (same for b, c) and cm_k = c_k - i,
    cp_k = c_k + i, g_k = b_k + b_{k-1}:

        Delta_k = a_k Gamma_k - cm_k^2 Delta_{k-1}
        Gamma_k = g_k Delta_{k-1} - cp_{k-1}^2 Gamma_{k-1}
                  + b_{k-1} (2 cp_{k-1} cm_{k-1} - a_{k-1} b_{k-1}) Delta_{k-2}

    starting from Delta_0 = 1, Delta_1 = a_1 b_1 - cm_1^2, Gamma_1 = b_1.
    The full determinant is 2^{2N} i^{2N} Delta_N; agreement with
    :func:`det_dense` of :func:`build_matrix` is enforced by the test suite.
    """
    half = coeffs.tau / (2.0 * coeffs.hbar)
    a = half * coeffs.A
    b = half * coeffs.B
    c = half * coeffs.C
    cm = c - 1j
    cp = c + 1j

    delta_prev2 = 1.0 + 0.0j  # Delta_0
    delta_prev = a[0] * b[0] - cm[0] ** 2  # Delta_1
    gamma_prev = b[0]  # Gamma_1
    if coeffs.N == 1:
        return DeterminantPair(complex(delta_prev), complex(gamma_prev))

    for k in range(2, coeffs.N + 1):
        i = k - 1
        g_k = b[i] + b[i - 1]
        gamma = (
            g_k * delta_prev
            - cp[i - 1] ** 2 * gamma_prev
            + b[i - 1] * (2.0 * cp[i - 1] * cm[i - 1] - a[i - 1] * b[i - 1]) * delta_prev2
        )
        delta = a[i] * gamma - cm[i] ** 2 * delta_prev
        delta_prev2, delta_prev, gamma_prev = delta_prev, delta, gamma
    return DeterminantPair(complex(delta_prev), complex(gamma_prev))


def _integrate_pair(A, B, C, T: float, steps: int, hbar: float) -> complex:
    """RK4 for Delta' = (A/2hbar) Gamma + (iC/hbar) Delta,
    Gamma' = (2B/hbar) Delta - (iC/hbar) Gamma."""
    h = T / steps
    delta, gamma = 1.0 + 0.0j, 0.0 + 0.0j

    def rhs(t, d, g):
        a, b, c = A(t), B(t), C(t)
        return (
            0.5 * a * g / hbar + 1j * c * d / hbar,
            2.0 * b * d / hbar - 1j * c * g / hbar,
        )

    t = 0.0
    for _ in range(steps):
        k1d, k1g = rhs(t, delta, gamma)
        k2d, k2g = rhs(t + 0.5 * h, delta + 0.5 * h * k1d, gamma + 0.5 * h * k1g)
        k3d, k3g = rhs(t + 0.5 * h, delta + 0.5 * h * k2d, gamma + 0.5 * h * k2g)
        k4d, k4g = rhs(t + h, delta + h * k3d, gamma + h * k3g)
        delta += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d)
        gamma += h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
        t += h
    return delta


def det_continuum(
    A,
    B,
    C,
    T: float,
    steps: int = 512,
    hbar: float = 1.0,
    step_tolerance: float | None = 1e-8,
) -> complex:
    """Continuum fluctuation determinant Delta(T) from coefficient samplers.

    ``A``, ``B``, ``C`` are callables of t (second symbol derivatives along a
    stationary trajectory).  Initial data Delta(0) = 1, Gamma(0) = 0.

    Raises
    ------
    StepTooLarge
        If halving the step moves Delta(T) by more than ``step_tolerance``.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    if T == 0:
        return 1.0 + 0.0j
    coarse = _integrate_pair(A, B, C, T, steps, hbar)
    if step_tolerance is None:
        return coarse
    fine = _integrate_pair(A, B, C, T, 2 * steps, hbar)
    if abs(fine - coarse) > step_tolerance:
        raise StepTooLarge(
            f"halving the step moved Delta(T) by {abs(fine - coarse):.3e} "
            f"(tolerance {step_tolerance:.3e}); increase steps"
        )
    return fine
