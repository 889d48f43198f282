"""Complex-trajectory boundary-value solver and semiclassical propagators.

Trajectories solve i hbar du/dt = +dH/dv, i hbar dv/dt = -dH/du with the
mixed data u(0) = z', v(T) = conj(z''), Newton-shooting on the unknown v(0).
The variational pair (du, dv) with (0, 1) initial data is integrated along,
supplying both the Newton Jacobian and the fluctuation prefactor through
d2S/du'dv'' = -i hbar / dv(T).
"""

from __future__ import annotations

import cmath
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .algebra import OperatorPoly, SymbolPoly, symbol_for_form
from .coherent import overlap
from .errors import CausticWarning, NoConvergence, SingularMonodromy, StepTooLarge

__all__ = [
    "ComplexTrajectory",
    "TrajectoryContribution",
    "SemiclassicalResult",
    "solve_bvp",
    "action_S",
    "correction_I",
    "d2S",
    "tracked_prefactor",
    "trajectory_hessian_samplers",
    "semiclassical_K",
]

FORM_SIGMA = {"q": +1.0, "p": -1.0, "w": 0.0}


@dataclass
class ComplexTrajectory:
    """A converged complexified trajectory with its linearised flow.

    ``du``/``dv`` hold the variational solution with (du, dv)(0) = (0, 1);
    ``v`` is genuinely independent of ``conj(u)`` away from quadratic
    Hamiltonians.
    """

    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    v0: complex
    residual: float
    hbar: float
    newton_iters: int


def _term_tuples(sym: SymbolPoly):
    return tuple((m, n, c) for (m, n), c in sym.terms.items())


def _make_field(sym: SymbolPoly, hbar: float):
    """Fast right-hand side for the coupled (u, v, du, dv) system."""
    hu = _term_tuples(sym.derivative("u"))
    hv = _term_tuples(sym.derivative("v"))
    huu = _term_tuples(sym.derivative("u").derivative("u"))
    hvv = _term_tuples(sym.derivative("v").derivative("v"))
    huv = _term_tuples(sym.derivative("u").derivative("v"))
    ih = 1j / hbar

    def rhs(u, v, du, dv):
        s_hu = s_hv = s_huu = s_hvv = s_huv = 0.0j
        for m, n, c in hu:
            s_hu += c * v**m * u**n
        for m, n, c in hv:
            s_hv += c * v**m * u**n
        for m, n, c in huu:
            s_huu += c * v**m * u**n
        for m, n, c in hvv:
            s_hvv += c * v**m * u**n
        for m, n, c in huv:
            s_huv += c * v**m * u**n
        return (
            -ih * s_hv,
            ih * s_hu,
            -ih * (s_huv * du + s_hvv * dv),
            ih * (s_huu * du + s_huv * dv),
        )

    return rhs


def _integrate(rhs, z0: complex, v0: complex, T: float, steps: int):
    """Fixed-step RK4 on the coupled trajectory + variational system."""
    h = T / steps
    u, v, du, dv = complex(z0), complex(v0), 0.0j, 1.0 + 0.0j
    us = np.empty(steps + 1, dtype=complex)
    vs = np.empty(steps + 1, dtype=complex)
    dus = np.empty(steps + 1, dtype=complex)
    dvs = np.empty(steps + 1, dtype=complex)
    us[0], vs[0], dus[0], dvs[0] = u, v, du, dv
    h2, h6 = 0.5 * h, h / 6.0
    for i in range(steps):
        a1, b1, c1, d1 = rhs(u, v, du, dv)
        a2, b2, c2, d2 = rhs(u + h2 * a1, v + h2 * b1, du + h2 * c1, dv + h2 * d1)
        a3, b3, c3, d3 = rhs(u + h2 * a2, v + h2 * b2, du + h2 * c2, dv + h2 * d2)
        a4, b4, c4, d4 = rhs(u + h * a3, v + h * b3, du + h * c3, dv + h * d3)
        u += h6 * (a1 + 2.0 * (a2 + a3) + a4)
        v += h6 * (b1 + 2.0 * (b2 + b3) + b4)
        du += h6 * (c1 + 2.0 * (c2 + c3) + c4)
        dv += h6 * (d1 + 2.0 * (d2 + d3) + d4)
        us[i + 1], vs[i + 1], dus[i + 1], dvs[i + 1] = u, v, du, dv
    return us, vs, dus, dvs


def quadratic_guess(
    H_sym: SymbolPoly, zp: complex, zpp_star: complex, T: float, hbar: float
) -> complex:
    """Initial v(0): solve the boundary problem for the quadratic part of H."""
    a = 2.0 * H_sym.terms.get((0, 2), 0.0)  # d2H/du2
    b = 2.0 * H_sym.terms.get((2, 0), 0.0)  # d2H/dv2
    c = H_sym.terms.get((1, 1), 0.0)
    J = (-1j / hbar) * np.array([[c, b], [-a, -c]], dtype=complex)
    M = expm(J * T)
    if abs(M[1, 1]) < 1e-12:
        return zpp_star
    return complex((zpp_star - M[1, 0] * zp) / M[1, 1])


def solve_bvp(
    H_sym: SymbolPoly,
    zp: complex,
    zpp_star: complex,
    T: float,
    steps: int = 512,
    guess: complex | None = None,
    hbar: float = 1.0,
    tol: float = 1e-10,
    max_iter: int = 30,
    step_tolerance: float | None = None,
) -> ComplexTrajectory:
    """Newton shooting for the mixed boundary-value trajectory.

    Parameters
    ----------
    guess : complex, optional
        Starting v(0); default propagates conj(z'') backwards with the
        quadratic part of the symbol.
    step_tolerance : float, optional
        When set, re-integrate the converged trajectory with half the step
        and require the endpoint shift to stay below this bound.

    Raises
    ------
    NoConvergence
        If Newton does not bring |v(T) - conj(z'')| below ``tol``.
    StepTooLarge
        If the step-halving error estimate exceeds ``step_tolerance``.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    if steps < 16:
        raise ValueError("need at least 16 integration steps")
    steps += steps % 2  # Simpson-friendly grids
    rhs = _make_field(H_sym, hbar)
    v0 = quadratic_guess(H_sym, zp, zpp_star, T, hbar) if guess is None else complex(guess)

    us = vs = dus = dvs = None
    residual = np.inf
    for iteration in range(max_iter + 1):
        try:
            us, vs, dus, dvs = _integrate(rhs, zp, v0, T, steps)
        except OverflowError as exc:
            raise NoConvergence(
                f"trajectory blew up from guess v(0) = {v0:.6g}"
            ) from exc
        mismatch = vs[-1] - zpp_star
        residual = abs(mismatch)
        if not np.isfinite(residual):
            raise NoConvergence(
                f"trajectory blew up from guess v(0) = {v0:.6g}"
            )
        if residual < tol:
            break
        jac = dvs[-1]
        if abs(jac) < 1e-14:
            raise NoConvergence("singular shooting Jacobian dv(T)/dv(0)")
        v0 = v0 - mismatch / jac
    else:
        raise NoConvergence(
            f"Newton stalled at residual {residual:.3e} after {max_iter} iterations"
        )

    if step_tolerance is not None:
        us2, vs2, _, _ = _integrate(rhs, zp, v0, T, 2 * steps)
        err = max(abs(us2[-1] - us[-1]), abs(vs2[-1] - vs[-1]))
        if err > step_tolerance:
            raise StepTooLarge(
                f"step-halving estimate {err:.3e} exceeds {step_tolerance:.3e}"
            )

    return ComplexTrajectory(
        times=np.linspace(0.0, T, steps + 1),
        u=us,
        v=vs,
        du=dus,
        dv=dvs,
        v0=complex(v0),
        residual=float(residual),
        hbar=hbar,
        newton_iters=iteration,
    )


def _simpson(values: np.ndarray, h: float) -> complex:
    n = len(values) - 1
    if n % 2 != 0:
        raise ValueError("Simpson quadrature needs an even number of intervals")
    acc = values[0] + values[-1] + 4.0 * np.sum(values[1:-1:2]) + 2.0 * np.sum(
        values[2:-1:2]
    )
    return complex(acc * h / 3.0)


def action_S(traj: ComplexTrajectory, H_sym: SymbolPoly) -> complex:
    """Complex action along a trajectory, boundary terms included.

    S = int_0^T [ i hbar/2 (du/dt v - dv/dt u) - H ] dt
        - i hbar/2 (u(T) v(T) + u(0) v(0)).

    Along solutions the integrand equals (u H_u + v H_v)/2 - H exactly, so no
    numerical differentiation enters; Simpson on the integrator grid matches
    the RK4 order.
    """
    u, v = traj.u, traj.v
    Hu, Hv = H_sym.grad(u, v)
    integrand = 0.5 * (u * np.asarray(Hu) + v * np.asarray(Hv)) - H_sym.eval(u, v)
    h = traj.times[1] - traj.times[0]
    boundary = -0.5j * traj.hbar * (u[-1] * v[-1] + u[0] * v[0])
    return _simpson(integrand, h) + boundary


def correction_I(traj: ComplexTrajectory, H_sym: SymbolPoly) -> complex:
    """Ordering correction I = 1/2 int_0^T d2H/du dv dt along the trajectory."""
    mixed = H_sym.derivative("u").derivative("v")
    vals = np.asarray(mixed.eval(traj.u, traj.v), dtype=complex)
    if vals.ndim == 0:
        vals = np.full(len(traj.times), complex(vals))
    h = traj.times[1] - traj.times[0]
    return 0.5 * _simpson(vals, h)


def d2S(
    traj: ComplexTrajectory,
    H_sym: SymbolPoly | None = None,
    singular_threshold: float = 1e-12,
) -> tuple[complex, complex]:
    """(d2S/du'dv'', Delta(T)) from the linearised flow.

    The variational pair integrated with (du, dv)(0) = (0, 1) gives
    Omega(T) = 2i dv(T), hence d2S/du'dv'' = 2 hbar / Omega(T) and
    Delta(T) = Omega(T) / 2i = dv(T).

    Raises
    ------
    SingularMonodromy
        If |Omega(T)| is below ``singular_threshold`` (caustic).
    """
    del H_sym  # second derivatives were already consumed by the integration
    omega_T = 2j * traj.dv[-1]
    if abs(omega_T) < singular_threshold:
        raise SingularMonodromy(f"|Omega(T)| = {abs(omega_T):.3e}; caustic")
    return complex(2.0 * traj.hbar / omega_T), complex(traj.dv[-1])


def tracked_prefactor(
    traj: ComplexTrajectory, caustic_threshold: float = 1e-4
) -> complex:
    """sqrt((i/hbar) d2S/du'dv''), branch-tracked continuously from T = 0.

    Along the trajectory (i/hbar) d2S(t) = 1/dv(t), which starts at 1;
    following the square root step by step fixes the branch without any
    Maslov bookkeeping.  Emits :class:`CausticWarning` when the tracked
    monodromy component gets small (the prefactor is blowing up).
    """
    prev = 1.0 + 0.0j
    if np.min(np.abs(traj.dv)) < caustic_threshold:
        warnings.warn("prefactor tracked through a near-caustic", CausticWarning)
    for dv_k in traj.dv:
        root = cmath.sqrt(1.0 / dv_k)
        if abs(-root - prev) < abs(root - prev):
            root = -root
        prev = root
    return prev


def trajectory_hessian_samplers(traj: ComplexTrajectory, H_sym: SymbolPoly):
    """Callables A(t), B(t), C(t) of the symbol Hessian along a trajectory.

    A = d2H/du2, B = d2H/dv2, C = d2H/du dv, evaluated on a cubic-Hermite
    dense output of (u, v) built from the stored nodes and the exact vector
    field (matching the integrator's fourth order).  Feed these to the
    continuum fluctuation-determinant solver.
    """
    from scipy.interpolate import CubicHermiteSpline

    Hu = H_sym.derivative("u")
    Hv = H_sym.derivative("v")
    ih = 1j / traj.hbar
    dudt = -ih * np.asarray(Hv.eval(traj.u, traj.v))
    dvdt = ih * np.asarray(Hu.eval(traj.u, traj.v))

    def spline(vals, derivs):
        re = CubicHermiteSpline(traj.times, vals.real, derivs.real)
        im = CubicHermiteSpline(traj.times, vals.imag, derivs.imag)
        return lambda t: re(t) + 1j * im(t)

    u_of = spline(traj.u, dudt)
    v_of = spline(traj.v, dvdt)
    Huu = Hu.derivative("u")
    Hvv = Hv.derivative("v")
    Huv = Hu.derivative("v")
    return (
        lambda t: Huu.eval(u_of(t), v_of(t)),
        lambda t: Hvv.eval(u_of(t), v_of(t)),
        lambda t: Huv.eval(u_of(t), v_of(t)),
    )


@dataclass
class TrajectoryContribution:
    """One stationary trajectory's share of the semiclassical propagator."""

    v0: complex
    S: complex
    I: complex
    d2S: complex
    residual: float
    prefactor: complex
    term: complex


@dataclass
class SemiclassicalResult:
    K: complex
    form: str
    contributions: list

    def __complex__(self):
        return complex(self.K)


def semiclassical_K(
    form: str,
    H: OperatorPoly,
    zp: complex,
    zpp: complex,
    T: float,
    steps: int = 512,
    guesses=None,
    include_correction: bool = True,
    tol: float = 1e-10,
    dedupe: float = 1e-6,
) -> SemiclassicalResult:
    """Semiclassical coherent-state propagator in the q, p or w form.

    K = sum_nu sqrt((i/hbar) d2S_nu) exp{(i/hbar)(S_nu + sigma I_nu)
        - (|z'|^2 + |z''|^2)/2}

    with sigma = +1 (q), -1 (p), 0 (w).  Every converged, deduplicated
    trajectory is reported; contributing-saddle selection is left to the
    caller.

    Raises
    ------
    NoConvergence
        If no shooting guess converges.
    """
    form = form.lower()
    if form not in FORM_SIGMA:
        raise ValueError(f"unknown form {form!r}; expected q, p or w")
    sigma = FORM_SIGMA[form] if include_correction else 0.0
    if T == 0:
        K = complex(overlap(zpp, zp))
        return SemiclassicalResult(K, form, [])

    sym = symbol_for_form(H, form)
    hbar = H.hbar
    zpp_star = complex(np.conj(zpp))
    guess_list = list(guesses) if guesses is not None else [None]

    trajectories: list[ComplexTrajectory] = []
    failures = []
    for guess in guess_list:
        try:
            traj = solve_bvp(
                sym, zp, zpp_star, T, steps=steps, guess=guess, hbar=hbar, tol=tol
            )
        except NoConvergence as exc:
            failures.append(str(exc))
            continue
        if all(abs(traj.v0 - kept.v0) > dedupe for kept in trajectories):
            trajectories.append(traj)
    if not trajectories:
        raise NoConvergence(
            "no shooting guess converged: " + "; ".join(failures or ["(none tried)"])
        )

    gauss = -0.5 * (abs(zp) ** 2 + abs(zpp) ** 2)
    contributions = []
    total = 0.0j
    for traj in trajectories:
        S = action_S(traj, sym)
        I_corr = correction_I(traj, sym)
        d2s, _ = d2S(traj)
        pref = tracked_prefactor(traj)
        term = pref * cmath.exp((1j / hbar) * (S + sigma * I_corr) + gauss)
        total += term
        contributions.append(
            TrajectoryContribution(
                v0=traj.v0,
                S=S,
                I=I_corr,
                d2S=d2s,
                residual=traj.residual,
                prefactor=pref,
                term=term,
            )
        )
    return SemiclassicalResult(complex(total), form, contributions)
