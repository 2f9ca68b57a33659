"""
Forward problem: radius profile -> Jost function -> lip pressure spectrum.

Two independent routes are provided.  The Jost route integrates the
half-line Schrodinger equation backward from the lips and forms |P| from
the Jost function; the Webster route integrates the first-order
pressure/volume-velocity system directly.  Both use an adaptive
Runge-Kutta 4(5) integrator and all per-k solves are batched into one
vector-valued ODE.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .core import (
    AreaFunction,
    Grid1D,
    PhysicalConstants,
    PotentialProfile,
    PressureSpectrum,
    RadiusProfile,
)

RTOL = 1e-9
ATOL = 1e-9

TAIL_FRACTION = 0.05


class IntegrationError(RuntimeError):
    """The ODE integrator failed to reach the end of the interval."""


# -----------------------------------------------------------------------------
# Radius -> potential
# -----------------------------------------------------------------------------

def second_derivative(values, step: float) -> np.ndarray:
    """Centered second differences, second-order one-sided at the ends."""
    v = np.asarray(values, dtype=float)
    if v.size < 4:
        raise ValueError("need at least 4 samples for a second derivative")
    d2 = np.empty_like(v)
    d2[1:-1] = v[2:] - 2.0 * v[1:-1] + v[:-2]
    d2[0] = 2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]
    d2[-1] = 2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]
    return d2 / step**2


def potential_from_radius(profile: RadiusProfile) -> PotentialProfile:
    """q = r''/r on the profile grid and cot(theta) = -r'(0)/r(0)."""
    r = profile.values
    if np.any(r <= 0):
        raise ValueError("radius must be positive")
    q = second_derivative(r, profile.grid.step) / r
    return PotentialProfile(profile.grid, q, -profile.slope0 / profile.r0)


def extend_radius(profile: RadiusProfile, x_beyond):
    """Linear continuation r(ell) + r'(ell) (x - ell) past the lips; keeps q = 0 there."""
    x = np.asarray(x_beyond, dtype=float)
    if np.any(x < profile.ell):
        raise ValueError("extension is only defined for x >= ell")
    out = profile.rl + profile.slopeL * (x - profile.ell)
    return float(out) if out.ndim == 0 else out


def p_infinity_from_radius(profile: RadiusProfile, consts: PhysicalConstants = PhysicalConstants()) -> float:
    """High-frequency plateau c mu / (pi r(0) r(ell))."""
    return consts.c_mu / (np.pi * profile.r0 * profile.rl)


# -----------------------------------------------------------------------------
# Schrodinger solutions
# -----------------------------------------------------------------------------

def _as_k_array(k):
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    if k.ndim != 1:
        raise ValueError("k must be a scalar or a 1-D array")
    return k


def _integrate(potential: PotentialProfile, k, x_start, x_end, y0, dy0, x_eval=None,
               rtol=RTOL, atol=ATOL):
    """Integrate psi'' = (q - k^2) psi for every k in one vector system."""
    k2 = k * k
    n = k.size
    xs, qs = potential.x, potential.values

    def rhs(x, y):
        q = np.interp(x, xs, qs)
        return np.concatenate((y[n:], (q - k2) * y[:n]))

    # the eighth-order pair is much cheaper when tight tolerances are requested
    method = "DOP853" if rtol < 1e-10 else "RK45"
    sol = solve_ivp(rhs, (x_start, x_end), np.concatenate((y0, dy0)),
                    method=method, rtol=rtol, atol=atol, t_eval=x_eval)
    if sol.status != 0:
        raise IntegrationError(sol.message)
    return sol


@dataclass(frozen=True)
class JostSolution:
    """Jost function values and, optionally, f(k, x) and f'(k, x) on ``x``."""

    k: np.ndarray
    F: np.ndarray
    x: np.ndarray = None
    f: np.ndarray = None     # shape (len(k), len(x))
    df: np.ndarray = None


def jost_solution(potential: PotentialProfile, k, x_eval=None, rtol=RTOL, atol=ATOL) -> JostSolution:
    """Integrate from x = ell down to 0 with f = e^{ik ell}, f' = ik e^{ik ell}.

    ``k`` may be complex; the Jost function is entire because q has compact
    support.  When ``x_eval`` is given the solution is also sampled there.
    """
    k = _as_k_array(k)
    ell = potential.ell
    e = np.exp(1j * k * ell)
    xe = None
    if x_eval is not None:
        xe = np.sort(np.asarray(x_eval, dtype=float))[::-1]
    sol = _integrate(potential, k, ell, 0.0, e, 1j * k * e, xe, rtol, atol)
    n = k.size
    f0, df0 = sol.y[:n, -1], sol.y[n:, -1]
    F = -1j * (df0 + potential.cot_theta * f0)
    if xe is None:
        return JostSolution(k, F)
    return JostSolution(k, F, xe[::-1], sol.y[:n, ::-1], sol.y[n:, ::-1])


def jost_from_potential(potential: PotentialProfile, k, rtol=RTOL, atol=ATOL):
    """Jost function F(k) = -i [f'(k,0) + cot(theta) f(k,0)]."""
    F = jost_solution(potential, k, rtol=rtol, atol=atol).F
    return F[0] if np.ndim(k) == 0 else F


def jost_derivative(potential: PotentialProfile, k, step: float = 1e-4):
    """dF/dk by a fourth-order central difference of the entire evaluator."""
    k = complex(k)
    pts = np.array([k - 2 * step, k - step, k + step, k + 2 * step])
    F = jost_from_potential(potential, pts, rtol=1e-12, atol=1e-14)
    return (F[0] - 8 * F[1] + 8 * F[2] - F[3]) / (12 * step)


class JostEvaluator:
    """Callable F(k) for a compactly supported potential, any complex k.

    Evaluation is by the backward Jost initial-value problem at tight
    tolerance, so the result is accurate enough to locate zeros off the
    real axis and to difference numerically.
    """

    def __init__(self, potential: PotentialProfile, rtol: float = 1e-12, atol: float = 1e-14):
        self.potential = potential
        self.rtol = rtol
        self.atol = atol

    def __call__(self, k):
        return jost_from_potential(self.potential, k, rtol=self.rtol, atol=self.atol)

    def derivative(self, k, step: float = 1e-4):
        return jost_derivative(self.potential, k, step)


def regular_solution(potential: PotentialProfile, k, x_eval=None, rtol=RTOL, atol=ATOL):
    """phi(k, x) with phi(k,0) = 1, phi'(k,0) = -cot(theta), integrated forward.

    Returns ``(x, phi, dphi)`` with arrays of shape (len(k), len(x)).
    """
    k = _as_k_array(k)
    x = potential.x if x_eval is None else np.sort(np.asarray(x_eval, dtype=float))
    ones = np.ones_like(k)
    sol = _integrate(potential, k, 0.0, potential.ell, ones, -potential.cot_theta * ones,
                     x, rtol, atol)
    n = k.size
    return x, sol.y[:n], sol.y[n:]


# -----------------------------------------------------------------------------
# Webster system
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class WebsterState:
    """Normalized pressure and volume velocity P~, V~ at one x for each k."""

    k: np.ndarray
    p_tilde: np.ndarray
    v_tilde: np.ndarray


def _area_model(profile, interpolation: str):
    """Return (A(x) callable, A(ell), A'(ell), ell) for a radius or area profile."""
    if interpolation not in ("cubic", "linear"):
        raise ValueError("interpolation must be 'cubic' or 'linear'")
    x = profile.grid.points
    ell = profile.grid.stop
    if isinstance(profile, RadiusProfile):
        if interpolation == "cubic":
            spline = CubicSpline(x, profile.values, bc_type=((1, profile.slope0), (1, profile.slopeL)))
            area = lambda s: np.pi * spline(s) ** 2
        else:
            area = lambda s: np.pi * np.interp(s, x, profile.values) ** 2
        return area, np.pi * profile.rl**2, 2.0 * np.pi * profile.rl * profile.slopeL, ell
    if isinstance(profile, AreaFunction):
        if interpolation == "cubic":
            spline = CubicSpline(x, profile.values, bc_type=((1, profile.slope0), (1, profile.slopeL)))
            area = spline
        else:
            area = lambda s: np.interp(s, x, profile.values)
        return area, float(profile.values[-1]), float(profile.slopeL), ell
    raise TypeError("expected a RadiusProfile or AreaFunction")


def forward_webster(profile, k, consts: PhysicalConstants = PhysicalConstants(),
                    interpolation: str = "cubic", rtol=RTOL, atol=ATOL) -> WebsterState:
    """Integrate the pressure/volume-velocity system from the lips to the glottis.

    Starts from P~(ell) = 1 and V~(ell) = [A(ell) + A'(ell)/(2ik)]/(c mu) and
    returns the state at x = 0.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if np.any(k <= 0):
        raise ValueError("forward Webster solve needs k > 0 (V~(ell) is singular at k = 0)")
    area, a_l, da_l, ell = _area_model(profile, interpolation)
    cmu = consts.c_mu
    n = k.size

    def rhs(x, y):
        a = area(x)
        p, v = y[:n], y[n:]
        return np.concatenate((-1j * cmu * k * v / a, -1j * k * a * p / cmu))

    p0 = np.ones(n, dtype=complex)
    v0 = (a_l + da_l / (2j * k)) / cmu
    sol = solve_ivp(rhs, (ell, 0.0), np.concatenate((p0, v0)), method="RK45", rtol=rtol, atol=atol)
    if sol.status != 0:
        raise IntegrationError(sol.message)
    return WebsterState(k, sol.y[:n, -1], sol.y[n:, -1])


# -----------------------------------------------------------------------------
# Spectra
# -----------------------------------------------------------------------------

def fit_tail_constant(k, values, p_inf: float, fraction: float = TAIL_FRACTION) -> float:
    """Least-squares C in |P|^2/p_inf^2 = 1 + C/k^2 over the top ``fraction`` of k."""
    k = np.asarray(k, dtype=float)
    m = max(2, int(round(fraction * k.size)))
    kk, pp = k[-m:], np.asarray(values, dtype=float)[-m:]
    u = 1.0 / kk**2
    y = (pp / p_inf) ** 2 - 1.0
    return float(np.dot(u, y) / np.dot(u, u))


def estimate_plateau(k, values, fraction: float = TAIL_FRACTION) -> tuple:
    """Estimate (p_inf, C) from the tail of a measured spectrum.

    Regresses |P|^2 on 1/k^2 over the top ``fraction`` of the k-samples, so
    the intercept is p_inf^2 and the slope is p_inf^2 C.
    """
    k = np.asarray(k, dtype=float)
    m = max(3, int(round(fraction * k.size)))
    u = 1.0 / k[-m:] ** 2
    y = np.asarray(values, dtype=float)[-m:] ** 2
    slope, intercept = np.polyfit(u, y, 1)
    if intercept <= 0:
        raise ValueError("tail regression gave a non-positive plateau")
    return float(np.sqrt(intercept)), float(slope / intercept)


def _make_spectrum(kgrid: Grid1D, values, p_inf: float) -> PressureSpectrum:
    c = fit_tail_constant(kgrid.points, values, p_inf)
    return PressureSpectrum(kgrid, values, p_inf, c)


def pressure_spectrum(profile, kgrid: Grid1D, consts: PhysicalConstants = PhysicalConstants(),
                      interpolation: str = "cubic") -> PressureSpectrum:
    """|P(k_j, ell)| = 1/|V~(k_j, 0)| on ``kgrid`` via the Webster system.

    The plateau is the exact limit c mu / sqrt(A(0) A(ell)), available
    because the duct is known; the tail constant is then fitted.
    """
    state = forward_webster(profile, kgrid.points, consts, interpolation)
    values = 1.0 / np.abs(state.v_tilde)
    if isinstance(profile, RadiusProfile):
        p_inf = p_infinity_from_radius(profile, consts)
    else:
        p_inf = consts.c_mu / np.sqrt(profile.values[0] * profile.values[-1])
    return _make_spectrum(kgrid, values, p_inf)


def pressure_from_jost(potential: PotentialProfile, kgrid: Grid1D, p_inf: float) -> PressureSpectrum:
    """|P| = p_inf k / |F(k)|, the Jost route for a potential and a plateau."""
    k = kgrid.points
    F = jost_from_potential(potential, k)
    return _make_spectrum(kgrid, p_inf * k / np.abs(F), p_inf)


def pressure_spectrum_jost(profile: RadiusProfile, kgrid: Grid1D,
                           consts: PhysicalConstants = PhysicalConstants()) -> PressureSpectrum:
    """Jost route from a radius: |P| = c mu k / (pi r(0) r(ell) |F(k)|)."""
    return pressure_from_jost(potential_from_radius(profile), kgrid,
                              p_infinity_from_radius(profile, consts))


def asymptotic_tail(source, k):
    """Large-k prediction of |P(k,ell)|^2 / p_inf^2.

    Evaluates 1 - [cot^2(theta) - q(0+)/2 + (q(ell-)/2) cos(2 k ell)] / k^2.
    Only meaningful when q is continuous with finite end limits.
    """
    pot = potential_from_radius(source) if isinstance(source, RadiusProfile) else source
    k = np.asarray(k, dtype=float)
    q0, ql = pot.values[0], pot.values[-1]
    bracket = pot.cot_theta**2 - 0.5 * q0 + 0.5 * ql * np.cos(2.0 * k * pot.ell)
    return 1.0 - bracket / k**2


def small_k_exponent(spectrum: PressureSpectrum) -> float:
    """Log-log slope of |P| over the first two samples.

    Near 1 when |P| vanishes linearly at k = 0 (r'(ell) != 0), near 0 when it
    tends to a nonzero limit (r'(ell) = 0).
    """
    k, p = spectrum.k, spectrum.values
    return float(np.log(p[1] / p[0]) / np.log(k[1] / k[0]))
