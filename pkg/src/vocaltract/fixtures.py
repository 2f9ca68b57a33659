"""
Closed-form ducts and spectra.

Two exactly solvable families are used as independent oracles:

* linear radius r(x) = r0 (1 + a x): zero potential, cot(theta) = -a and
  Jost function F(k) = k + i a;
* constant potential q = v on (0, ell), zero beyond, with an arbitrary
  boundary parameter, where everything is elementary in
  kappa = sqrt(k^2 - v).

Also here: a synthetic 44-point area table in the layout of an MRI area
function, and a seeded generator of smooth random ducts.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .core import AreaFunction, Grid1D, PhysicalConstants, PressureSpectrum, RadiusProfile, resample_area_table
from .direct import fit_tail_constant


def _sinc_kappa(kappa, x):
    """sin(kappa x)/kappa, continuous at kappa = 0."""
    kappa = np.asarray(kappa, dtype=complex)
    small = np.abs(kappa) < 1e-12
    safe = np.where(small, 1.0, kappa)
    return np.where(small, x, np.sin(safe * x) / safe)


# -----------------------------------------------------------------------------
# Constant potential
# -----------------------------------------------------------------------------

def constant_jost(k, v: float, cot_theta: float, ell: float):
    """Exact Jost function for q = v on (0, ell)."""
    k = np.asarray(k, dtype=complex)
    kappa = np.sqrt(k * k - v)
    e = np.exp(1j * k * ell)
    c, s = np.cos(kappa * ell), _sinc_kappa(kappa, ell)
    f0 = e * (c - 1j * k * s)
    df0 = e * (kappa**2 * s + 1j * k * c)
    return -1j * (df0 + cot_theta * f0)


def constant_jost_solution(k, x, v: float, ell: float):
    """f(k, x) on [0, ell] for q = v, continuing e^{ikx} beyond ell."""
    k = np.asarray(k, dtype=complex)
    x = np.asarray(x, dtype=float)
    kappa = np.sqrt(k * k - v)
    d = x - ell
    return np.exp(1j * k * ell) * (np.cos(kappa * d) + 1j * k * _sinc_kappa(kappa, d))


def constant_regular(k, x, v: float, cot_theta: float):
    """phi(k, x) = cos(kappa x) - cot(theta) sin(kappa x)/kappa for x in [0, ell]."""
    k = np.asarray(k, dtype=complex)
    kappa = np.sqrt(k * k - v)
    return np.cos(kappa * x) - cot_theta * _sinc_kappa(kappa, x)


def constant_regular_derivative(k, x, v: float, cot_theta: float):
    k = np.asarray(k, dtype=complex)
    kappa = np.sqrt(k * k - v)
    return -kappa**2 * _sinc_kappa(kappa, x) - cot_theta * np.cos(kappa * x)


def constant_bound_states(v: float, cot_theta: float, ell: float, beta_max: float = 2.0, n: int = 4000):
    """Zeros beta > 0 of H(beta) = -i F(i beta) for the constant potential."""
    H = lambda b: float(np.real(-1j * constant_jost(1j * b, v, cot_theta, ell)))
    grid = np.linspace(1e-6, beta_max, n)
    vals = np.array([H(b) for b in grid])
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        roots.append(brentq(H, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15))
    return roots


def constant_gl_norming(beta: float, v: float, cot_theta: float, ell: float) -> float:
    """g = 1 / sqrt(int_0^inf phi(i beta, x)^2 dx) for a bound state at i beta.

    Beyond ell the bound state decays as phi(i beta, ell) e^{-beta (x - ell)}.
    """
    phi = lambda x: float(np.real(constant_regular(1j * beta, x, v, cot_theta)))
    inner = quad(lambda x: phi(x) ** 2, 0.0, ell, limit=400, epsabs=1e-14, epsrel=1e-13)[0]
    return 1.0 / np.sqrt(inner + phi(ell) ** 2 / (2.0 * beta))


def constant_radius(v: float, cot_theta: float, ell: float, r0: float, n: int = 1601) -> RadiusProfile:
    """Radius r0 phi(0, x) of the constant-potential duct (must stay positive)."""
    grid = Grid1D.over(0.0, ell, n)
    x = grid.points
    r = r0 * np.real(constant_regular(0.0, x, v, cot_theta))
    dr = r0 * np.real(constant_regular_derivative(0.0, np.array([0.0, ell]), v, cot_theta))
    return RadiusProfile(grid, r, dr[0], dr[1])


def spectrum_from_jost(F, kgrid: Grid1D, p_inf: float) -> PressureSpectrum:
    """|P| = p_inf k / |F(k)| for a callable Jost function."""
    k = kgrid.points
    values = p_inf * k / np.abs(F(k))
    return PressureSpectrum(kgrid, values, p_inf, fit_tail_constant(k, values, p_inf))


def constant_spectrum(v: float, cot_theta: float, ell: float, p_inf: float, kgrid: Grid1D) -> PressureSpectrum:
    return spectrum_from_jost(lambda k: constant_jost(k, v, cot_theta, ell), kgrid, p_inf)


# -----------------------------------------------------------------------------
# Linear radius
# -----------------------------------------------------------------------------

def linear_radius(a: float, ell: float, r0: float = 1.0, n: int = 1601) -> RadiusProfile:
    """r(x) = r0 (1 + a x)."""
    return RadiusProfile.from_function(lambda x: r0 * (1.0 + a * x), ell, n,
                                       dfunc=lambda x: r0 * a)


def linear_spectrum(a: float, p_inf: float, kgrid: Grid1D) -> PressureSpectrum:
    """Exact |P| = k p_inf / sqrt(k^2 + a^2)."""
    return spectrum_from_jost(lambda k: k + 1j * a, kgrid, p_inf)


def linear_candidates(a: float, ell: float, p_inf: float, x,
                      consts: PhysicalConstants = PhysicalConstants()):
    """The two closed-form candidates sqrt(c mu / (pi p_inf (1 +- a ell))) (1 +- a x)."""
    x = np.asarray(x, dtype=float)
    cm = consts.c_mu / (np.pi * p_inf)
    plus = np.sqrt(cm / (1.0 + a * ell)) * (1.0 + a * x)
    minus = np.sqrt(cm / (1.0 - a * ell)) * (1.0 - a * x) if a * ell < 1 else None
    return plus, minus


# -----------------------------------------------------------------------------
# Smooth and tabulated ducts
# -----------------------------------------------------------------------------

def bump_radius(ell: float = 16.0, amp: float = 0.3, center: float = 8.0, width: float = 1.0,
                r0: float = 1.0, n: int = 1601) -> RadiusProfile:
    """r(x) = r0 (1 + amp exp(-((x - center)/width)^2))."""
    f = lambda x: r0 * (1.0 + amp * np.exp(-((x - center) / width) ** 2))
    df = lambda x: r0 * amp * np.exp(-((x - center) / width) ** 2) * (-2.0 * (x - center) / width**2)
    return RadiusProfile.from_function(f, ell, n, dfunc=df)


def smooth_random_radius(seed: int, ell: float = 16.0, n: int = 801, n_modes: int = 3,
                         max_rel: float = 0.25, lip_slope: float | None = None) -> RadiusProfile:
    """Smooth positive duct from a few low-order cosine modes plus a lip flare.

    The radius is 1 + sum_m c_m (1 - cos(2 pi m x / ell))/2 + s x^2/(2 ell),
    so r'(0) = 0 and r'(ell) = s, with s drawn from [-0.04, 0.06] unless given.
    """
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(-max_rel, max_rel, n_modes) / np.arange(1, n_modes + 1)
    s = rng.uniform(-0.04, 0.06) if lip_slope is None else float(lip_slope)
    m = np.arange(1, n_modes + 1)[:, None]

    def f(x):
        x = np.atleast_1d(x)
        modes = (coeffs[:, None] * 0.5 * (1.0 - np.cos(2 * np.pi * m * x / ell))).sum(axis=0)
        return 1.0 + modes + s * x**2 / (2.0 * ell)

    def df(x):
        x = np.atleast_1d(x)
        modes = (coeffs[:, None] * 0.5 * (2 * np.pi * m / ell) * np.sin(2 * np.pi * m * x / ell)).sum(axis=0)
        return float((modes + s * x / ell)[0])

    grid = Grid1D.over(0.0, ell, n)
    values = f(grid.points)
    return RadiusProfile(grid, values, df(0.0), df(ell))


def synthetic_vowel_table(n_points: int = 44, ell: float = 16.11):
    """A 44-row (x_cm, area_cm2) table shaped like an open vowel.

    Narrow pharynx, wide oral cavity and a flaring lip opening, so that the
    last segment rises and r'(ell) > 0.  Areas are rounded to 0.01 cm^2 as
    in published tables.
    """
    x = np.linspace(0.0, ell, n_points)
    s = x / ell
    area = (1.8
            - 1.0 * np.exp(-((s - 0.30) / 0.15) ** 2)
            + 2.0 * np.exp(-((s - 0.62) / 0.14) ** 2)
            + 2.5 * s**8)
    return x, np.round(area, 2)


def area_from_table(x, area, n: int = 1612) -> AreaFunction:
    """Linear interpolation of a table onto ``n`` uniform samples."""
    return resample_area_table(x, area, n)


def vowel_table_path():
    """Path of the shipped 44-row synthetic area table (``x_cm,area_cm2``)."""
    from importlib.resources import files

    return files("vocaltract") / "data" / "vowel_table_44.csv"
