"""
From the modulus of the Jost function to its bound-state-free version,
its eligible resonances and the norming constants of the candidate bound
states.

The bound-state-free Jost function is the outer function built from
|F| on the real axis: its phase is the principal-value integral

    phase(k) = (2k/pi) PV int_0^inf [L(t) - L(k)] / (t^2 - k^2) dt,
    L(t) = log|t / F(t)| = log(|P(t)| / p_inf),

evaluated with the singularity subtracted, the logarithmic part of L at
small t integrated in closed form, and the analytic tail L(t) ~ C/(2 t^2)
beyond the data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import spence

from .core import PotentialProfile, PressureSpectrum, ResonanceReport, Scenario
from .direct import jost_solution, regular_solution, small_k_exponent


def _dilog(x):
    """Real dilogarithm Li2(x) for x <= 1."""
    return spence(1.0 - np.asarray(x, dtype=float))


# -----------------------------------------------------------------------------
# Modulus and outer function
# -----------------------------------------------------------------------------

def modulus_of_jost(spectrum: PressureSpectrum) -> np.ndarray:
    """|F(k_j)| = k_j p_inf / |P(k_j, ell)|."""
    if np.any(spectrum.values <= 0):
        raise ValueError("zero pressure at k > 0 cannot come from a class-A duct")
    return spectrum.k * spectrum.p_inf / spectrum.values


@dataclass(frozen=True)
class OuterJost:
    """Bound-state-free Jost function on the real k-grid.

    ``exponent`` is 1 when |P| vanishes linearly at k = 0 and 0 when it
    tends to a nonzero limit; ``f0`` and ``fdot0`` are fitted values of
    F(0) (purely imaginary) and F'(0) (real).
    """

    k: np.ndarray
    values: np.ndarray
    log_modulus: np.ndarray
    phase: np.ndarray
    exponent: int
    tail_c: float
    f0: complex
    fdot0: float


def _log_tail(k, K):
    """int_K^inf log(t/k) / (t^2 - k^2) dt for 0 < k <= K."""
    rho = k / K
    with np.errstate(divide="ignore", invalid="ignore"):
        lr = np.log(rho)
        minus = np.where(rho < 1.0, -lr * np.log1p(-np.minimum(rho, 1 - 1e-300)), 0.0) - _dilog(rho)
    plus = lr * np.log1p(rho) + _dilog(-rho)
    return -0.5 * (minus + plus) / k


def _tail_interval(k, K, C, Lk):
    """int_K^inf [C/(2 t^2) - L(k)] / (t^2 - k^2) dt for k <= K."""
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = np.log((K + k) / (K - k)) / (2.0 * k)
    lg = np.where(np.isclose(k, K, rtol=1e-14, atol=0.0), 0.0, lg)
    # at k = K the bracket C/(2K^2) - L(K) vanishes to the order of the tail model
    return -C / (2.0 * k**2 * K) + (C / (2.0 * k**2) - Lk) * lg


def outer_phase(kgrid_points, L, exponent: int, tail_c: float, k_eval=None) -> np.ndarray:
    """Phase of the outer function at the grid points (or at ``k_eval``,
    which must lie in [k_1, k_max]).

    With s the small-k exponent, R(t) = L(t) - s log t is smooth and even,
    so the integral splits into s times the closed form
    int_0^inf log(t/k)/(t^2 - k^2) dt = pi^2/(4k) and a smooth remainder
    integrated by the trapezoid rule from t = 0, whose node value R(0) is
    extrapolated from the first two samples.
    """
    t = np.asarray(kgrid_points, dtype=float)
    L = np.asarray(L, dtype=float)
    dt = t[1] - t[0]
    if not np.isclose(t[0], dt, rtol=1e-9):
        raise ValueError("k-grid must be k_j = j dk")
    R = L - exponent * np.log(t)
    R0 = (4.0 * R[0] - R[1]) / 3.0
    tt = np.concatenate(([0.0], t))
    RR = np.concatenate(([R0], R))
    w = np.full(tt.size, dt)
    w[0] = w[-1] = 0.5 * dt
    dR = np.gradient(RR, dt, edge_order=2)
    dR[0] = 0.0

    on_grid = k_eval is None
    k = t if on_grid else np.asarray(k_eval, dtype=float)
    if np.any(k < t[0] * (1 - 1e-12)) or np.any(k > t[-1] * (1 + 1e-12)):
        raise ValueError("phase is only evaluated inside the data band")
    Rk = np.interp(k, tt, RR)
    dRk = np.interp(k, tt, dR)

    integral = np.empty(k.size)
    chunk = 256
    for a in range(0, k.size, chunk):
        kk = k[a:a + chunk, None]
        num = RR[None, :] - Rk[a:a + chunk, None]
        den = tt[None, :] ** 2 - kk**2
        with np.errstate(divide="ignore", invalid="ignore"):
            integrand = num / den
        # removable singularity at t = k
        close = np.abs(den) < 1e-14 * kk**2
        if np.any(close):
            rows, cols = np.nonzero(close)
            integrand[rows, cols] = dRk[a:a + chunk][rows] / (2.0 * k[a:a + chunk][rows])
        integral[a:a + chunk] = integrand @ w

    K = t[-1]
    Lk = Rk + exponent * np.log(k)
    # beyond K: R = L - s log t, with L from the tail model
    integral += _tail_interval(k, K, tail_c, Lk)
    if exponent:
        integral -= exponent * _log_tail(k, K)
    return exponent * np.pi / 2.0 + 2.0 * k / np.pi * integral


def _fit_origin(k, values, m: int = 12):
    """Fit Re F = b1 k + b3 k^3 and Im F = a0 + a2 k^2 on the first samples."""
    kk, vv = k[:m], values[:m]
    A_odd = np.column_stack((kk, kk**3))
    A_even = np.column_stack((np.ones_like(kk), kk**2))
    b = np.linalg.lstsq(A_odd, vv.real, rcond=None)[0]
    a = np.linalg.lstsq(A_even, vv.imag, rcond=None)[0]
    return 1j * a[0], b[0]


def outer_jost(spectrum: PressureSpectrum, exponent: int | None = None) -> OuterJost:
    """Bound-state-free Jost function |F(k)| exp(i phase(k)) on the data grid.

    ``exponent`` selects the small-k model of log|P|; by default it is read
    off the first two samples (rounded to 0 or 1).
    """
    modulus = modulus_of_jost(spectrum)
    L = np.log(spectrum.values / spectrum.p_inf)
    if exponent is None:
        s = small_k_exponent(spectrum)
        if not (-0.5 < s < 1.5):
            raise ValueError(f"|P| neither vanishes linearly nor plateaus near k = 0 (exponent {s:.3f})")
        exponent = int(round(s))
    if exponent not in (0, 1):
        raise ValueError("exponent must be 0 or 1")
    # tail constant matched to the last sample: the least-squares constant
    # leaves a jump in L at k_max that the log kernel turns into a phase
    # error growing toward the band edge
    tail_c = 2.0 * spectrum.k_max**2 * L[-1]
    phase = outer_phase(spectrum.k, L, exponent, tail_c)
    values = modulus * np.exp(1j * phase)
    f0, fdot0 = _fit_origin(spectrum.k, values)
    if exponent == 0:
        f0 = 0j
    return OuterJost(spectrum.k, values, L, phase, exponent, tail_c, f0, float(fdot0))


# -----------------------------------------------------------------------------
# Resonances of the outer function
# -----------------------------------------------------------------------------

def resonance_function(potential: PotentialProfile, beta, rtol: float = 1e-12, atol: float = 1e-14):
    """g(beta) = i F(-i beta), real for real beta, evaluated by the Jost IVP."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    F = jost_solution(potential, -1j * beta, rtol=rtol, atol=atol).F
    return np.real(1j * F)


def default_beta_max(potential: PotentialProfile) -> float:
    return 5.0 * max(1.0 / potential.ell, abs(potential.cot_theta))


@dataclass(frozen=True)
class _Root:
    beta: float
    slope: float
    residual: float


def _refine_roots(potential: PotentialProfile, brackets, n_nodes: int = 24):
    """Roots of g in each bracket from a Chebyshev interpolant of g.

    g is analytic in beta, so a few dozen nodes resolve it to rounding
    level across a scan cell.  All nodes of all brackets go through one
    batched ODE solve; a final batched secant step polishes each root and
    reports the residual |g(beta)|.
    """
    if not brackets:
        return []
    cheb = np.polynomial.chebyshev
    nodes = np.cos(np.pi * (np.arange(n_nodes) + 0.5) / n_nodes)
    pts = np.concatenate([0.5 * (a + b) + 0.5 * (b - a) * nodes for a, b in brackets])
    vals = resonance_function(potential, pts).reshape(len(brackets), n_nodes)
    first = []
    for (a, b), v in zip(brackets, vals):
        series = cheb.Chebyshev.fit(0.5 * (a + b) + 0.5 * (b - a) * nodes, v, n_nodes - 1, domain=[a, b])
        roots = series.roots()
        roots = roots[np.isreal(roots)].real
        roots = roots[(roots >= a - 1e-12 * b) & (roots <= b + 1e-12 * b)]
        if roots.size == 0:
            continue
        beta = float(roots[np.argmin(np.abs(series(roots)))])
        first.append((beta, float(series.deriv()(beta))))
    if not first:
        return []
    betas = np.array([b for b, _ in first])
    slopes = np.array([d for _, d in first])
    g0 = resonance_function(potential, betas)
    polished = betas - g0 / slopes
    g1 = resonance_function(potential, polished)
    return [_Root(float(b), float(d), float(abs(r))) for b, d, r in zip(polished, slopes, g1)]


def find_eligible_resonances(potential: PotentialProfile, beta_max: float | None = None,
                             n_scan: int = 2000, slope_tol: float = 1e-6) -> ResonanceReport:
    """Zeros -i beta of the bound-state-free Jost function with g'(beta) > 0.

    ``potential`` must carry no bound state.  The search scans
    (0, beta_max] with ``n_scan`` steps, keeps sign changes from negative
    to positive and refines each one.  Norming constants follow from
    m^2 = 4 beta^2 g'(beta) / H(beta) and g^2 = m^2 / g'(beta)^2, where
    H(beta) = -i F(i beta) > 0 for a potential without bound states.
    """
    if beta_max is None:
        beta_max = default_beta_max(potential)
    if not beta_max > 0:
        raise ValueError("beta_max must be positive")
    step = beta_max / n_scan
    grid = np.linspace(0.0, beta_max, n_scan + 1)
    # signs only: the default tolerance suffices for the scan
    vals = resonance_function(potential, grid, rtol=1e-9, atol=1e-11)
    up = np.nonzero((vals[:-1] < 0) & (vals[1:] >= 0))[0]
    # a root sitting exactly on a node is bracketed by the cell to its left
    brackets = [(grid[i] if i > 0 else 0.25 * step, grid[i + 1]) for i in up]
    roots = [r for r in _refine_roots(potential, brackets) if r.slope > 0 and r.beta > 0]

    betas = np.array([r.beta for r in roots])
    if betas.size:
        H = np.real(-1j * jost_solution(potential, 1j * betas, rtol=1e-12, atol=1e-14).F)
    else:
        H = np.array([])
    m_sq = [4.0 * r.beta**2 * r.slope / h for r, h in zip(roots, H)]
    g_sq = [m / r.slope**2 for r, m in zip(roots, m_sq)]
    scenario = classify_scenario(potential, slope_tol=slope_tol)
    return ResonanceReport(tuple(betas), tuple(g_sq), tuple(m_sq), scenario, float(beta_max),
                           tuple(r.residual for r in roots))


def resonance_derivative(potential: PotentialProfile, beta: float, step: float = 1e-5) -> float:
    """g'(beta) = dF/dk at k = -i beta, fourth-order central difference."""
    b = beta + step * np.array([-2.0, -1.0, 1.0, 2.0])
    v = resonance_function(potential, b)
    return float((v[0] - 8 * v[1] + 8 * v[2] - v[3]) / (12 * step))


# -----------------------------------------------------------------------------
# Bound-state Jost functions and norming constants
# -----------------------------------------------------------------------------

class BoundStateJost:
    """F_j(k) = (k - i beta)/(k + i beta) F0(k), moving the zero of F0 at
    -i beta to +i beta.  ``outer`` is any callable F0 with a ``derivative``
    method or, failing that, is differenced numerically."""

    def __init__(self, outer, beta: float):
        if not beta > 0:
            raise ValueError("bound state needs beta > 0")
        self.outer = outer
        self.beta = float(beta)

    def _outer_derivative(self, k, step=1e-5):
        if hasattr(self.outer, "derivative"):
            return self.outer.derivative(k)
        k = complex(k)
        pts = np.array([k - 2 * step, k - step, k + step, k + 2 * step])
        F = np.asarray(self.outer(pts), dtype=complex)
        return (F[0] - 8 * F[1] + 8 * F[2] - F[3]) / (12 * step)

    def __call__(self, k):
        k = np.asarray(k, dtype=complex)
        b = self.beta
        at_pole = np.abs(k + 1j * b) < 1e-12 * max(b, 1.0)
        safe = np.where(at_pole, 0.0, k)
        out = (safe - 1j * b) / (safe + 1j * b) * np.asarray(self.outer(safe), dtype=complex)
        if np.any(at_pole):
            # removable: F0 vanishes at -i beta
            out = np.where(at_pole, -2j * b * self._outer_derivative(-1j * b), out)
        return out[()] if out.ndim == 0 else out

    def derivative(self, k, step: float = 1e-5):
        k = complex(k)
        if abs(k - 1j * self.beta) < 1e-12 * max(self.beta, 1.0):
            # the Moebius factor vanishes at i beta, leaving only its derivative
            return complex(np.asarray(self.outer(k))) / (2j * self.beta)
        pts = np.array([k - 2 * step, k - step, k + step, k + 2 * step])
        F = self(pts)
        return (F[0] - 8 * F[1] + 8 * F[2] - F[3]) / (12 * step)


def bound_state_jost(outer, beta: float) -> BoundStateJost:
    return BoundStateJost(outer, beta)


def marchenko_norming_constant(jost_j, beta: float) -> float:
    """m_j^2 = i F_j(-i beta) / F_j'(i beta)."""
    if not beta > 1e-10:
        raise ValueError("norming constant is undefined for beta <= 0")
    num = complex(np.asarray(jost_j(-1j * beta)))
    if hasattr(jost_j, "derivative"):
        den = complex(jost_j.derivative(1j * beta))
    else:
        s = 1e-5
        pts = 1j * beta + s * np.array([-2.0, -1.0, 1.0, 2.0])
        F = np.asarray(jost_j(pts), dtype=complex)
        den = (F[0] - 8 * F[1] + 8 * F[2] - F[3]) / (12 * s)
    if abs(den) == 0:
        raise ValueError("F_j'(i beta) vanishes; bound state is degenerate")
    m2 = 1j * num / den
    return float(m2.real)


def gl_norming_constant(phi_ib, x, beta: float) -> float:
    """g_j^2 = 2 beta / [phi(i beta, ell)^2 - 2 beta int_0^ell phi(i beta, y)^2 dy].

    ``phi_ib`` samples the bound-state-free regular solution at k = i beta
    on ``x``.  The denominator is the norm of the would-be bound state seen
    from the bound-state-free side; it must be positive.
    """
    from scipy.integrate import simpson

    if not beta > 0:
        raise ValueError("beta must be positive")
    phi_ib = np.asarray(phi_ib, dtype=float)
    x = np.asarray(x, dtype=float)
    den = phi_ib[-1] ** 2 - 2.0 * beta * simpson(phi_ib**2, x=x)
    if not den > 0:
        raise ValueError("non-positive Gel'fand-Levitan norm; resonance is not eligible")
    return float(2.0 * beta / den)


def norming_from_marchenko(m_sq: float, beta: float, jost_j) -> float:
    """g_j^2 = -4 beta^2 m_j^2 / F_j(-i beta)^2."""
    Fm = complex(np.asarray(jost_j(-1j * beta)))
    return float(np.real(-4.0 * beta**2 * m_sq / Fm**2))


# -----------------------------------------------------------------------------
# Zero-count scenarios
# -----------------------------------------------------------------------------

def _sign_changes(v) -> int:
    s = np.sign(np.asarray(v, dtype=float))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


@dataclass(frozen=True)
class ZeroCounts:
    z_phi: int
    z_f: int
    h0: float


def zero_counts(potential: PotentialProfile) -> ZeroCounts:
    """Zeros of phi(0, .) on [0, inf) and of f(0, .) on [0, ell), and H(0) = -i F(0)."""
    x, phi, dphi = regular_solution(potential, [0.0])
    phi, dphi = phi[0].real, dphi[0].real
    z_phi = _sign_changes(phi)
    # zero of the linear continuation phi(ell) + phi'(ell)(x - ell)
    if phi[-1] * dphi[-1] < 0:
        z_phi += 1
    sol = jost_solution(potential, [0.0], x_eval=x)
    f = sol.f[0].real
    z_f = _sign_changes(f[:-1])
    h0 = float(np.real(-1j * sol.F[0]))
    return ZeroCounts(z_phi, z_f, h0)


def classify_scenario(potential: PotentialProfile, jost=None, slope_tol: float = 1e-6) -> Scenario:
    """Which of the four zero-count scenarios the potential realizes.

    ``slope_tol`` is the threshold on |H(0)| = |r'(ell)|/r(0) below which
    the lip slope is treated as zero.  ``jost`` is accepted for interface
    symmetry; when given as an ``OuterJost`` its fitted F(0) replaces the
    ODE value of H(0).
    """
    counts = zero_counts(potential)
    h0 = counts.h0 if jost is None else float(np.real(-1j * jost.f0))
    if counts.z_phi == 0:
        if abs(h0) <= slope_tol:
            return Scenario.NO_BOUND_ZERO_SLOPE
        if h0 > 0:
            return Scenario.NO_BOUND_POSITIVE_SLOPE
        raise ValueError("H(0) < 0 without a zero of phi(0, x): not a class-A duct")
    if counts.z_phi == 1:
        if counts.z_f == 0:
            return Scenario.ONE_BOUND_PHI_ZERO
        if counts.z_f == 1:
            return Scenario.ONE_BOUND_BOTH_ZERO
    raise ValueError(f"zero counts (Z_phi={counts.z_phi}, Z_f={counts.z_f}) fit no class-A scenario")
