"""
Time-domain inversion for ducts whose lip slope is non-negative.

The cosine transform of the normalized power spectrum gives the kernel

    B(t) = (2/pi) int_0^inf [|P(k)|^2 / p_inf^2 - 1] cos(kt) dk,

which is the boundary trace w_t(0, t) of a wave field solving

    (r^2 w_x)_x = r^2 w_tt,   w(0, t) = 1 + int_0^t B,   w_x(0, t) = 0,

on the triangle 0 < x < t < 2 ell - x.  Along the diagonal
w(x, x) = r(0)/r(x), so marching in x (layer stripping) reads the radius
off the characteristic while the interior stencil needs r^2 at the new
layer, which is resolved by a few fixed-point sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import sici

from .core import Grid1D, PhysicalConstants, PressureSpectrum, RadiusProfile, end_slopes
from .direct import small_k_exponent


class LipSlopeError(ValueError):
    """The recovered lip slope is negative, outside the method's validity."""


@dataclass(frozen=True)
class BKernel:
    """B(t) sampled on ``tgrid`` starting at t = 0."""

    tgrid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != (self.tgrid.count,):
            raise ValueError("kernel samples do not match the t-grid")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def t(self) -> np.ndarray:
        return self.tgrid.points


def _cos_tail(t, K, C):
    """int_K^inf (C/k^2) cos(kt) dk = C [cos(Kt)/K - t (pi/2 - Si(Kt))]."""
    t = np.asarray(t, dtype=float)
    si, _ = sici(K * t)
    return C * (np.cos(K * t) / K - t * (np.pi / 2.0 - si))


def _tail_integrals(s, K):
    """int_K^inf of cos(ks)/k^2, sin(ks)/k^3 and cos(ks)/k^4 for s >= 0.

    Integration by parts reduces all three to the sine integral.
    """
    s = np.asarray(s, dtype=float)
    c, sn = np.cos(K * s), np.sin(K * s)
    i2 = _cos_tail(s, K, 1.0)
    j3 = sn / (2.0 * K**2) + 0.5 * s * i2
    i4 = c / (3.0 * K**3) - s * sn / (6.0 * K**2) - s**2 * i2 / 6.0
    return i2, j3, i4


def _tail_basis(k, ell):
    """Large-k basis of |P|^2/p_inf^2 - 1 for a duct of length ell."""
    k = np.asarray(k, dtype=float)
    c2, s2 = np.cos(2.0 * k * ell), np.sin(2.0 * k * ell)
    return np.column_stack((1 / k**2, c2 / k**2, s2 / k**3, 1 / k**4, c2 / k**4))


def _tail_transform(t, K, ell, coeffs):
    """int_K^inf [tail model](k) cos(kt) dk for coefficients of ``_tail_basis``."""
    t = np.asarray(t, dtype=float)
    c0, c1, d1, e0, e1 = coeffs
    i2, _, i4 = _tail_integrals(t, K)
    out = c0 * i2 + e0 * i4
    if ell is None:
        return out
    # cos(2k ell) cos(kt) and sin(2k ell) cos(kt) split into shifts 2 ell +- t
    sp, sm = 2.0 * ell + t, 2.0 * ell - t
    i2p, j3p, i4p = _tail_integrals(sp, K)
    i2m, j3m, i4m = _tail_integrals(np.abs(sm), K)
    j3m = np.sign(sm) * j3m
    out += 0.5 * c1 * (i2p + i2m) + 0.5 * d1 * (j3p + j3m) + 0.5 * e1 * (i4p + i4m)
    return out


def power_with_origin(spectrum: PressureSpectrum, exponent: int | None = None):
    """(k, |P|^2/p_inf^2 - 1) including a k = 0 node.

    The normalized power is even and smooth in k.  Its value at k = 0 is -1
    when |P| vanishes linearly (nonzero lip slope), otherwise it is
    extrapolated from the first two samples.
    """
    if exponent is None:
        exponent = int(round(small_k_exponent(spectrum)))
    rho = spectrum.normalized_power() - 1.0
    rho0 = -1.0 if exponent == 1 else (4.0 * rho[0] - rho[1]) / 3.0
    return np.concatenate(([0.0], spectrum.k)), np.concatenate(([rho0], rho))


def fit_oscillatory_tail(k, rho, ell: float, fraction: float = 0.2) -> np.ndarray:
    """Least-squares coefficients of the large-k model

        |P|^2/p_inf^2 - 1 = [C0 + C1 cos(2k ell)]/k^2 + D1 sin(2k ell)/k^3
                            + [E0 + E1 cos(2k ell)]/k^4

    over the top ``fraction`` of the samples.  The cosine terms are the
    signature of a potential that does not vanish at the lips; the 1/k^4
    terms absorb the next order of the expansion so that the transform of
    the fitted tail stays accurate for modest k_max.
    """
    k = np.asarray(k, dtype=float)
    m = max(8, int(round(fraction * k.size)))
    A = _tail_basis(k[-m:], ell)
    # columns differ by powers of k_max; scale them before solving
    scale = np.max(np.abs(A), axis=0)
    coeffs = np.linalg.lstsq(A / scale, np.asarray(rho)[-m:], rcond=None)[0]
    return coeffs / scale


def b_kernel(spectrum: PressureSpectrum, tgrid: Grid1D, exponent: int | None = None,
             tail_c: float | None = None, ell: float | None = None,
             tail_fraction: float = 0.2) -> BKernel:
    """Cosine transform of the normalized power by the trapezoid rule on the
    data grid plus a closed-form tail beyond k_max.

    Tail model, in order of precedence:

    * ``tail_c`` given: C/k^2 with that constant;
    * ``ell`` given: the oscillatory model of ``fit_oscillatory_tail``
      fitted over the top ``tail_fraction`` of the band, which keeps the
      slowly decaying oscillation caused by a potential jump at the lips;
    * otherwise C/k^2 with C = k_max^2 (|P(k_max)|^2/p_inf^2 - 1), matching
      the last sample.
    """
    k, rho = power_with_origin(spectrum, exponent)
    K = k[-1]
    if tail_c is not None:
        coeffs, tail_ell = (float(tail_c), 0.0, 0.0, 0.0, 0.0), None
    elif ell is not None:
        coeffs, tail_ell = fit_oscillatory_tail(k[1:], rho[1:], ell, tail_fraction), ell
    else:
        coeffs, tail_ell = (K**2 * rho[-1], 0.0, 0.0, 0.0, 0.0), None
    dk = k[1] - k[0]
    w = np.full(k.size, dk)
    w[0] = w[-1] = 0.5 * dk
    t = tgrid.points
    values = np.empty(t.size)
    chunk = 512
    for a in range(0, t.size, chunk):
        tt = t[a:a + chunk, None]
        values[a:a + chunk] = np.cos(tt * k[None, :]) @ (w * rho)
    values += _tail_transform(t, K, tail_ell, coeffs)
    return BKernel(tgrid, 2.0 / np.pi * values)


def b_kernel_for(spectrum: PressureSpectrum, ell: float, n_x: int, **kwargs) -> BKernel:
    """B on t = 0, dx, ..., 2 ell with dx = ell/(n_x - 1), the grid used by
    the integral-equation and layer-stripping solvers.  The oscillatory
    tail model is used unless ``tail_c`` is passed."""
    dx = ell / (n_x - 1)
    if "tail_c" not in kwargs:
        kwargs.setdefault("ell", ell)
    return b_kernel(spectrum, Grid1D(0.0, dx, 2 * n_x - 1), **kwargs)


# -----------------------------------------------------------------------------
# Downward continuation
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class WaveField:
    """Samples w[n, j] = w(x_n, t_j) on the triangle x_n <= t_j <= 2 ell - x_n.

    Entries outside the triangle are NaN.
    """

    h: float
    w: np.ndarray

    def diagonal(self) -> np.ndarray:
        n = np.arange(self.w.shape[0])
        return self.w[n, n]


def downward_continuation(kernel: BKernel, ell: float | None = None, n_x: int | None = None,
                          sweeps: int = 4, return_field: bool = False):
    """Normalized profile r(x)/r(0) on x_n = n h, n = 0..N, from B.

    The t-step of ``kernel`` is the layer spacing h and N = (len(B) - 1)/2,
    so B must be sampled on [0, 2 ell].  ``ell`` and ``n_x`` only validate
    that grid when given.

    Scheme: with rho = r^2 on layers,

        rho_{n+1/2} (w_{n+1,j} - w_{n,j}) - rho_{n-1/2} (w_{n,j} - w_{n-1,j})
            = rho_n (w_{n,j+1} - 2 w_{n,j} + w_{n,j-1}),

    where rho_{n+1/2} = (rho_n + rho_{n+1})/2 and rho_{n+1} = 1/w_{n+1,n+1}^2
    is found by fixed-point iteration.  The first layer is a third-order
    Taylor step in x built from w_x(0, t) = 0.
    """
    h = kernel.tgrid.step
    m = kernel.tgrid.count
    if m % 2 == 0:
        raise ValueError("B must be sampled on 2N+1 points over [0, 2 ell]")
    N = (m - 1) // 2
    if ell is not None and not np.isclose(N * h, ell, rtol=1e-9):
        raise ValueError("kernel grid does not span [0, 2 ell]")
    if n_x is not None and n_x != N + 1:
        raise ValueError("kernel grid does not match n_x")

    B = kernel.values
    # w(0, t) = 1 + int_0^t B by the trapezoid rule
    w0 = np.empty(m)
    w0[0] = 1.0
    w0[1:] = 1.0 + np.cumsum(0.5 * h * (B[1:] + B[:-1]))

    W = np.full((N + 1, m), np.nan)
    W[0] = w0
    rho = np.empty(N + 1)
    rho[0] = 1.0
    j = np.arange(1, m - 1)
    # Taylor step in x: with w_x(0,t) = 0 the equation gives w_xx = w_tt and
    # w_xxx = -2 (r'/r)(0) w_tt = 2 B(0) w_tt at x = 0, and w_tt(0, t) = B'(t)
    dB = np.gradient(B, h, edge_order=2)
    W[1, j] = 0.5 * (w0[j + 1] + w0[j - 1]) + h**3 / 3.0 * B[0] * dB[j]
    rho[1] = 1.0 / W[1, 1] ** 2

    for n in range(1, N):
        lo, hi = n + 1, m - n - 2          # new-layer t-indices inside the triangle
        jj = np.arange(lo, hi + 1)
        lap = W[n, jj + 1] - 2.0 * W[n, jj] + W[n, jj - 1]
        rho_half_m = 0.5 * (rho[n] + rho[n - 1])
        back = rho_half_m * (W[n, jj] - W[n - 1, jj])
        rho_next = rho[n] if n == 1 else 2.0 * rho[n] - rho[n - 1]
        for _ in range(sweeps):
            rho_half_p = 0.5 * (rho[n] + rho_next)
            new = W[n, jj] + (back + rho[n] * lap) / rho_half_p
            rho_next = 1.0 / new[0] ** 2
        W[n + 1, jj] = new
        rho[n + 1] = rho_next

    ratio = np.sqrt(rho)
    if return_field:
        return ratio, WaveField(h, W)
    return ratio


def rescale_radius(normalized, x_grid: Grid1D, p_inf: float,
                   consts: PhysicalConstants = PhysicalConstants(), slope0: float | None = None) -> RadiusProfile:
    """Radius from r(x)/r(0) using pi r(0) r(ell) p_inf = c mu.

    r(0)^2 = c mu / (pi p_inf (r(ell)/r(0))).
    """
    u = np.asarray(normalized, dtype=float)
    if np.any(u <= 0):
        raise ValueError("normalized profile must be positive")
    r0 = np.sqrt(consts.c_mu / (np.pi * p_inf * (u[-1] / u[0]))) / u[0]
    r = r0 * u
    s0, sl = end_slopes(r, x_grid.step)
    if slope0 is not None:
        s0 = slope0
    return RadiusProfile(x_grid, r, s0, sl)


def invert_time_domain(spectrum: PressureSpectrum, ell: float, n_x: int = 401,
                       consts: PhysicalConstants = PhysicalConstants(),
                       allow_negative_lip_slope: bool = False) -> RadiusProfile:
    """Spectrum to radius by layer stripping.

    The method recovers the unique duct with r'(ell) >= 0.  When |P| does
    not vanish at k = 0 the lips are flat and the lip slope is set to zero;
    otherwise a lip slope below -1e-6 r(ell)/h in the result means the data
    came from a duct outside that class, and ``LipSlopeError`` is raised
    unless ``allow_negative_lip_slope`` is set.
    """
    exponent = int(round(small_k_exponent(spectrum)))
    kernel = b_kernel_for(spectrum, ell, n_x, exponent=exponent)
    ratio = downward_continuation(kernel, ell, n_x)
    grid = Grid1D.over(0.0, ell, n_x)
    # B(0) = cot(theta) = -r'(0)/r(0)
    s0_rel = -float(kernel.values[0])
    profile = rescale_radius(ratio, grid, spectrum.p_inf, consts)
    slope_l = 0.0 if exponent == 0 else profile.slopeL
    profile = RadiusProfile(grid, profile.values, s0_rel * profile.r0, slope_l)
    if slope_l < -1e-6 * profile.rl / grid.step and not allow_negative_lip_slope:
        raise LipSlopeError(
            f"recovered lip slope {slope_l:.3e} is negative; the time-domain "
            "method only covers ducts with r'(ell) >= 0")
    return profile


# -----------------------------------------------------------------------------
# Unknown length
# -----------------------------------------------------------------------------

def estimate_length(spectrum: PressureSpectrum, ell_guess: float, n_x: int = 801,
                    threshold: float = 0.05, window: int = 5, refine: bool = True) -> float:
    """Estimate ell from a reconstruction on (0, ell_guess) with ell_guess > ell.

    Beyond the true lips the recovered radius is linear, so r''/r(0)
    vanishes there.  The coarse estimate is the end of the last stretch
    where the smoothed |r''|/r(0) exceeds ``threshold`` times its maximum.
    The band limit blurs that edge over about pi/k_max, so with ``refine``
    the estimate is sharpened by ``refine_length``.
    """
    h = ell_guess / (n_x - 1)
    # the true ell is unknown, so the tail is matched at k_max only
    kernel = b_kernel(spectrum, Grid1D(0.0, h, 2 * n_x - 1))
    ratio = downward_continuation(kernel, ell_guess, n_x)
    d2 = np.zeros_like(ratio)
    d2[1:-1] = (ratio[2:] - 2 * ratio[1:-1] + ratio[:-2]) / h**2
    curv = np.convolve(np.abs(d2), np.ones(window) / window, mode="same")
    active = np.nonzero(curv > threshold * curv.max())[0]
    if active.size == 0:
        raise ValueError("no curvature found; the duct may be uniform")
    coarse = float(min(ell_guess, (active[-1] - window // 2) * h))
    if not refine:
        return coarse
    return refine_length(spectrum, coarse, half_width=np.pi / spectrum.k_max + 0.5)


def refine_length(spectrum: PressureSpectrum, ell0: float, half_width: float = 1.5,
                  fraction: float = 0.5, min_r2: float = 0.5, step: float = 0.002) -> float:
    """Sharpen a length estimate from the cos(2 k ell) term of the spectrum tail.

    Scans ell over ell0 +- half_width and keeps the value whose fit of
    k^2 (|P|^2/p_inf^2 - 1) = C0 + C1 cos(2 k ell) over the top ``fraction``
    of the band has the smallest residual.  When even the best fit explains
    less than ``min_r2`` of the variance (no potential jump at the lips),
    ``ell0`` is returned unchanged.
    """
    k = spectrum.k
    m = max(8, int(fraction * k.size))
    kk = k[-m:]
    y = kk**2 * (spectrum.normalized_power()[-m:] - 1.0)
    total = float(np.sum((y - y.mean()) ** 2))
    if total == 0.0:
        return ell0
    best_res, best_ell = np.inf, ell0
    for ell in np.arange(max(step, ell0 - half_width), ell0 + half_width, step):
        A = np.column_stack((np.ones(m), np.cos(2.0 * kk * ell)))
        c = np.linalg.lstsq(A, y, rcond=None)[0]
        res = float(np.sum((A @ c - y) ** 2))
        if res < best_res:
            best_res, best_ell = res, float(ell)
    return best_ell if 1.0 - best_res / total >= min_r2 else ell0
