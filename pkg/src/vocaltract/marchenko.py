"""
Marchenko inversion, an independent route to the same candidate ducts.

From the scattering matrix S(k) = -F(-k)/F(k) (= F(k)*/F(k) on the real
axis) and an optional bound state (beta, m^2), the kernel

    M(y) = (1/pi) int_0^inf Re[(S(k) - 1) e^{iky}] dk + m^2 e^{-beta y}

feeds the equation

    K(x, y) + M(x + y) + int_x^inf K(x, z) M(z + y) dz = 0,   y >= x,

whose solution gives the Jost solution f(k, x) = e^{ikx} + int_x^inf K(x, y) e^{iky} dy.
The regular solution then follows from f and the Jost function F:

    phi(k, x) = [F(k) f(-k, x) - F(-k) f(k, x)] / (2k),
    phi(0, x) = F'(0) f(0, x) - F(0) f'(0, x)   (k-derivatives).

For a potential supported in [0, ell] the kernel K(x, .) vanishes beyond
2 ell - x, so the z-integral is truncated at 2 ell - x plus a margin.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import sici

from .core import Candidate, CandidateSet, Grid1D, PhysicalConstants, PressureSpectrum
from .gelfand_levitan import radius_from_phi
from .spectral import OuterJost, find_eligible_resonances, outer_jost


def scattering_matrix(jost, k) -> np.ndarray:
    """S(k) = -F(-k)/F(k) for a callable ``jost``, or F*/F when ``jost`` is an
    array of values on the real grid ``k``."""
    k = np.asarray(k, dtype=float)
    if callable(jost):
        F = np.asarray(jost(k), dtype=complex)
        Fm = np.asarray(jost(-k), dtype=complex)
        return -Fm / F
    F = np.asarray(jost, dtype=complex)
    return np.conj(F) / F


@dataclass(frozen=True)
class MarchenkoKernelSpec:
    """S on k_j = j dk (j = 1..n) with its value at k = 0, an optional bound
    state (beta, m^2) and the tail constant A of S ~ 1 + 2iA/k - 2A^2/k^2."""

    k: np.ndarray
    s_values: np.ndarray
    s_zero: complex = -1.0
    bound_state: Optional[tuple] = None
    tail_a: Optional[float] = None

    def __post_init__(self):
        s = np.array(self.s_values, dtype=complex, copy=True)
        s.setflags(write=False)
        object.__setattr__(self, "s_values", s)

    @property
    def unimodularity_defect(self) -> float:
        return float(np.max(np.abs(np.abs(self.s_values) - 1.0)))


def _sin_tail(y, K):
    """int_K^inf sin(ky)/k dk = pi/2 - Si(Ky).

    At y = 0 this returns the limit from y > 0, so M(0) is the one-sided
    value M(0+) that the equation needs.
    """
    y = np.asarray(y, dtype=float)
    si, _ = sici(K * y)
    return np.pi / 2.0 - si


def _cos_tail(y, K):
    """int_K^inf cos(ky)/k^2 dk."""
    y = np.asarray(y, dtype=float)
    si, _ = sici(K * y)
    return np.cos(K * y) / K - y * (np.pi / 2.0 - si)


def marchenko_kernel(spec: MarchenkoKernelSpec, y) -> np.ndarray:
    """M(y) by the trapezoid rule over [0, k_max] plus the closed-form tail."""
    y = np.asarray(y, dtype=float)
    k = np.concatenate(([0.0], spec.k))
    s1 = np.concatenate(([spec.s_zero], spec.s_values)) - 1.0
    dk = k[1] - k[0]
    w = np.full(k.size, dk)
    w[0] = w[-1] = 0.5 * dk
    K = k[-1]
    A = spec.tail_a
    if A is None:
        A = 0.5 * K * float(np.angle(spec.s_values[-1]))
    out = np.empty(y.size)
    chunk = 512
    for a in range(0, y.size, chunk):
        ky = np.outer(y[a:a + chunk], k)
        out[a:a + chunk] = (np.cos(ky) @ (w * s1.real)) - (np.sin(ky) @ (w * s1.imag))
    # tail of Re[(2iA/k - 2A^2/k^2) e^{iky}]
    out += -2.0 * A * _sin_tail(y, K) - 2.0 * A**2 * _cos_tail(y, K)
    out /= np.pi
    if spec.bound_state is not None:
        beta, m_sq = spec.bound_state
        out += m_sq * np.exp(-beta * y)
    return out


@dataclass(frozen=True)
class MarchenkoSolution:
    """K(x_i, x_i + y_j) on a grid of step h: row i holds y = x_i, x_i + h, ..."""

    h: float
    x: np.ndarray
    kernel: list
    truncation: float

    def jost_at_zero(self):
        """f(0, x) and the k-derivative f'(0, x) (the latter purely imaginary)."""
        f0 = np.empty(self.x.size)
        fd = np.empty(self.x.size)
        for i, row in enumerate(self.kernel):
            y = self.x[i] + self.h * np.arange(row.size)
            w = np.full(row.size, self.h)
            w[0] = w[-1] = 0.5 * self.h
            f0[i] = 1.0 + np.dot(w, row)
            fd[i] = self.x[i] + np.dot(w, row * y)
        return f0, 1j * fd

    def jost_solution(self, k) -> np.ndarray:
        """f(k, x_i) for real or complex k, shape (len(k), len(x))."""
        k = np.atleast_1d(np.asarray(k, dtype=complex))
        out = np.empty((k.size, self.x.size), dtype=complex)
        for i, row in enumerate(self.kernel):
            y = self.x[i] + self.h * np.arange(row.size)
            w = np.full(row.size, self.h)
            w[0] = w[-1] = 0.5 * self.h
            out[:, i] = np.exp(1j * k * self.x[i]) + np.exp(1j * np.outer(k, y)) @ (w * row)
        return out


def solve_marchenko(spec: MarchenkoKernelSpec, ell: float, n_x: int, margin: float = 0.1) -> MarchenkoSolution:
    """Nystrom solution on x_i = i h, h = ell/(n_x - 1), z in [x, 2 ell - x + margin ell]."""
    h = ell / (n_x - 1)
    extra = int(np.ceil(margin * ell / h))
    n_top = 2 * (n_x - 1) + extra          # last z-index
    y = h * np.arange(2 * n_top + 1)
    M = marchenko_kernel(spec, y)
    rows = []
    worst = 0.0
    x = h * np.arange(n_x)
    for i in range(n_x):
        top = n_top - i                     # z-indices i .. top
        idx = np.arange(i, top + 1)
        m = idx.size
        w = np.full(m, h)
        w[0] = w[-1] = 0.5 * h
        Hk = M[idx[:, None] + idx[None, :]]
        A = np.eye(m) + Hk * w[None, :]
        rhs = -M[i + idx]
        row = np.linalg.solve(A, rhs)
        rows.append(row)
        worst = max(worst, float(np.max(np.abs(row[-max(1, extra):]))))
    return MarchenkoSolution(h, x, rows, worst)


def regular_at_zero(sol: MarchenkoSolution, f_zero: complex, fdot_zero: complex) -> np.ndarray:
    """phi(0, x) = F'(0) f(0, x) - F(0) f'(0, x), real for consistent data."""
    f0, fd = sol.jost_at_zero()
    return np.real(fdot_zero * f0 - f_zero * fd)


def regular_solution(sol: MarchenkoSolution, jost_values, k) -> np.ndarray:
    """phi(k, x) = [F(k) f(-k, x) - F(-k) f(k, x)]/(2k) for real k != 0,
    with F(-k) = -F(k)*."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    F = np.atleast_1d(np.asarray(jost_values, dtype=complex))
    fp = sol.jost_solution(k)
    fm = sol.jost_solution(-k)
    return np.real((F[:, None] * fm + np.conj(F)[:, None] * fp) / (2.0 * k[:, None]))


# -----------------------------------------------------------------------------
# Candidates
# -----------------------------------------------------------------------------

def _spec_from_outer(outer: OuterJost, bound=None) -> MarchenkoKernelSpec:
    k = outer.k
    S = np.conj(outer.values) / outer.values
    s_zero = -1.0 if outer.exponent == 1 else 1.0
    A = 0.5 * k[-1] * float(np.angle(S[-1]))
    if bound is None:
        return MarchenkoKernelSpec(k, S, s_zero, None, A)
    beta, m_sq = bound
    factor = ((k + 1j * beta) / (k - 1j * beta)) ** 2
    return MarchenkoKernelSpec(k, S * factor, s_zero, (beta, m_sq), A + 2.0 * beta)


def enumerate_candidates_marchenko(spectrum: PressureSpectrum, ell: float, n_x: int = 201,
                                   beta_max: float | None = None, report=None,
                                   consts: PhysicalConstants = PhysicalConstants()) -> CandidateSet:
    """Candidate ducts through the Marchenko equation.

    The eligible resonances and their norming constants m_j^2 are taken
    from ``report`` when given; otherwise they are found from the
    bound-state-free potential of the Gel'fand-Levitan route.  The
    regular solution at k = 0 needs F(0) and F'(0) of each Jost function,
    taken from the small-k fit of the outer function:
    F_j(0) = -F(0) and F_j'(0) = -2i F(0)/beta - F'(0).
    """
    outer = outer_jost(spectrum)
    if report is None:
        from .gelfand_levitan import GLKernelSpec, solve_gl
        from .time_domain import b_kernel_for

        sol_gl = solve_gl(GLKernelSpec(b_kernel_for(spectrum, ell, n_x)))
        report = find_eligible_resonances(sol_gl.potential, beta_max)
    grid = Grid1D.over(0.0, ell, n_x)

    sol = solve_marchenko(_spec_from_outer(outer), ell, n_x)
    phi = regular_at_zero(sol, outer.f0, outer.fdot0)
    defect = abs(phi[0] - 1.0)
    phi = phi / phi[0]
    cot_free = _cot_from_phi(phi, grid.step)
    r_free = radius_from_phi(phi, grid, spectrum.p_inf, cot_free, consts)

    candidates = []
    defects = [defect]
    for beta, g_sq, m_sq in zip(report.betas, report.g_sq, report.m_sq):
        sol_j = solve_marchenko(_spec_from_outer(outer, (beta, m_sq)), ell, n_x)
        f0_j = -outer.f0
        fd_j = -2j * outer.f0 / beta - outer.fdot0
        phi_j = regular_at_zero(sol_j, f0_j, fd_j)
        defects.append(abs(phi_j[0] - 1.0))
        phi_j = phi_j / phi_j[0]
        cot_j = _cot_from_phi(phi_j, grid.step)
        ok = bool(phi_j[-1] > 0)
        radius = radius_from_phi(phi_j, grid, spectrum.p_inf, cot_j, consts) if ok else None
        candidates.append(Candidate(beta, g_sq, m_sq, cot_j, phi_j, radius, ok))

    diagnostics = {"phi_zero_defect": tuple(defects), "truncation": sol.truncation,
                   "method": "marchenko", "n_x": n_x}
    return CandidateSet(r_free, tuple(candidates), report, cot_free, diagnostics)


def _cot_from_phi(phi, h: float) -> float:
    """cot(theta) = -phi'(0)/phi(0) by a one-sided second-order difference."""
    return float(-(-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * h) / phi[0])
