"""
Gel'fand-Levitan inversion and the candidate ducts it produces.

With G(x, y) = [B(x+y) + B(|x-y|)]/2, plus g^2 cosh(beta x) cosh(beta y)
when a bound state at i beta is added, the kernel h(x, y) solves

    h(x, y) + G(x, y) + int_0^x h(x, z) G(z, y) dz = 0,    0 <= y <= x.

From h one reads q(x) = 2 d/dx h(x, x), cot(theta) = -h(0, 0) and the
regular solution phi(k, x) = cos(kx) + int_0^x h(x, y) cos(ky) dy, whose
zero-energy value is proportional to the radius.  Each equation in x is
solved by a Nystrom discretization with the trapezoid rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .core import (
    Candidate,
    CandidateSet,
    Grid1D,
    PhysicalConstants,
    PotentialProfile,
    PressureSpectrum,
    RadiusProfile,
    end_slopes,
)
from .spectral import find_eligible_resonances, gl_norming_constant
from .time_domain import BKernel, b_kernel_for


@dataclass(frozen=True)
class GLKernelSpec:
    """B on t = 0, dx, ..., 2 ell and an optional bound state (beta, g^2)."""

    b: BKernel
    bound_state: Optional[tuple] = None

    @property
    def n_x(self) -> int:
        return (self.b.tgrid.count + 1) // 2

    def matrix(self) -> np.ndarray:
        """G(x_i, x_j) on the x-grid with the same step as the t-grid."""
        n = self.n_x
        idx = np.arange(n)
        B = self.b.values
        G = 0.5 * (B[idx[:, None] + idx[None, :]] + B[np.abs(idx[:, None] - idx[None, :])])
        if self.bound_state is not None:
            beta, g_sq = self.bound_state
            c = np.cosh(beta * self.b.tgrid.step * idx)
            G = G + g_sq * np.outer(c, c)
        return G


@dataclass(frozen=True)
class GLSolution:
    """Kernel h on the lower triangle (h[i, j] = h(x_i, x_j), j <= i; NaN above)."""

    xgrid: Grid1D
    h: np.ndarray
    potential: PotentialProfile
    phi0: np.ndarray
    residual: float = 0.0

    @property
    def x(self) -> np.ndarray:
        return self.xgrid.points

    @property
    def cot_theta(self) -> float:
        return self.potential.cot_theta

    def transform(self, basis) -> np.ndarray:
        """int_0^x h(x, y) b(y) dy for every grid x, trapezoid rule.

        ``basis`` holds b(x_j) with shape (m, n); the result has shape (m, n).
        """
        basis = np.atleast_2d(np.asarray(basis))
        dx = self.xgrid.step
        H = np.nan_to_num(self.h, nan=0.0)
        out = dx * (basis @ H.T)
        # trapezoid end corrections: half weight at y = 0 and y = x
        diag = np.diag(H)
        out -= 0.5 * dx * (basis[:, :1] * H[:, 0][None, :] + basis * diag[None, :])
        out[:, 0] = 0.0
        return out

    def regular(self, k) -> np.ndarray:
        """phi(k, x) for real k, shape (len(k), n)."""
        k = np.atleast_1d(np.asarray(k, dtype=float))
        x = self.x
        basis = np.cos(np.outer(k, x))
        return basis + self.transform(basis)

    def regular_imaginary(self, beta: float) -> np.ndarray:
        """phi(i beta, x) = cosh(beta x) + int_0^x h(x, y) cosh(beta y) dy."""
        c = np.cosh(beta * self.x)
        return (c + self.transform(c[None, :]))[0]


def solve_gl(spec: GLKernelSpec, xgrid: Grid1D | None = None) -> GLSolution:
    """Solve the Gel'fand-Levitan equation on the grid of ``spec``.

    One dense system per x-node; the trapezoid weights on [0, x_i] give
    (I + G_i W_i) h_i = -g_i with h_i = h(x_i, x_0..x_i).
    """
    n = spec.n_x
    dx = spec.b.tgrid.step
    grid = Grid1D(0.0, dx, n)
    if xgrid is not None and (xgrid.count != n or not np.isclose(xgrid.step, dx)):
        raise ValueError("x-grid must match the kernel's t-step and length")
    G = spec.matrix()
    H = np.full((n, n), np.nan)
    H[0, 0] = -G[0, 0]
    worst = abs(H[0, 0] + G[0, 0])
    for i in range(1, n):
        w = np.full(i + 1, dx)
        w[0] = w[-1] = 0.5 * dx
        Gi = G[: i + 1, : i + 1]
        A = np.eye(i + 1) + Gi * w[None, :]
        rhs = -G[i, : i + 1]
        u = np.linalg.solve(A, rhs)
        H[i, : i + 1] = u
        worst = max(worst, float(np.max(np.abs(A @ u - rhs))))
    diag = np.diag(H)
    q = 2.0 * np.gradient(diag, dx, edge_order=2)
    potential = PotentialProfile(grid, q, -H[0, 0])
    sol = GLSolution(grid, H, potential, np.zeros(n), worst)
    phi0 = 1.0 + sol.transform(np.ones((1, n)))[0]
    return GLSolution(grid, H, potential, phi0, worst)


# -----------------------------------------------------------------------------
# Radii
# -----------------------------------------------------------------------------

def radius_from_phi(phi0, grid: Grid1D, p_inf: float, cot_theta: float,
                    consts: PhysicalConstants = PhysicalConstants()) -> RadiusProfile:
    """r(x) = sqrt(c mu / (pi p_inf phi(0, ell))) phi(0, x).

    This enforces pi r(0) r(ell) p_inf = c mu.  Requires phi(0, ell) > 0.
    """
    phi0 = np.asarray(phi0, dtype=float)
    if not phi0[-1] > 0:
        raise ValueError("phi(0, ell) <= 0: candidate is inadmissible")
    r0 = np.sqrt(consts.c_mu / (np.pi * p_inf * phi0[-1]))
    r = r0 * phi0
    _, sl = end_slopes(r, grid.step)
    return RadiusProfile(grid, r, -cot_theta * r0, sl)


def radius_no_bound(sol: GLSolution, p_inf: float, consts: PhysicalConstants = PhysicalConstants()) -> RadiusProfile:
    return radius_from_phi(sol.phi0, sol.xgrid, p_inf, sol.cot_theta, consts)


def darboux(sol: GLSolution, beta: float, g_sq: float, k=None):
    """Add a bound state at i beta with norming constant g^2.

    Returns (cot theta_j, phi_j(0, x)) or, when ``k`` is given, the
    regular solution phi_j(k, x) for those real k instead of phi_j(0, x):

        phi_j = phi0 - g^2 phi0(i beta, x) int_0^x phi0(k, y) phi0(i beta, y) dy
                       / (1 + g^2 int_0^x phi0(i beta, y)^2 dy).
    """
    x = sol.x
    pb = sol.regular_imaginary(beta)
    norm = 1.0 + g_sq * cumulative_trapezoid(pb**2, x, initial=0.0)
    if k is None:
        base = sol.phi0[None, :]
    else:
        base = sol.regular(k)
    cross = cumulative_trapezoid(base * pb[None, :], x, initial=0.0, axis=1)
    phi = base - g_sq * pb[None, :] * cross / norm[None, :]
    cot_j = sol.cot_theta + g_sq
    return cot_j, (phi[0] if k is None else phi)


def admissible(phi0, phi_ib, beta: float, x) -> bool:
    """2 beta int_0^ell phi0(0,y) phi0(i beta,y) dy < phi0(0,ell) phi0(i beta,ell),
    equivalent to a positive candidate radius at the lips."""
    phi0 = np.asarray(phi0, dtype=float)
    phi_ib = np.asarray(phi_ib, dtype=float)
    lhs = 2.0 * beta * trapezoid(phi0 * phi_ib, np.asarray(x, dtype=float))
    return bool(lhs < phi0[-1] * phi_ib[-1])


# -----------------------------------------------------------------------------
# All candidates
# -----------------------------------------------------------------------------

def enumerate_candidates(spectrum: PressureSpectrum, ell: float, n_x: int = 401,
                         method: str = "darboux", beta_max: float | None = None,
                         consts: PhysicalConstants = PhysicalConstants()) -> CandidateSet:
    """Every radius profile compatible with ``spectrum`` on [0, ell].

    The bound-state-free duct comes from the Gel'fand-Levitan equation with
    kernel B.  Each eligible resonance of its Jost function hosts one added
    bound state; the resulting candidate is built by the Darboux formula
    (``method='darboux'``) or by re-solving the equation with the rank-one
    term added (``method='gl'``).  Inadmissible candidates are kept with
    ``radius=None``.
    """
    if method not in ("darboux", "gl"):
        raise ValueError("method must be 'darboux' or 'gl'")
    kernel = b_kernel_for(spectrum, ell, n_x)
    sol = solve_gl(GLKernelSpec(kernel))
    r_free = radius_no_bound(sol, spectrum.p_inf, consts)
    report = find_eligible_resonances(sol.potential, beta_max)

    candidates = []
    g_sq_gl = []
    for beta, m_sq in zip(report.betas, report.m_sq):
        pb = sol.regular_imaginary(beta)
        g_sq = gl_norming_constant(pb, sol.x, beta)
        g_sq_gl.append(g_sq)
        if method == "darboux":
            cot_j, phi_j = darboux(sol, beta, g_sq)
        else:
            sol_j = solve_gl(GLKernelSpec(kernel, (beta, g_sq)))
            cot_j, phi_j = sol_j.cot_theta, sol_j.phi0
        ok = admissible(sol.phi0, pb, beta, sol.x)
        radius = radius_from_phi(phi_j, sol.xgrid, spectrum.p_inf, cot_j, consts) if ok else None
        candidates.append(Candidate(beta, g_sq, m_sq, cot_j, phi_j, radius, ok))

    diagnostics = {
        "gl_residual": sol.residual,
        "g_sq_from_jost": report.g_sq,
        "g_sq_gel_fand_levitan": tuple(g_sq_gl),
        "method": method,
        "n_x": n_x,
    }
    return CandidateSet(r_free, tuple(candidates), report, sol.cot_theta, diagnostics)
