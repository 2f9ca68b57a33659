"""
Domain types shared by the forward and inverse solvers.

Units are fixed throughout: lengths in cm, wavenumbers in rad/cm, sound
speed in cm/s and air density in g/cm^3.  Every type here is an immutable
value object; array fields are stored as read-only numpy arrays.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


# -----------------------------------------------------------------------------
# Constants and grids
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class PhysicalConstants:
    """Sound speed ``c`` (cm/s) and air density ``mu`` (g/cm^3)."""

    c: float = 34300.0
    mu: float = 0.0012

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"sound speed must be positive, got {self.c}")
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError(f"air density must be positive, got {self.mu}")

    @property
    def c_mu(self) -> float:
        return self.c * self.mu


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid ``start + i*step`` for ``i = 0 .. count-1``."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"grid step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise ValueError(f"grid needs at least 2 samples, got {self.count}")
        object.__setattr__(self, "count", int(self.count))
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "step", float(self.step))

    @classmethod
    def over(cls, start: float, stop: float, count: int) -> "Grid1D":
        """Grid with ``count`` samples whose first and last points are
        ``start`` and ``stop``."""
        if not stop > start:
            raise ValueError("stop must exceed start")
        return cls(start, (stop - start) / (count - 1), count)

    @classmethod
    def wavenumbers(cls, dk: float, nk: int) -> "Grid1D":
        """The k-grid ``k_j = j*dk`` for ``j = 1..nk``."""
        return cls(dk, dk, nk)

    @property
    def points(self) -> np.ndarray:
        # one multiply-add per sample, no accumulated drift
        return self.start + self.step * np.arange(self.count)

    @property
    def stop(self) -> float:
        return self.start + self.step * (self.count - 1)

    def __len__(self) -> int:
        return self.count


# -----------------------------------------------------------------------------
# Profiles
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class RadiusProfile:
    """Duct radius r(x) sampled on a uniform grid over [0, ell].

    ``slope0`` and ``slopeL`` are r'(0) and r'(ell).  They are kept
    explicitly because the sign of r'(ell) decides whether the associated
    Schrodinger operator has a bound state.
    """

    grid: Grid1D
    values: np.ndarray
    slope0: float
    slopeL: float

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.shape != (self.grid.count,):
            raise ValueError("radius samples do not match the grid")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ValueError("radius must be positive and finite on [0, ell]")
        if not (math.isfinite(self.slope0) and math.isfinite(self.slopeL)):
            raise ValueError("end slopes must be finite")
        if self.grid.start != 0.0:
            raise ValueError("radius grid must start at the glottis, x = 0")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "slope0", float(self.slope0))
        object.__setattr__(self, "slopeL", float(self.slopeL))

    @classmethod
    def from_function(cls, func, ell: float, n: int, dfunc=None) -> "RadiusProfile":
        """Sample ``func`` on ``n`` points of [0, ell].

        End slopes come from ``dfunc`` when given, otherwise from one-sided
        second-order differences of the samples.
        """
        grid = Grid1D.over(0.0, ell, n)
        values = np.asarray(func(grid.points), dtype=float)
        if dfunc is not None:
            s0, sl = float(dfunc(0.0)), float(dfunc(ell))
        else:
            s0, sl = end_slopes(values, grid.step)
        return cls(grid, values, s0, sl)

    @classmethod
    def from_samples(cls, grid: Grid1D, values) -> "RadiusProfile":
        values = np.asarray(values, dtype=float)
        s0, sl = end_slopes(values, grid.step)
        return cls(grid, values, s0, sl)

    @property
    def x(self) -> np.ndarray:
        return self.grid.points

    @property
    def ell(self) -> float:
        return self.grid.stop

    @property
    def r0(self) -> float:
        return float(self.values[0])

    @property
    def rl(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class AreaFunction:
    """Cross-sectional area A(x) = pi r(x)^2 on a uniform grid.

    ``slope0``/``slopeL`` hold A'(0) and A'(ell) when known.
    """

    grid: Grid1D
    values: np.ndarray
    slope0: Optional[float] = None
    slopeL: Optional[float] = None

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.shape != (self.grid.count,):
            raise ValueError("area samples do not match the grid")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ValueError("area must be positive and finite")
        object.__setattr__(self, "values", values)
        if self.slope0 is None or self.slopeL is None:
            s0, sl = end_slopes(values, self.grid.step)
            object.__setattr__(self, "slope0", s0 if self.slope0 is None else float(self.slope0))
            object.__setattr__(self, "slopeL", sl if self.slopeL is None else float(self.slopeL))

    @property
    def x(self) -> np.ndarray:
        return self.grid.points

    @property
    def ell(self) -> float:
        return self.grid.stop


@dataclass(frozen=True)
class PressureSpectrum:
    """Absolute lip pressure |P(k, ell)| on a k-grid excluding k = 0.

    ``p_inf`` is the high-frequency plateau and ``tail_c`` the constant C of
    the tail model |P|^2 / p_inf^2 = 1 + C / k^2.
    """

    kgrid: Grid1D
    values: np.ndarray
    p_inf: float
    tail_c: float = 0.0

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.shape != (self.kgrid.count,):
            raise ValueError("spectrum samples do not match the k-grid")
        if self.kgrid.start <= 0:
            raise ValueError("spectrum k-grid must lie in (0, k_max]")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ValueError("absolute pressure must be positive for k > 0")
        if not self.p_inf > 0:
            raise ValueError("p_inf must be positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "p_inf", float(self.p_inf))
        object.__setattr__(self, "tail_c", float(self.tail_c))

    @property
    def k(self) -> np.ndarray:
        return self.kgrid.points

    @property
    def k_max(self) -> float:
        return self.kgrid.stop

    def normalized_power(self) -> np.ndarray:
        """|P|^2 / p_inf^2 on the grid."""
        return (self.values / self.p_inf) ** 2

    def scaled(self, factor: float) -> "PressureSpectrum":
        return PressureSpectrum(self.kgrid, self.values * factor, self.p_inf * factor, self.tail_c)


@dataclass(frozen=True)
class PotentialProfile:
    """Schrodinger potential q(x) = r''/r on [0, ell], zero beyond ell,
    together with the boundary parameter cot(theta) = -r'(0)/r(0)."""

    grid: Grid1D
    values: np.ndarray
    cot_theta: float

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.shape != (self.grid.count,):
            raise ValueError("potential samples do not match the grid")
        if not np.all(np.isfinite(values)):
            raise ValueError("potential samples must be finite")
        if not math.isfinite(self.cot_theta):
            raise ValueError("boundary parameter must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "cot_theta", float(self.cot_theta))

    @classmethod
    def constant(cls, v: float, cot_theta: float, ell: float, n: int = 401) -> "PotentialProfile":
        grid = Grid1D.over(0.0, ell, n)
        return cls(grid, np.full(n, float(v)), cot_theta)

    @property
    def x(self) -> np.ndarray:
        return self.grid.points

    @property
    def ell(self) -> float:
        return self.grid.stop

    def __call__(self, x):
        """Piecewise-linear interpolant, zero outside [0, ell]."""
        return np.interp(x, self.x, self.values, left=0.0, right=0.0)


@dataclass(frozen=True)
class BoundState:
    """Bound-state wavenumber k = i*beta with its norming constants."""

    beta: float
    g_sq: float
    m_sq: float


@dataclass(frozen=True)
class JostData:
    """Jost function F sampled on a real k-grid, plus its bound states."""

    kgrid: Grid1D
    f_values: np.ndarray
    bound_states: tuple = ()
    source_potential: Optional[PotentialProfile] = None

    def __post_init__(self):
        object.__setattr__(self, "f_values", _frozen_array(self.f_values, complex))
        object.__setattr__(self, "bound_states", tuple(self.bound_states))


class Scenario(enum.Enum):
    """The four mutually exclusive zero-count scenarios of a class-A duct."""

    NO_BOUND_POSITIVE_SLOPE = "NoBound-PositiveSlope"
    NO_BOUND_ZERO_SLOPE = "NoBound-ZeroSlope"
    ONE_BOUND_PHI_ZERO = "OneBound-PhiZero"
    ONE_BOUND_BOTH_ZERO = "OneBound-BothZero"

    @property
    def bound_states(self) -> int:
        return 0 if self in (Scenario.NO_BOUND_POSITIVE_SLOPE, Scenario.NO_BOUND_ZERO_SLOPE) else 1


@dataclass(frozen=True)
class Candidate:
    """A bound-state candidate duct.

    ``phi0`` is the regular solution at zero energy, proportional to the
    radius.  ``radius`` is None when the candidate is inadmissible, since
    scaling then needs the square root of a negative number.
    """

    beta: float
    g_sq: float
    m_sq: float
    cot_theta: float
    phi0: np.ndarray
    radius: Optional[RadiusProfile]
    admissible: bool

    def __post_init__(self):
        object.__setattr__(self, "phi0", _frozen_array(self.phi0))


@dataclass(frozen=True)
class ResonanceReport:
    """Eligible resonances -i*beta_j of the bound-state-free Jost function."""

    betas: tuple
    g_sq: tuple
    m_sq: tuple
    scenario: Scenario
    beta_max: float = float("nan")
    residuals: tuple = ()

    def __post_init__(self):
        betas = tuple(float(b) for b in self.betas)
        if any(b <= 0 for b in betas) or any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
            raise ValueError("resonance betas must be positive and increasing")
        if not (len(self.g_sq) == len(self.m_sq) == len(betas)):
            raise ValueError("one g^2 and one m^2 per resonance")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "g_sq", tuple(float(g) for g in self.g_sq))
        object.__setattr__(self, "m_sq", tuple(float(m) for m in self.m_sq))

    @property
    def m_count(self) -> int:
        return len(self.betas)


@dataclass(frozen=True)
class CandidateSet:
    """All radius profiles compatible with one absolute-pressure spectrum."""

    no_bound: RadiusProfile
    with_bound: tuple = ()
    report: Optional[ResonanceReport] = None
    no_bound_cot_theta: float = float("nan")
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "with_bound", tuple(self.with_bound))

    @property
    def m_count(self) -> int:
        return len(self.with_bound)

    def admissible_profiles(self) -> list:
        """r-dot followed by every admissible bound-state radius that was built."""
        out = [self.no_bound]
        out.extend(c.radius for c in self.with_bound if c.admissible and c.radius is not None)
        return out


# -----------------------------------------------------------------------------
# Small operations
# -----------------------------------------------------------------------------

def end_slopes(values, step: float) -> tuple:
    """One-sided second-order estimates of the derivative at both ends."""
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        s = (v[-1] - v[0]) / step
        return float(s), float(s)
    s0 = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * step)
    sl = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * step)
    return float(s0), float(sl)


def k_from_frequency(nu, consts: PhysicalConstants = PhysicalConstants()):
    """Angular wavenumber k = 2 pi nu / c in rad/cm for a frequency in Hz."""
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < 0):
        raise ValueError("frequency must be non-negative")
    k = 2.0 * np.pi * nu / consts.c
    return float(k) if k.ndim == 0 else k


def radius_to_area(profile: RadiusProfile) -> AreaFunction:
    r = profile.values
    return AreaFunction(
        profile.grid,
        np.pi * r**2,
        slope0=2.0 * np.pi * profile.r0 * profile.slope0,
        slopeL=2.0 * np.pi * profile.rl * profile.slopeL,
    )


def area_to_radius(area: AreaFunction) -> RadiusProfile:
    if np.any(area.values <= 0):
        raise ValueError("area must be positive")
    r = np.sqrt(area.values / np.pi)
    return RadiusProfile(
        area.grid,
        r,
        slope0=area.slope0 / (2.0 * np.pi * r[0]),
        slopeL=area.slopeL / (2.0 * np.pi * r[-1]),
    )


def resample_area_table(x, area, n: int) -> AreaFunction:
    """Linear interpolation of an (x, A) table onto ``n`` uniform samples.

    Positions are shifted so the first row sits at the glottis, x = 0, and
    both table ends are kept as grid ends.  The end slopes are one-sided
    second-order differences on the table rows (the segment slopes for a
    two-row table).
    """
    x = np.asarray(x, dtype=float)
    area = np.asarray(area, dtype=float)
    if x.ndim != 1 or x.shape != area.shape or x.size < 2:
        raise ValueError("area table needs at least two (x, A) rows")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(area))):
        raise ValueError("area table has non-finite entries")
    if np.any(np.diff(x) <= 0):
        raise ValueError("table positions must be strictly increasing without duplicates")
    if np.any(area <= 0):
        raise ValueError("table areas must be positive")
    x = x - x[0]
    grid = Grid1D.over(0.0, float(x[-1]), n)
    values = np.interp(grid.points, x, area)
    values[-1] = area[-1]
    if x.size >= 3:
        d = np.gradient(area, x, edge_order=2)
        s0, sl = float(d[0]), float(d[-1])
    else:
        s0 = sl = float((area[1] - area[0]) / (x[1] - x[0]))
    return AreaFunction(grid, values, s0, sl)
