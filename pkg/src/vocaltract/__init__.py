"""Vocal tract shapes from absolute lip-pressure spectra."""

__version__ = "0.1.0"

from .core import (
    AreaFunction,
    Candidate,
    CandidateSet,
    Grid1D,
    PhysicalConstants,
    PotentialProfile,
    PressureSpectrum,
    RadiusProfile,
    ResonanceReport,
    Scenario,
    area_to_radius,
    k_from_frequency,
    radius_to_area,
    resample_area_table,
)
from .direct import (
    jost_from_potential,
    potential_from_radius,
    pressure_spectrum,
    pressure_spectrum_jost,
    regular_solution,
)
from .gelfand_levitan import enumerate_candidates, solve_gl
from .marchenko import enumerate_candidates_marchenko, solve_marchenko
from .spectral import classify_scenario, find_eligible_resonances, outer_jost
from .time_domain import estimate_length, invert_time_domain

__all__ = [
    "AreaFunction",
    "Candidate",
    "CandidateSet",
    "Grid1D",
    "PhysicalConstants",
    "PotentialProfile",
    "PressureSpectrum",
    "RadiusProfile",
    "ResonanceReport",
    "Scenario",
    "area_to_radius",
    "classify_scenario",
    "enumerate_candidates",
    "enumerate_candidates_marchenko",
    "estimate_length",
    "find_eligible_resonances",
    "invert_time_domain",
    "jost_from_potential",
    "k_from_frequency",
    "outer_jost",
    "potential_from_radius",
    "pressure_spectrum",
    "pressure_spectrum_jost",
    "radius_to_area",
    "regular_solution",
    "resample_area_table",
    "solve_gl",
    "solve_marchenko",
]
