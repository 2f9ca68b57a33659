"""
Command-line front end: ``vocaltract forward|inverse|roundtrip``.

File formats are plain CSV with fixed headers and JSON side files:

* area table        ``x_cm,area_cm2``
* radius profile    ``x_cm,radius_cm``
* spectrum          ``k_rad_per_cm,abs_pressure`` plus ``<name>.json``
                    holding ``p_inf``, ``tail_c`` and ``ell`` when known
* report            ``report.json``
* manifest          ``manifest.json`` with everything needed to rerun

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .core import (
    AreaFunction,
    Candidate,
    CandidateSet,
    Grid1D,
    PhysicalConstants,
    PressureSpectrum,
    RadiusProfile,
    radius_to_area,
    resample_area_table,
)
from .direct import (
    IntegrationError,
    estimate_plateau,
    fit_tail_constant,
    potential_from_radius,
    pressure_spectrum,
    regular_solution,
)
from .gelfand_levitan import admissible, enumerate_candidates
from .marchenko import enumerate_candidates_marchenko
from .spectral import classify_scenario, find_eligible_resonances
from .time_domain import estimate_length, invert_time_domain

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

AREA_HEADER = ("x_cm", "area_cm2")
RADIUS_HEADER = ("x_cm", "radius_cm")
SPECTRUM_HEADER = ("k_rad_per_cm", "abs_pressure")

METHODS = ("gl", "marchenko", "timedomain")


class InputError(ValueError):
    """Malformed or inconsistent input file or option."""


# -----------------------------------------------------------------------------
# Configuration
# -----------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    c: float = 34300.0
    mu: float = 0.0012
    ell: Optional[float] = None
    ell_auto: bool = False
    ell_max: float = 25.0
    dk: float = 0.003
    n_k: int = 1000
    n_x: int = 401
    method: str = "gl"
    beta_max: Optional[float] = None
    allow_negative_lip_slope: bool = False
    out: str = "out"
    tolerances: dict = field(default_factory=lambda: {"ode_rtol": 1e-9, "ode_atol": 1e-9})

    def __post_init__(self):
        for name in ("c", "mu", "dk", "ell_max"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if self.n_k < 2 or self.n_x < 5:
            raise InputError("grids need n_k >= 2 and n_x >= 5")
        if self.ell is not None and not self.ell > 0:
            raise InputError("ell must be positive")
        if self.beta_max is not None and not self.beta_max > 0:
            raise InputError("beta_max must be positive")
        if self.method not in METHODS:
            raise InputError(f"method must be one of {METHODS}")

    @property
    def constants(self) -> PhysicalConstants:
        return PhysicalConstants(self.c, self.mu)


# -----------------------------------------------------------------------------
# CSV and JSON
# -----------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_columns(path, header, *columns) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([_fmt(v) for v in row])


def read_columns(path, header=None) -> np.ndarray:
    """Two numeric columns from a CSV (comma or whitespace separated).

    A header row is optional; when ``header`` is given and a header row is
    present it must match exactly.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    rows = []
    first = True
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p for p in line.replace(",", " ").split() if p]
        if first:
            first = False
            try:
                [float(p) for p in parts]
            except ValueError:
                if header is not None and tuple(line.replace(" ", "").split(",")) != tuple(header):
                    raise InputError(f"{path}: expected header {','.join(header)}, got {line}")
                continue
        if len(parts) != 2:
            raise InputError(f"{path}: expected two columns, got {line!r}")
        try:
            rows.append([float(parts[0]), float(parts[1])])
        except ValueError:
            raise InputError(f"{path}: non-numeric row {line!r}")
    if not rows:
        raise InputError(f"{path}: no data rows")
    data = np.array(rows)
    if not np.all(np.isfinite(data)):
        raise InputError(f"{path}: non-finite values")
    return data


def _write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def ingest_area_table(path, n: int = 1601) -> AreaFunction:
    """Read an (x, A) table and resample it linearly onto ``n`` uniform points.

    The first and last x are kept as the grid ends.  Rejects non-increasing
    or duplicate x and non-positive areas.
    """
    data = read_columns(path, AREA_HEADER)
    try:
        return resample_area_table(data[:, 0], data[:, 1], n)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def write_area(path, area: AreaFunction) -> None:
    write_columns(path, AREA_HEADER, area.x, area.values)


def write_radius(path, profile: RadiusProfile) -> None:
    write_columns(path, RADIUS_HEADER, profile.x, profile.values)


def read_radius(path) -> RadiusProfile:
    data = read_columns(path, RADIUS_HEADER)
    x = data[:, 0]
    if x.size < 3 or not np.allclose(np.diff(x), x[1] - x[0], rtol=1e-9, atol=1e-12):
        raise InputError("radius file must be on a uniform grid")
    return RadiusProfile.from_samples(Grid1D(x[0], x[1] - x[0], x.size), data[:, 1])


def spectrum_sidecar(path) -> Path:
    path = Path(path)
    return path.with_suffix(".json")


def write_spectrum(path, spectrum: PressureSpectrum, ell: Optional[float] = None) -> None:
    write_columns(path, SPECTRUM_HEADER, spectrum.k, spectrum.values)
    meta = {"p_inf": spectrum.p_inf, "tail_c": spectrum.tail_c}
    if ell is not None:
        meta["ell"] = ell
    _write_json(spectrum_sidecar(path), meta)


def read_spectrum(path):
    """Spectrum and its metadata dict.

    ``p_inf`` and ``tail_c`` come from the side file when present,
    otherwise from a regression of |P|^2 on 1/k^2 over the top of the band.
    """
    data = read_columns(path, SPECTRUM_HEADER)
    k, p = data[:, 0], data[:, 1]
    if k.size < 10:
        raise InputError("spectrum needs at least 10 samples")
    dk = k[1] - k[0]
    if not (dk > 0 and np.allclose(k, dk * np.arange(1, k.size + 1), rtol=1e-9, atol=1e-12)):
        raise InputError("spectrum must be sampled at k_j = j dk, j = 1..n")
    if np.any(p <= 0):
        raise InputError("absolute pressure must be positive")
    meta = {}
    side = spectrum_sidecar(path)
    if side.exists():
        meta = json.loads(side.read_text())
    if "p_inf" in meta:
        p_inf = float(meta["p_inf"])
        tail_c = float(meta.get("tail_c", fit_tail_constant(k, p, p_inf)))
    else:
        p_inf, tail_c = estimate_plateau(k, p)
        meta["p_inf_estimated"] = True
    spectrum = PressureSpectrum(Grid1D(dk, dk, k.size), p, p_inf, tail_c)
    return spectrum, meta


# -----------------------------------------------------------------------------
# Commands
# -----------------------------------------------------------------------------

def _manifest(cfg: RunConfig, command: str, inputs: dict, extra: dict) -> dict:
    return {
        "command": command,
        "version": __version__,
        "config": asdict(cfg),
        "inputs": inputs,
        "grids": {"k": {"dk": cfg.dk, "n_k": cfg.n_k}, "x": {"n_x": cfg.n_x}},
        "created_unix": time.time(),
        **extra,
    }


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_forward(cfg: RunConfig, area_path) -> Path:
    """Area table -> spectrum.csv (+ side file) in the output directory."""
    area = ingest_area_table(area_path)
    kgrid = Grid1D.wavenumbers(cfg.dk, cfg.n_k)
    spectrum = pressure_spectrum(area, kgrid, cfg.constants)
    out = _outdir(cfg)
    target = out / "spectrum.csv"
    write_spectrum(target, spectrum, area.ell)
    _write_json(out / "manifest.json", _manifest(cfg, "forward", {"area": str(area_path)},
                                                 {"p_inf": spectrum.p_inf, "ell": area.ell}))
    return target


def _resolve_ell(cfg: RunConfig, spectrum: PressureSpectrum, meta: dict) -> float:
    if cfg.ell_auto:
        return estimate_length(spectrum, cfg.ell_max, n_x=2 * cfg.n_x - 1)
    if cfg.ell is not None:
        return cfg.ell
    if "ell" in meta:
        return float(meta["ell"])
    raise InputError("tract length unknown: pass --ell <cm> or --ell auto")


def invert(spectrum: PressureSpectrum, ell: float, cfg: RunConfig):
    """Run the configured inverse method; returns a CandidateSet."""
    if cfg.method == "gl":
        return enumerate_candidates(spectrum, ell, cfg.n_x, "darboux", cfg.beta_max, cfg.constants)
    if cfg.method == "marchenko":
        return enumerate_candidates_marchenko(spectrum, ell, cfg.n_x, cfg.beta_max, consts=cfg.constants)
    profile = invert_time_domain(spectrum, ell, cfg.n_x, cfg.constants,
                                 allow_negative_lip_slope=cfg.allow_negative_lip_slope)
    return _time_domain_candidates(profile, cfg.beta_max)


def _time_domain_candidates(profile: RadiusProfile, beta_max=None) -> CandidateSet:
    """Wrap a layer-stripping result as a candidate set.

    Layer stripping yields only the bound-state-free duct.  Its eligible
    resonances are still located, and their admissibility tested, so the
    report shows whether ducts with r'(ell) < 0 share the spectrum.  Those
    candidates are listed without radii.
    """
    potential = potential_from_radius(profile)
    report = find_eligible_resonances(potential, beta_max)
    phi0 = profile.values / profile.r0
    cands = []
    for beta, g_sq, m_sq in zip(report.betas, report.g_sq, report.m_sq):
        _, phi_ib, _ = regular_solution(potential, 1j * beta)
        ok = admissible(phi0, phi_ib[0].real, beta, profile.x)
        cands.append(Candidate(beta, g_sq, m_sq, float(potential.cot_theta + g_sq), phi0, None, ok))
    return CandidateSet(profile, tuple(cands), report, -profile.slope0 / profile.r0,
                        {"method": "timedomain", "bound_state_radii": False})


def _report(cands, spectrum: PressureSpectrum, ell: float) -> dict:
    rep = cands.report
    scenarios = [classify_scenario(potential_from_radius(cands.no_bound)).value]
    for c in cands.with_bound:
        scenarios.append(classify_scenario(potential_from_radius(c.radius)).value
                         if c.radius is not None else None)
    return {
        "m_count": rep.m_count if rep is not None else 0,
        "betas": list(rep.betas) if rep is not None else [],
        "g_sq": list(rep.g_sq) if rep is not None else [],
        "m_sq": list(rep.m_sq) if rep is not None else [],
        "scenario": rep.scenario.value if rep is not None else scenarios[0],
        "admissible": [c.admissible for c in cands.with_bound],
        "p_inf": spectrum.p_inf,
        "ell": ell,
        "candidate_scenarios": scenarios,
        "candidate_cot_theta": [cands.no_bound_cot_theta] + [c.cot_theta for c in cands.with_bound],
        "beta_max": rep.beta_max if rep is not None else None,
    }


def _write_candidates(out: Path, cands) -> list:
    files = []
    profiles = [cands.no_bound] + [c.radius for c in cands.with_bound if c.radius is not None]
    for i, prof in enumerate(profiles):
        rpath = out / f"candidate_{i}_radius.csv"
        apath = out / f"candidate_{i}_area.csv"
        write_radius(rpath, prof)
        write_area(apath, radius_to_area(prof))
        files.extend([rpath.name, apath.name])
    return files


def cmd_inverse(cfg: RunConfig, spectrum_path) -> dict:
    """Spectrum -> candidate radius/area files and report.json."""
    spectrum, meta = read_spectrum(spectrum_path)
    ell = _resolve_ell(cfg, spectrum, meta)
    cands = invert(spectrum, ell, cfg)
    out = _outdir(cfg)
    files = _write_candidates(out, cands)
    # plot-ready copy of the data actually inverted
    write_columns(out / "spectrum_plot.csv", SPECTRUM_HEADER, spectrum.k, spectrum.values)
    report = _report(cands, spectrum, ell)
    report["method"] = cfg.method
    _write_json(out / "report.json", report)
    _write_json(out / "manifest.json", _manifest(cfg, "inverse", {"spectrum": str(spectrum_path)},
                                                 {"ell_used": ell, "outputs": files, "spectrum_meta": meta}))
    return report


def area_errors(table, profiles) -> tuple:
    """Max and L2 relative area errors of each profile at the table rows."""
    xt = table[:, 0] - table[0, 0]
    at = table[:, 1]
    max_err, l2_err = [], []
    for prof in profiles:
        a_rec = np.interp(xt, prof.x, np.pi * prof.values**2)
        max_err.append(float(np.max(np.abs(a_rec - at) / at)))
        l2_err.append(float(np.linalg.norm(a_rec - at) / np.linalg.norm(at)))
    return max_err, l2_err


def cmd_roundtrip(cfg: RunConfig, area_path) -> dict:
    """Forward-solve an area table, invert, and compare with the input."""
    area = ingest_area_table(area_path)
    kgrid = Grid1D.wavenumbers(cfg.dk, cfg.n_k)
    spectrum = pressure_spectrum(area, kgrid, cfg.constants)
    out = _outdir(cfg)
    write_spectrum(out / "spectrum.csv", spectrum, area.ell)
    ell = area.ell if not cfg.ell_auto else estimate_length(spectrum, cfg.ell_max, n_x=2 * cfg.n_x - 1)
    cands = invert(spectrum, ell, cfg)
    files = _write_candidates(out, cands)
    max_err, l2_err = area_errors(read_columns(area_path, AREA_HEADER), cands.admissible_profiles())
    report = _report(cands, spectrum, ell)
    report["method"] = cfg.method
    report["max_rel_area_error"] = max_err
    report["l2_rel_area_error"] = l2_err
    report["best_candidate"] = int(np.argmin(max_err))
    _write_json(out / "report.json", report)
    _write_json(out / "manifest.json", _manifest(cfg, "roundtrip", {"area": str(area_path)},
                                                 {"ell_used": ell, "outputs": files}))
    return report


# -----------------------------------------------------------------------------
# Entry point
# -----------------------------------------------------------------------------

def _ell_arg(text: str):
    if text == "auto":
        return "auto"
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--ell takes a length in cm or 'auto'")
    if not v > 0:
        raise argparse.ArgumentTypeError("--ell must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vocaltract", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--dk", type=float, default=0.003, help="k step in rad/cm")
        p.add_argument("--nk", type=int, default=1000, help="number of k samples")
        p.add_argument("--nx", type=int, default=401, help="number of x samples on [0, ell]")
        p.add_argument("--c", type=float, default=34300.0, help="sound speed, cm/s")
        p.add_argument("--mu", type=float, default=0.0012, help="air density, g/cm^3")
        p.add_argument("--out", default="out", help="output directory")

    def inverse_opts(p):
        p.add_argument("--method", choices=METHODS, default="gl")
        p.add_argument("--ell", type=_ell_arg, default=None, help="tract length in cm, or 'auto'")
        p.add_argument("--ell-max", type=float, default=25.0, help="search length for --ell auto")
        p.add_argument("--beta-max", type=float, default=None)
        p.add_argument("--allow-negative-lip-slope", action="store_true")

    p = sub.add_parser("forward", help="area table -> absolute pressure spectrum")
    p.add_argument("area")
    common(p)
    p = sub.add_parser("inverse", help="spectrum -> candidate ducts and report")
    p.add_argument("spectrum")
    common(p)
    inverse_opts(p)
    p = sub.add_parser("roundtrip", help="area -> spectrum -> area, with error report")
    p.add_argument("area")
    common(p)
    inverse_opts(p)
    return parser


def config_from_args(args) -> RunConfig:
    ell = getattr(args, "ell", None)
    return RunConfig(
        c=args.c, mu=args.mu,
        ell=None if ell in (None, "auto") else ell,
        ell_auto=ell == "auto",
        ell_max=getattr(args, "ell_max", 25.0),
        dk=args.dk, n_k=args.nk, n_x=args.nx,
        method=getattr(args, "method", "gl"),
        beta_max=getattr(args, "beta_max", None),
        allow_negative_lip_slope=getattr(args, "allow_negative_lip_slope", False),
        out=args.out,
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        cfg = config_from_args(args)
        if args.command == "forward":
            path = cmd_forward(cfg, args.area)
            print(path)
        elif args.command == "inverse":
            print(json.dumps(cmd_inverse(cfg, args.spectrum), indent=2))
        else:
            print(json.dumps(cmd_roundtrip(cfg, args.area), indent=2))
    except (IntegrationError, np.linalg.LinAlgError, FloatingPointError) as exc:
        # LinAlgError subclasses ValueError, so this clause comes first
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # InputError, LipSlopeError and model-validation errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
