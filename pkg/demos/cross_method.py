"""Invert one randomized smooth duct by Gel'fand-Levitan, Marchenko and layer
stripping and compare the no-bound-state radii with the truth."""

import sys

import numpy as np

from vocaltract import fixtures as fx
from vocaltract.core import Grid1D
from vocaltract.direct import pressure_spectrum
from vocaltract.gelfand_levitan import enumerate_candidates
from vocaltract.marchenko import enumerate_candidates_marchenko
from vocaltract.time_domain import invert_time_domain


def main(seed=1, n_x=401):
    truth = fx.smooth_random_radius(seed)
    sp = pressure_spectrum(truth, Grid1D.wavenumbers(0.003, 1000))
    gl = enumerate_candidates(sp, truth.ell, n_x)
    mk = enumerate_candidates_marchenko(sp, truth.ell, n_x, report=gl.report)
    routes = {"gl": gl.no_bound, "marchenko": mk.no_bound}
    if truth.slopeL >= 0:
        routes["timedomain"] = invert_time_domain(sp, truth.ell, n_x)
    want = np.interp(gl.no_bound.x, truth.x, truth.values)
    print(f"seed {seed}: M = {gl.m_count}, r'(ell)/r(0) = {truth.slopeL / truth.r0:+.4f}")
    for name, r in routes.items():
        err = np.max(np.abs(r.values - want)) / want.max()
        print(f"{name:>10}: max relative radius error {err:.1e}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 1)
