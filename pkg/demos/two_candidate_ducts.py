"""Recover both ducts that share the spectrum |P(k)| = P_inf k / sqrt(k^2 + a^2).

The linear flare r = r0 (1 + a x) and its closing partner r0 (1 - a x)/(1 - a ell)
are indistinguishable from |P| alone; the inversion returns both.
"""

import numpy as np

from vocaltract import fixtures as fx
from vocaltract.core import Grid1D
from vocaltract.gelfand_levitan import enumerate_candidates

A, ELL, P_INF = 0.05, 16.0, 60.0


def main():
    sp = fx.linear_spectrum(A, P_INF, Grid1D.wavenumbers(0.003, 1000))
    cs = enumerate_candidates(sp, ELL, 401)
    print(f"eligible resonances: {cs.m_count}, beta = {cs.report.betas[0]:.6f}, "
          f"g^2 = {cs.report.g_sq[0]:.6f}")
    plus, minus = fx.linear_candidates(A, ELL, P_INF, cs.no_bound.x)
    radii = [cs.no_bound] + [c.radius for c in cs.with_bound]
    for r, want in zip(radii, (plus, minus)):
        err = np.max(np.abs(r.values - want)) / want.max()
        print(f"r(0) = {r.r0:.5f} cm, r(ell) = {r.rl:.5f} cm, "
              f"r'(ell)/r(0) = {r.slopeL / r.r0:+.5f}, max error {err:.1e}")


if __name__ == "__main__":
    main()
