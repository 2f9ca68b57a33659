import numpy as np
import pytest

from vocaltract import fixtures as fx
from vocaltract.core import AreaFunction, Grid1D, PotentialProfile, RadiusProfile
from vocaltract.direct import (
    JostEvaluator,
    asymptotic_tail,
    estimate_plateau,
    extend_radius,
    forward_webster,
    jost_from_potential,
    jost_solution,
    p_infinity_from_radius,
    potential_from_radius,
    pressure_spectrum,
    pressure_spectrum_jost,
    regular_solution,
    small_k_exponent,
)

from conftest import A, ELL


# -----------------------------------------------------------------------------
# Potential and extension
# -----------------------------------------------------------------------------

def test_potential_of_linear_radius_is_zero():
    q = potential_from_radius(fx.linear_radius(A, ELL))
    # second differences amplify round-off by 1/h^2
    assert np.max(np.abs(q.values)) < 1e-10
    assert q.cot_theta == pytest.approx(-A)


def test_potential_of_cosh_is_one():
    r = RadiusProfile.from_function(np.cosh, 1.0, 2001, dfunc=np.sinh)
    q = potential_from_radius(r)
    assert np.max(np.abs(q.values - 1.0)) < 1e-5
    assert q.cot_theta == pytest.approx(0.0, abs=1e-15)


def test_potential_of_bump_is_second_order():
    def exact(x):
        e = np.exp(-((x - 8.0) ** 2))
        return 0.3 * e * (4 * (x - 8.0) ** 2 - 2) / (1 + 0.3 * e)

    errs = []
    for n in (801, 1601):
        r = fx.bump_radius(n=n)
        errs.append(np.max(np.abs(potential_from_radius(r).values - exact(r.x))))
    assert errs[1] < 1e-3
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_extend_radius():
    g = Grid1D.over(0.0, 1.0, 3)
    r = RadiusProfile(g, np.array([1.0, 1.5, 2.0]), 1.0, 0.5)
    assert extend_radius(r, 2.0) == pytest.approx(2.5)
    flat = RadiusProfile(g, np.ones(3), 0.0, 0.0)
    assert np.allclose(extend_radius(flat, np.array([1.0, 5.0, 50.0])), 1.0)
    closing = RadiusProfile(g, np.ones(3), 0.0, -0.25)
    assert extend_radius(closing, 5.0) == pytest.approx(0.0)


# -----------------------------------------------------------------------------
# Jost function
# -----------------------------------------------------------------------------

def test_jost_of_zero_potential():
    k = np.array([0.1, 1.0, 2.5])
    free = PotentialProfile.constant(0.0, 0.0, ELL)
    assert np.allclose(jost_from_potential(free, k), k, atol=1e-7)
    shifted = PotentialProfile.constant(0.0, -A, ELL)
    assert np.allclose(jost_from_potential(shifted, k), k + 1j * A, atol=1e-7)


@pytest.mark.parametrize("v, cot", [(1 / 200, -1.0), (-1 / 100, 1 / 100), (-1 / 300, 1 / 100)])
def test_jost_matches_constant_potential_oracle(v, cot):
    k = np.array([0.003, 0.05, 0.4, 1.0, 3.0, 0.2j, -0.08j])
    pot = PotentialProfile.constant(v, cot, ELL, 401)
    got = jost_from_potential(pot, k, rtol=1e-11, atol=1e-13)
    want = fx.constant_jost(k, v, cot, ELL)
    assert np.max(np.abs(got - want) / np.maximum(1.0, np.abs(want))) < 1e-8


def test_jost_conjugate_symmetry():
    pot = potential_from_radius(fx.bump_radius(n=801))
    k = np.linspace(0.05, 3.0, 25)
    F = jost_from_potential(pot, k)
    Fm = jost_from_potential(pot, -k)
    assert np.max(np.abs(Fm + np.conj(F))) < 1e-7


def test_jost_minus_k_bounded():
    pot = potential_from_radius(fx.bump_radius(n=801))
    k = np.array([10.0, 20.0, 40.0])
    d = np.abs(jost_from_potential(pot, k) - k)
    assert np.all(d < 1.0)


def test_jost_at_zero_gives_lip_slope():
    r = fx.smooth_random_radius(7, n=3201, lip_slope=-0.03)
    pot = potential_from_radius(r)
    F0 = jost_from_potential(pot, 0.0, rtol=1e-11, atol=1e-13)
    assert F0 == pytest.approx(1j * r.slopeL / r.r0, abs=2e-6)
    # H(0) = -i F(0)
    assert (-1j * F0).real == pytest.approx(r.slopeL / r.r0, abs=2e-6)


def test_jost_derivative_at_zero_for_flat_lips():
    r = fx.smooth_random_radius(3, n=3201, lip_slope=0.0)
    ev = JostEvaluator(potential_from_radius(r))
    assert abs(ev(0.0)) < 1e-6
    assert ev.derivative(0.0).real == pytest.approx(r.rl / r.r0, rel=1e-5)


def test_wronskian_is_constant():
    r = fx.smooth_random_radius(11, lip_slope=0.02)
    pot = potential_from_radius(r)
    xs = np.array([2.0, 5.0, 8.0, 11.0, 14.0])
    js = jost_solution(pot, 0.0, x_eval=xs, rtol=1e-13, atol=1e-15)
    _, phi, dphi = regular_solution(pot, 0.0, x_eval=xs, rtol=1e-13, atol=1e-15)
    w = (js.f[0] * dphi[0] - js.df[0] * phi[0]).real
    assert np.ptp(w) / abs(w.mean()) < 1e-8
    # the value carries the O(h^2) error of the sampled potential
    assert w.mean() == pytest.approx(r.slopeL / r.r0, rel=1e-4)


def test_regular_solution_at_zero_is_normalized_radius():
    errs = []
    for n in (801, 1601):
        r = fx.bump_radius(n=n)
        _, phi, _ = regular_solution(potential_from_radius(r), 0.0, rtol=1e-11, atol=1e-13)
        errs.append(np.max(np.abs(phi[0].real - r.values / r.r0)))
    # the error is that of the sampled potential, O(h^2)
    assert errs[1] < 1e-4
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


# -----------------------------------------------------------------------------
# Webster system and spectra
# -----------------------------------------------------------------------------

def test_uniform_tract_spectrum(kgrid, consts):
    area = AreaFunction(Grid1D.over(0.0, ELL, 101), np.full(101, 3.0), 0.0, 0.0)
    state = forward_webster(area, [0.1, 1.0, 3.0], consts)
    assert np.allclose(np.abs(state.v_tilde), 3.0 / consts.c_mu, rtol=1e-8)
    sp = pressure_spectrum(area, kgrid, consts)
    assert np.allclose(sp.values, consts.c_mu / 3.0, rtol=1e-6)
    assert sp.p_inf == pytest.approx(consts.c_mu / 3.0)


def test_webster_rejects_zero_k():
    area = AreaFunction(Grid1D.over(0.0, 1.0, 5), np.ones(5), 0.0, 0.0)
    with pytest.raises(ValueError):
        forward_webster(area, [0.0, 1.0])


def test_linear_duct_spectrum(kgrid, consts):
    r = fx.linear_radius(A, ELL, r0=1.0)
    sp = pressure_spectrum(r, kgrid, consts)
    k = kgrid.points
    assert sp.p_inf == pytest.approx(consts.c_mu / (np.pi * (1 + A * ELL)))
    want = k / np.sqrt(k**2 + A**2) * sp.p_inf
    assert np.max(np.abs(sp.values - want) / want) < 1e-6


def test_constant_potential_p_inf():
    r = fx.constant_radius(1 / 200, -1.0, ELL, 0.1)
    assert p_infinity_from_radius(r) == pytest.approx(61.3665, abs=5e-4)


def test_p_infinity_scaling():
    g = Grid1D.over(0.0, 1.0, 3)
    one = RadiusProfile(g, np.ones(3), 0.0, 0.0)
    assert p_infinity_from_radius(one) == pytest.approx(41.16 / np.pi, rel=1e-14)
    assert p_infinity_from_radius(one) == pytest.approx(13.1016, abs=5e-5)
    two = RadiusProfile(g, np.array([2.0, 2.0, 1.0]), 0.0, 0.0)
    assert p_infinity_from_radius(two) == pytest.approx(p_infinity_from_radius(one) / 2)


def test_webster_and_jost_routes_agree(consts):
    kg = Grid1D.wavenumbers(0.01, 300)
    r = fx.constant_radius(1 / 200, -1.0, ELL, 0.1)
    a = pressure_spectrum(r, kg, consts)
    b = pressure_spectrum_jost(r, kg, consts)
    assert np.max(np.abs(a.values - b.values) / b.values) < 1e-6


def test_webster_and_jost_routes_agree_on_smooth_duct(consts):
    kg = Grid1D.wavenumbers(0.01, 300)
    r = fx.smooth_random_radius(5, n=3201)
    a = pressure_spectrum(r, kg, consts)
    b = pressure_spectrum_jost(r, kg, consts)
    assert np.max(np.abs(a.values - b.values) / b.values) < 1e-5


def test_small_k_behaviour(kgrid):
    sloped = pressure_spectrum(fx.smooth_random_radius(2, lip_slope=0.03), kgrid)
    flat = pressure_spectrum(fx.smooth_random_radius(2, lip_slope=0.0), kgrid)
    assert small_k_exponent(sloped) == pytest.approx(1.0, abs=0.05)
    assert small_k_exponent(flat) == pytest.approx(0.0, abs=0.05)
    assert flat.values[0] > 0.1 * flat.p_inf


def test_estimate_plateau_recovers_tail_model():
    k = np.linspace(1.0, 3.0, 400)
    p = 5.0 * np.sqrt(1.0 + 0.04 / k**2)
    p_inf, c = estimate_plateau(k, p)
    assert p_inf == pytest.approx(5.0, rel=1e-10)
    assert c == pytest.approx(0.04, rel=1e-8)


# -----------------------------------------------------------------------------
# Large-k tail
# -----------------------------------------------------------------------------

def test_tail_for_zero_potential():
    pot = PotentialProfile.constant(0.0, -A, ELL)
    k = np.array([1.0, 2.0, 3.0])
    exact = k**2 / (k**2 + A**2)
    tail = asymptotic_tail(pot, k)
    assert np.all(np.abs(tail - exact) < 2 * A**4 / k**4)
    assert np.allclose(asymptotic_tail(PotentialProfile.constant(0.0, 0.0, ELL), k), 1.0)


def test_tail_for_constant_potential():
    v, cot = 1 / 200, -1.0
    pot = PotentialProfile.constant(v, cot, ELL)
    k = np.array([3.0, 6.0, 12.0])
    exact = k**2 / np.abs(fx.constant_jost(k, v, cot, ELL)) ** 2
    err = np.abs(asymptotic_tail(pot, k) - exact)
    # what remains is the 1/k^4 order, about cot^4/k^4
    assert err[0] < 2 * cot**4 / k[0] ** 4
    assert err[0] < 0.15 * abs(1 - exact[0])
    assert err[1] / err[2] == pytest.approx(16.0, rel=0.15)
