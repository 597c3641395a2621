import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from d2dmimo.params import db_to_ratio, default_params
from d2dmimo.power import cue_cap_argument, cue_tx_power, d2d_tx_power
from d2dmimo.spectral import (_phi, area_se_cellular, area_se_d2d, cue_interference_kernel, cue_se, d2d_se,
                              xi1, xi2, xi3, xi4)

BASE = default_params()


def quad(f, a, b, **kw):
    kw.setdefault("epsabs", 0.0)
    kw.setdefault("epsrel", 1e-11)
    kw.setdefault("limit", 400)
    return integrate.quad(f, a, b, **kw)[0]


def brute_xi1(p, t):
    """Triple-nested scipy quadrature of E[(1 - e^{-t G beta P d^-a}) e^{-t I_M}]."""
    lam = math.pi * p.lambda_m
    a = p.alpha_m
    u_cap = cue_cap_argument(p)

    def power_of(nu):
        return cue_tx_power(p, math.sqrt(nu / lam))

    def per_interferer(d):
        # int_d^inf E_P[1 - 1/(1 + t beta P r^-a)] r dr, power averaged last
        def ring(pw):
            c = t * p.beta * pw
            return quad(lambda r: r * c / (c + r ** a), d, np.inf, epsrel=1e-12)
        cont = quad(lambda nu: math.exp(-nu) * ring(power_of(nu)), 0.0, u_cap, epsrel=1e-11)
        return cont + math.exp(-u_cap) * ring(p.p_max_c)

    def outer(u):
        d = math.sqrt(u / lam)
        sig = -math.expm1(-t * p.gamma_shape * p.beta * cue_tx_power(p, d) * d ** -a)
        return math.exp(-u) * sig * math.exp(-2 * math.pi * p.s_users * p.lambda_m * per_interferer(d))

    return quad(outer, 0.0, u_cap, epsrel=1e-9) + quad(outer, u_cap, 60.0, epsrel=1e-9)


def test_phi_against_direct_integral():
    alpha = 3.5
    for x in [1e-6, 0.01, 0.5, 1.0, 3.0, 1e4]:
        ref = x ** (2 / alpha) * quad(lambda y: y / (1 + y ** alpha), x ** (-1 / alpha), np.inf, epsrel=1e-13)
        assert _phi(np.array([x]), alpha)[0] == pytest.approx(ref, rel=1e-10)


def test_kernel_table_accuracy():
    k = cue_interference_kernel(BASE)
    assert k.interpolation_error < 1e-10
    y = np.exp(np.linspace(-20, 40, 37)) / BASE.p_max_c
    np.testing.assert_allclose(np.exp(k.log_value(np.log(y))), k.direct(y), rtol=1e-10)


def test_kernel_asymptotic_branches_match_quadrature():
    k = cue_interference_kernel(BASE)
    log_y = np.array([k.lo - 0.5, k.lo - 5.0, k.hi + 0.5, k.hi + 5.0]) - math.log(k.p_ref)
    np.testing.assert_allclose(np.exp(k.log_value(log_y)), k.direct(np.exp(log_y)), rtol=1e-10)


@pytest.mark.slow
@pytest.mark.parametrize("t", [1e11, 2e13])
def test_xi1_against_brute_force(t):
    p = BASE.replace(s_users=5, n_antennas=50)
    assert xi1(p, t) == pytest.approx(brute_xi1(p, t), rel=1e-7)


def test_xi1_limits():
    assert xi1(BASE, 0.0) == 0.0
    assert 0.0 < xi1(BASE, 1e13) < 1.0


@pytest.mark.parametrize("t", [1e9, 1e12, 1e15])
def test_xi3_against_distance_average(t):
    lam = math.pi * BASE.lambda_m
    link = BASE.beta * BASE.d_o ** -BASE.alpha_d

    def f(v):
        return math.exp(-v) / (1 + t * link * d2d_tx_power(BASE, math.sqrt(v / lam)))

    ref = quad(f, 0.0, 5.0, points=[1e-3, 0.1, 1.0]) + quad(f, 5.0, np.inf)
    assert xi3(BASE, t) == pytest.approx(ref, rel=1e-9)


def test_laplace_trivial_cases():
    assert xi2(BASE, 0.0) == 1.0
    assert xi4(BASE, 0.0) == 1.0
    assert xi2(BASE.replace(lambda_d=0.0), 1e15) == 1.0
    assert xi4(BASE.replace(lambda_d=0.0, s_users=0), 1e15) == 1.0
    assert xi3(BASE.replace(i_th=0.0), 1e15) == 1.0


@given(st.floats(6.0, 16.0), st.floats(0.01, 2.0))
def test_laplace_factors_decrease_in_t(log_t, step):
    t0, t1 = 10 ** log_t, 10 ** (log_t + step)
    for fn in (xi2, xi3, xi4):
        a, b = fn(BASE, t0), fn(BASE, t1)
        assert 0.0 <= b <= a <= 1.0


def test_d2d_se_against_scipy_outer_integral():
    lam = math.pi * BASE.lambda_m
    link = BASE.beta * BASE.d_o ** -BASE.alpha_d

    def one_minus_xi3(t):
        def f(v):
            a = t * link * d2d_tx_power(BASE, math.sqrt(v / lam))
            return math.exp(-v) * a / (1 + a)
        return quad(f, 0.0, 5.0, points=[1e-3, 0.1, 1.0], epsrel=1e-10) + quad(f, 5.0, 80.0, epsrel=1e-10)

    def g(s):
        t = math.exp(s)
        return one_minus_xi3(t) * xi4(BASE, t) * math.exp(-BASE.sigma2 * t)

    pivot = -math.log(BASE.sigma2)
    ref = (quad(g, pivot - 60, pivot, epsrel=1e-9, limit=200)
           + quad(g, pivot, pivot + 8, epsrel=1e-9, limit=200)) / math.log(2)
    assert d2d_se(BASE).value == pytest.approx(ref, rel=1e-7)


def test_fig2_values_and_errors(fig2):
    rc, rd = cue_se(fig2), d2d_se(fig2)
    assert 0 < rc.error_estimate < 1e-6 and 0 < rd.error_estimate < 1e-6
    assert rc.value == pytest.approx(1.3078, abs=1e-3)
    assert rd.value == pytest.approx(1.9338, abs=1e-3)


def test_d2d_se_independent_of_antennas():
    assert d2d_se(BASE).value == d2d_se(BASE.replace(n_antennas=123)).value


def test_cue_se_grows_with_antennas():
    lo, hi = cue_se(BASE.replace(n_antennas=100)).value, cue_se(BASE.replace(n_antennas=700)).value
    assert hi > lo


def test_d2d_se_vanishes_with_distance():
    assert d2d_se(BASE.replace(d_o=1e4)).value < 1e-6


def test_degenerate_networks():
    assert d2d_se(BASE.replace(i_th=0.0)).value == 0.0
    with pytest.raises(ValueError):
        cue_se(BASE.replace(s_users=0))
    assert area_se_cellular(BASE.replace(s_users=0)) == 0.0
    assert area_se_d2d(BASE.replace(lambda_d=0.0)) == 0.0


def test_area_se_is_product(fig2):
    rc = cue_se(fig2)
    assert area_se_cellular(fig2, rc) == rc.value * 20 * fig2.lambda_m
    twice = fig2.replace(lambda_m=2 * fig2.lambda_m)
    assert area_se_cellular(twice, rc) == pytest.approx(2 * area_se_cellular(fig2, rc), rel=1e-15)


def test_power_control_variants_run():
    for ith_db in (-20.0, math.inf):
        p = BASE.replace(i_th=math.inf if math.isinf(ith_db) else db_to_ratio(ith_db) * BASE.sigma2)
        assert 0 < d2d_se(p).value < 20
    assert 0 < cue_se(BASE.replace(eta=0.0)).value < 20
