import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from d2dmimo.params import default_params
from d2dmimo.power import avg_cue_power, cue_tx_power, d2d_tx_power
from d2dmimo.scaling import (ScaleDomainError, lower_bound_cue_se, lower_bound_d2d_se, max_d2d_density_cellular,
                             max_d2d_density_d2d, mean_cue_interference, mean_cue_interference_closed, x1,
                             x2_x3, x4_x5_x6)
from d2dmimo.spectral import cue_se, d2d_se

BASE = default_params()


def rayleigh_log_expect(p, g):
    lam = math.pi * p.lambda_m
    f = lambda v: g(math.sqrt(v / lam)) * math.exp(-v)
    return (integrate.quad(f, 0, 5, points=[1e-6, 1e-3, 0.1, 1], epsabs=0, epsrel=1e-13, limit=400)[0]
            + integrate.quad(f, 5, np.inf, epsabs=0, epsrel=1e-13, limit=400)[0])


@pytest.mark.parametrize("eta", [0.2, 0.8, 1.0])
def test_x1_is_geometric_mean_of_link_gain(eta):
    p = BASE.replace(eta=eta)
    ref = rayleigh_log_expect(p, lambda r: math.log(cue_tx_power(p, r) * p.beta * r ** -p.alpha_m))
    assert math.log(x1(p)) == pytest.approx(ref, rel=1e-9)


def test_x1_always_capped_limit():
    # p_o so large that every CUE transmits at p_max_c
    p = BASE.replace(p_o=1e30)
    psi1 = -0.5772156649015329
    ref = p.p_max_c * p.beta * (math.pi * p.lambda_m) ** (p.alpha_m / 2) * math.exp(-(p.alpha_m / 2) * psi1)
    assert x1(p) == pytest.approx(ref, rel=1e-10)


def test_uncorrected_x1_sign_differs():
    assert abs(math.log(x1(BASE, verbatim=True) / x1(BASE))) > 1.0
    with pytest.raises(ScaleDomainError):
        x1(BASE.replace(eta=0.0), verbatim=True)


def test_x4_includes_fading_log_mean():
    euler_log = integrate.quad(lambda x: math.log(x) * math.exp(-x), 0, np.inf)[0]
    ref = (rayleigh_log_expect(BASE, lambda r: math.log(d2d_tx_power(BASE, r)))
           + math.log(BASE.beta) - BASE.alpha_d * math.log(BASE.d_o) + euler_log)
    assert math.log(x4_x5_x6(BASE)[0]) == pytest.approx(ref, rel=1e-9)


def test_mean_cue_interference_routes_agree():
    a, b = mean_cue_interference(BASE), mean_cue_interference_closed(BASE)
    assert a == pytest.approx(b, rel=1e-9)
    # third route: Campbell's integral over the exclusion distance by scipy
    lam = math.pi * BASE.lambda_m
    coef = 2 * math.pi * BASE.s_users * BASE.lambda_m * BASE.beta * avg_cue_power(BASE) / (BASE.alpha_m - 2)
    ref = coef * rayleigh_log_expect(BASE, lambda r: r ** (2 - BASE.alpha_m))
    assert a == pytest.approx(ref, rel=1e-8)


def test_mean_cue_interference_domain():
    with pytest.raises(ScaleDomainError):
        mean_cue_interference(BASE.replace(alpha_m=4.0))


def test_reference_distance_terms():
    x2, x3 = x2_x3(BASE.replace(s_users=0))
    assert x2 == BASE.sigma2
    # int_0^inf max(1, r)^-a r dr = 1/2 + 1/(a-2)
    a = BASE.alpha_d
    ref = integrate.quad(lambda r: max(1.0, r) ** -a * r, 0, 1)[0] + integrate.quad(lambda r: r ** (1 - a), 1, np.inf)[0]
    _, x5, _ = x4_x5_x6(BASE)
    assert x5 == pytest.approx(2 * math.pi * avg_cue_power(BASE) * BASE.beta * ref, rel=1e-12)


@pytest.mark.parametrize("change", [{}, dict(eta=0.5), dict(lambda_d=10 * BASE.lambda_m), dict(i_th=math.inf)])
def test_lower_bounds_below_exact(change):
    p = BASE.replace(**change)
    assert lower_bound_cue_se(p) <= cue_se(p).value
    assert lower_bound_cue_se(p, exact=True) <= lower_bound_cue_se(p)
    assert lower_bound_d2d_se(p) <= d2d_se(p).value


@given(st.floats(1e-5, 0.05))
def test_cellular_threshold_round_trip(r_th):
    th = max_d2d_density_cellular(BASE, r_th)
    assert th.status == "ok"
    back = lower_bound_cue_se(BASE.replace(lambda_d=th.value))
    assert back == pytest.approx(r_th, rel=1e-6)


@given(st.floats(1e-6, 5e-4))
def test_d2d_threshold_round_trip(r_th):
    th = max_d2d_density_d2d(BASE, r_th)
    assert th.status == "ok"
    assert lower_bound_d2d_se(BASE.replace(lambda_d=th.value)) == pytest.approx(r_th, rel=1e-6)


def test_threshold_statuses():
    assert max_d2d_density_cellular(BASE, 0.0).status == "unbounded"
    assert max_d2d_density_d2d(BASE, 0.0).label() == "unbounded"
    assert max_d2d_density_d2d(BASE, 5.0).status == "infeasible"
    assert max_d2d_density_cellular(BASE, 50.0).label() == "infeasible"
    with pytest.raises(ValueError):
        max_d2d_density_cellular(BASE, -1.0)


def test_thresholds_shrink_with_target():
    a = max_d2d_density_cellular(BASE, 1e-3).value
    b = max_d2d_density_cellular(BASE, 2e-3).value
    assert b < a
