"""Transmit-power laws and the distributions they induce.

CUEs use open-loop path-loss compensation capped at ``p_max_c``; a D2D
transmitter keeps its mean received power at the nearest MBS at ``i_th``,
capped at ``p_max_d``. With nearest-MBS distances Rayleigh distributed
(``2 pi lambda_m r exp(-pi lambda_m r^2)``) the D2D power has a continuous
part on ``[0, p_max_d)`` plus an atom at ``p_max_d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .params import SystemParams
from .quadrature import integrate_finite
from .special import (EULER_GAMMA, exp_integral_e1, gamma, lower_incomplete_gamma,
                      upper_incomplete_gamma)

MOMENT_TOL = (1e-12, 1e-300)


def _as_output(x, out):
    return float(out) if np.ndim(x) == 0 else out


# --- CUE power -------------------------------------------------------------

def cue_cutoff_log_distance(p: SystemParams) -> float:
    """ln r_o, the serving distance beyond which the CUE cap binds (+-inf when eta = 0)."""
    if p.eta == 0:
        return -math.inf if p.p_o >= p.p_max_c else math.inf
    return math.log(p.p_max_c / p.p_o) / (p.alpha_m * p.eta) + math.log(p.beta) / p.alpha_m


def cue_cutoff_distance(p: SystemParams) -> float:
    log_r = cue_cutoff_log_distance(p)
    return math.exp(log_r) if log_r < 700 else math.inf


def cue_cap_argument(p: SystemParams) -> float:
    """pi lambda_m r_o^2, the exponential-scale cutoff (may be inf or 0)."""
    log_r = cue_cutoff_log_distance(p)
    if log_r == -math.inf:
        return 0.0
    log_u = math.log(math.pi * p.lambda_m) + 2.0 * log_r
    return math.exp(log_u) if log_u < 700 else math.inf


def cue_tx_power(p: SystemParams, dist):
    """min{P_max^C, P_o (beta d^-alpha_M)^-eta}."""
    d = np.asarray(dist, dtype=float)
    with np.errstate(over="ignore"):
        uncapped = p.p_o * (p.beta * d ** (-p.alpha_m)) ** (-p.eta)
    return _as_output(dist, np.minimum(p.p_max_c, uncapped))


# --- D2D power -------------------------------------------------------------

def d2d_tx_power(p: SystemParams, dist):
    """min{P_max^D, I_th / (beta d^-alpha_M)}."""
    d = np.asarray(dist, dtype=float)
    if math.isinf(p.i_th):
        out = np.full_like(d, p.p_max_d)
    else:
        with np.errstate(over="ignore"):
            out = np.minimum(p.p_max_d, p.i_th * d ** p.alpha_m / p.beta)
    return _as_output(dist, out)


def varpi0(p: SystemParams) -> float:
    """pi lambda_m (beta P_max^D / I_th)^(2/alpha_M)."""
    if math.isinf(p.i_th):
        return 0.0
    if p.i_th == 0:
        return math.inf
    return math.pi * p.lambda_m * (p.beta * p.p_max_d / p.i_th) ** (2.0 / p.alpha_m)


def d2d_survival(p: SystemParams, x):
    """exp(-pi lambda_m (beta x / I_th)^(2/alpha_M)); probability the threshold law exceeds x."""
    x = np.asarray(x, dtype=float)
    if math.isinf(p.i_th):
        return np.ones_like(x) if x.ndim else 1.0
    if p.i_th == 0:
        out = np.where(x > 0, 0.0, 1.0)
    else:
        out = np.exp(-math.pi * p.lambda_m * (p.beta * x / p.i_th) ** (2.0 / p.alpha_m))
    return _as_output(x, out)


def d2d_power_cdf(p: SystemParams, x):
    x_arr = np.asarray(x, dtype=float)
    surv = np.asarray(d2d_survival(p, np.maximum(x_arr, 0.0)), dtype=float)
    out = np.where(x_arr >= p.p_max_d, 1.0, 1.0 - surv)
    out = np.where(x_arr < 0, 0.0, out)
    if p.i_th == 0:
        out = np.where(x_arr >= 0, 1.0, 0.0)
    return _as_output(x, out)


def d2d_power_density(p: SystemParams, x):
    """Continuous part of the D2D power law on [0, p_max_d), in 1/W."""
    x = np.asarray(x, dtype=float)
    if math.isinf(p.i_th) or p.i_th == 0:
        return _as_output(x, np.zeros_like(x))
    a = 2.0 / p.alpha_m
    coef = 2 * math.pi * p.lambda_m / p.alpha_m * (p.beta / p.i_th) ** a
    with np.errstate(divide="ignore"):
        dens = coef * x ** (a - 1.0) * np.exp(-math.pi * p.lambda_m * (p.beta * x / p.i_th) ** a)
    out = np.where((x > 0) & (x < p.p_max_d), dens, 0.0)
    return _as_output(x, out)


@dataclass(frozen=True)
class PowerDistribution:
    """Mixed law: ``density`` on [0, p_max_d) plus ``point_mass`` at ``atom``."""

    density: Callable[[np.ndarray], np.ndarray]
    point_mass: float
    p_max_d: float
    varpi0: float
    atom: float

    def continuous_mass(self) -> float:
        if self.point_mass == 1.0:
            return 0.0
        return integrate_finite(self.density, 0.0, self.p_max_d, *MOMENT_TOL).value

    def expect(self, g: Callable[[np.ndarray], np.ndarray], tol=MOMENT_TOL) -> float:
        """E[g(P)] integrating the continuous part and adding the atom."""
        atom_term = self.point_mass * float(np.asarray(g(np.array([self.atom])))[0]) if self.point_mass else 0.0
        if self.point_mass == 1.0:
            return atom_term
        cont = integrate_finite(lambda x: g(x) * self.density(x), 0.0, self.p_max_d, *tol)
        return cont.value + atom_term


def d2d_power_distribution(p: SystemParams) -> PowerDistribution:
    if p.i_th == 0:
        # no admissible D2D transmission: all mass at 0 W
        return PowerDistribution(lambda x: np.zeros_like(np.asarray(x, float)), 1.0, p.p_max_d, math.inf, 0.0)
    w0 = varpi0(p)
    return PowerDistribution(lambda x: d2d_power_density(p, x), math.exp(-w0), p.p_max_d, w0, p.p_max_d)


def frac_moment_d2d(p: SystemParams, q: float, method: str = "quadrature") -> float:
    """E[P_D^q] over the D2D power law.

    ``method="quadrature"`` integrates the mixture numerically;
    ``"closed"`` uses the incomplete-Gamma form (for ``q = 2/alpha_M`` this is
    the elementary expression with ``1 - e^-w - w e^-w``).
    """
    if method == "closed":
        return frac_moment_d2d_closed(p, q)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    dist = d2d_power_distribution(p)
    if q == 0:
        return dist.expect(lambda x: np.ones_like(x))
    return dist.expect(lambda x: x ** q)


def frac_moment_d2d_closed(p: SystemParams, q: float) -> float:
    if p.i_th == 0:
        return 1.0 if q == 0 else 0.0
    pm = p.p_max_d
    w0 = varpi0(p)
    if w0 == 0:
        return pm ** q
    if math.isclose(q, 2.0 / p.alpha_m, rel_tol=0, abs_tol=1e-15):
        if w0 < 1e-4:
            # 1 - e^-w - w e^-w = w^2/2 - w^3/3 + w^4/8 - ...
            core = w0 / 2 - w0 ** 2 / 3 + w0 ** 3 / 8 - w0 ** 4 / 30
        else:
            core = (-math.expm1(-w0) - w0 * math.exp(-w0)) / w0
        return pm ** q * core + pm ** q * math.exp(-w0)
    kappa = math.pi * p.lambda_m * (p.beta / p.i_th) ** (2.0 / p.alpha_m)
    s = 1.0 + p.alpha_m * q / 2.0
    return kappa ** (-p.alpha_m * q / 2.0) * lower_incomplete_gamma(s, w0) + pm ** q * math.exp(-w0)


def log_moment_d2d(p: SystemParams) -> float:
    """E[ln P_D] (requires i_th > 0)."""
    if p.i_th == 0:
        return -math.inf
    return d2d_power_distribution(p).expect(np.log)


def mean_d2d_power(p: SystemParams) -> float:
    """E[P_D] by quadrature over the mixture (the dimensionally consistent mean)."""
    if p.i_th == 0:
        return 0.0
    return frac_moment_d2d(p, 1.0)


def mean_d2d_power_verbatim(p: SystemParams) -> float:
    """Uncorrected closed form with exponent 2 in both places; dimensionally inconsistent, kept for reports."""
    if p.i_th == 0:
        return 0.0
    pm = p.p_max_d
    if math.isinf(p.i_th):
        return pm ** 2
    w2 = math.pi * p.lambda_m * (p.beta * pm / p.i_th) ** 2
    core = (-math.expm1(-w2) - w2 * math.exp(-w2)) / w2 if w2 > 0 else 0.0
    return pm ** 2 * core + pm ** 2 * math.exp(-varpi0(p))


# --- averages used by the scale properties and EE ---------------------------

def avg_cue_power(p: SystemParams, verbatim: bool = False) -> float:
    """Mean CUE transmit power over the Rayleigh serving distance.

    The cap-free part integrates x^(eta alpha_M) against the distance law up
    to r_o, giving a lower incomplete Gamma at pi lambda_m r_o^2.
    ``verbatim=True`` evaluates it at pi lambda_m sqrt(r_o) instead (diagnostic).
    """
    if p.eta == 0:
        return min(p.p_max_c, p.p_o)
    u = cue_cap_argument(p)
    s = 1.0 + p.eta * p.alpha_m / 2.0
    scale = p.p_o * p.beta ** (-p.eta) * (math.pi * p.lambda_m) ** (-p.eta * p.alpha_m / 2.0)
    if verbatim:
        arg = math.pi * p.lambda_m * math.sqrt(cue_cutoff_distance(p))
        body = gamma(s) - upper_incomplete_gamma(s, arg)
    else:
        body = lower_incomplete_gamma(s, u)
    return scale * body + p.p_max_c * math.exp(-u)


def cue_power_moment(p: SystemParams, q: float) -> float:
    """E[P_C^q]; for q = 2/alpha_D this is the Omega_1 coefficient."""
    if p.eta == 0:
        return min(p.p_max_c, p.p_o) ** q
    u = cue_cap_argument(p)
    s = 1.0 + q * p.eta * p.alpha_m / 2.0
    scale = (p.p_o * p.beta ** (-p.eta)) ** q * (math.pi * p.lambda_m) ** (-q * p.eta * p.alpha_m / 2.0)
    return scale * lower_incomplete_gamma(s, u) + p.p_max_c ** q * math.exp(-u)


def d2d_interferer_ccdf(p: SystemParams, x):
    """Pr(P > x) for a D2D interferer whose nearest-MBS distance is floored at ref_d0."""
    x = np.asarray(x, dtype=float)
    d0 = p.ref_d0
    lam = math.pi * p.lambda_m
    near = np.where(x < d0 ** p.alpha_m * p.i_th / p.beta, -math.expm1(-lam * d0 * d0), 0.0)
    w1 = np.maximum(d0, (p.beta * x / p.i_th) ** (1.0 / p.alpha_m))
    return _as_output(x, near + np.exp(-lam * w1 * w1))


def avg_d2d_power_interferer(p: SystemParams) -> float:
    """Mean D2D interferer power under the ref_d0-floored distance model (CCDF integral)."""
    if p.i_th == 0:
        return 0.0
    if math.isinf(p.i_th):
        return p.p_max_d
    kink = p.ref_d0 ** p.alpha_m * p.i_th / p.beta
    res = integrate_finite(lambda x: d2d_interferer_ccdf(p, x), 0.0, p.p_max_d,
                           *MOMENT_TOL, breakpoints=[kink] if kink < p.p_max_d else ())
    return res.value


def _log_weighted_mass(u: float) -> float:
    """int_0^u ln(v) e^-v dv."""
    if u == 0:
        return 0.0
    if math.isinf(u):
        return -EULER_GAMMA
    if u <= 1.0:
        # term-wise integration of the exponential series
        total, fact, k = 0.0, 1.0, 0
        log_u = math.log(u)
        while True:
            kp = k + 1
            term = (-1) ** k / fact * u ** kp * (log_u / kp - 1.0 / kp ** 2)
            total += term
            if abs(term) < 1e-17 * max(abs(total), 1e-300) or k > 200:
                return total
            k += 1
            fact *= k
    return -EULER_GAMMA - math.exp(-u) * math.log(u) - exp_integral_e1(u)


def cue_log_moment(p: SystemParams) -> float:
    """E[ln P_C] over the Rayleigh serving distance."""
    if p.eta == 0:
        return math.log(min(p.p_max_c, p.p_o))
    u = cue_cap_argument(p)
    cap = math.exp(-u)
    k = p.eta * p.alpha_m / 2.0
    # ln(x^(eta alpha)) = k (ln v - ln(pi lambda)) with v = pi lambda x^2
    uncapped = -math.expm1(-u)
    below = k * (_log_weighted_mass(u) - math.log(math.pi * p.lambda_m) * uncapped)
    return (math.log(p.p_o) - p.eta * math.log(p.beta)) * uncapped + math.log(p.p_max_c) * cap + below
