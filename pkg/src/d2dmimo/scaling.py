"""Jensen lower bounds on the SE and the D2D-density thresholds built on them.

For a link with signal ``S`` and interference-plus-noise ``I``,
``E[log2(1 + S/I)] >= log2(1 + exp(E[ln S]) / (E[I] + sigma2))``. Inverting the
bound for a target SE gives a sufficient upper limit on the D2D density.

Notation follows the X1..X6 factors: X1/X4 are signal log-moments, X2 and
X5 the CUE interference terms, X3 and X6 the per-unit-density D2D terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import SystemParams
from .power import (avg_cue_power, avg_d2d_power_interferer, cue_cap_argument, cue_log_moment,
                    cue_cutoff_log_distance, log_moment_d2d)
from .quadrature import INNER_TOL, integrate_semi_infinite
from .special import EULER_GAMMA, digamma, exp_integral_e1, gamma


class ScaleDomainError(ValueError):
    pass


@dataclass(frozen=True)
class DensityBound:
    """Admissible D2D density. ``status`` is "ok", "unbounded" or "infeasible"."""

    value: float
    status: str

    def label(self) -> str:
        if self.status == "ok":
            return repr(self.value)
        return self.status


def _reference_integral(d_ref: float, alpha: float) -> float:
    """int_0^inf max(D, r)^-alpha r dr."""
    return d_ref ** (2.0 - alpha) / 2.0 + d_ref ** (2.0 - alpha) / (alpha - 2.0)


def _target_gap(r_th: float) -> float:
    return math.expm1(r_th * math.log(2.0))


# --- cellular ------------------------------------------------------------

def x1(p: SystemParams, verbatim: bool = False) -> float:
    """exp(E[ln(P_C beta |X|^-alpha_M)]), the serving-link log-moment without the gain.

    ``verbatim=True`` adds the eta-term instead of subtracting it (diagnostic).
    """
    log_dist_term = -(p.alpha_m / 2.0) * digamma(1.0) + (p.alpha_m / 2.0) * math.log(math.pi * p.lambda_m)
    if not verbatim:
        return math.exp(cue_log_moment(p) + math.log(p.beta) + log_dist_term)
    if p.eta == 0:
        raise ScaleDomainError("the uncorrected form needs eta > 0")
    u = cue_cap_argument(p)
    lam = math.pi * p.lambda_m
    bracket = EULER_GAMMA + exp_integral_e1(u) + 2 * math.exp(-u) * cue_cutoff_log_distance(p) + math.log(lam)
    log_x1 = (math.log(p.p_max_c / (p.p_o * p.beta ** -p.eta)) * math.exp(-u)
              + math.log(p.p_o * p.beta ** (1.0 - p.eta)) + log_dist_term
              + p.eta * p.alpha_m / 2.0 * bracket)
    return math.exp(log_x1)


def _check_alpha_m(p: SystemParams):
    if not 2.0 < p.alpha_m < 4.0:
        raise ScaleDomainError(f"mean CUE interference needs 2 < alpha_m < 4, got {p.alpha_m}")


def mean_cue_interference(p: SystemParams) -> float:
    """E[I_M] at the MBS: Campbell's theorem averaged over the serving distance (quadrature)."""
    _check_alpha_m(p)
    if p.s_users == 0:
        return 0.0
    lam = math.pi * p.lambda_m
    coef = 2.0 * math.pi * p.s_users * p.lambda_m * p.beta * avg_cue_power(p) / (p.alpha_m - 2.0)
    # v = pi lambda x^2 turns the distance average into int v^(1-alpha/2) e^-v dv;
    # v = w^m with m = 2/(4-alpha) then removes the endpoint singularity
    m = 2.0 / (4.0 - p.alpha_m)
    res = integrate_semi_infinite(lambda w: m * np.exp(-w ** m), 0.0, *INNER_TOL)
    return coef * lam ** (p.alpha_m / 2.0 - 1.0) * res.value


def mean_cue_interference_closed(p: SystemParams) -> float:
    _check_alpha_m(p)
    lam = math.pi * p.lambda_m
    coef = 2.0 * math.pi * p.s_users * p.lambda_m * p.beta * avg_cue_power(p) / (p.alpha_m - 2.0)
    return coef * lam ** (p.alpha_m / 2.0 - 1.0) * gamma(2.0 - p.alpha_m / 2.0)


def x2_x3(p: SystemParams) -> tuple[float, float]:
    """(E[I_M] + sigma2, E[I_D] / lambda_d) with D2D interferers no closer than ref_d0."""
    x2 = mean_cue_interference(p) + p.sigma2
    x3 = 2.0 * math.pi * p.beta * _reference_integral(p.ref_d0, p.alpha_m) * avg_d2d_power_interferer(p)
    return x2, x3


def _cue_gain(p: SystemParams, exact: bool) -> float:
    n = p.gamma_shape
    return math.exp(digamma(n)) if exact else float(n)


def lower_bound_cue_se(p: SystemParams, exact: bool = False) -> float:
    """log2(1 + G X1 / (X2 + lambda_d X3)); G = N-S+1, or e^psi(N-S+1) when ``exact``."""
    x2, x3 = x2_x3(p)
    snr = _cue_gain(p, exact) * x1(p) / (x2 + p.lambda_d * x3)
    return math.log1p(snr) / math.log(2.0)


def _density_bound(numerator: float, per_density: float) -> DensityBound:
    if math.isinf(numerator):
        return DensityBound(math.inf, "unbounded")
    if numerator < 0:
        return DensityBound(0.0, "infeasible")
    if per_density == 0:
        return DensityBound(math.inf, "unbounded")
    return DensityBound(numerator / per_density, "ok")


def max_d2d_density_cellular(p: SystemParams, r_th: float, exact: bool = False) -> DensityBound:
    """Largest lambda_d for which the cellular lower bound still meets ``r_th``."""
    if not r_th >= 0:
        raise ValueError(f"target SE must be non-negative, got {r_th}")
    gap = _target_gap(r_th)
    x2, x3 = x2_x3(p)
    top = math.inf if gap == 0 else _cue_gain(p, exact) * x1(p) / gap - x2
    return _density_bound(top, x3)


# --- D2D ---------------------------------------------------------------

def x4_x5_x6(p: SystemParams, verbatim: bool = False) -> tuple[float, float, float]:
    """(X4, X5, X6) for the D2D receiver; ``verbatim`` uses +Euler in X4 (diagnostic)."""
    if p.i_th == 0:
        x4 = 0.0
    else:
        fade = EULER_GAMMA if verbatim else -EULER_GAMMA
        x4 = math.exp(log_moment_d2d(p) + math.log(p.beta) - p.alpha_d * math.log(p.d_o) + fade)
    x5 = 2.0 * math.pi * avg_cue_power(p) * p.beta * _reference_integral(p.ref_d1, p.alpha_d)
    x6 = 2.0 * math.pi * p.beta * _reference_integral(p.ref_d2, p.alpha_d) * avg_d2d_power_interferer(p)
    return x4, x5, x6


def lower_bound_d2d_se(p: SystemParams) -> float:
    x4, x5, x6 = x4_x5_x6(p)
    snr = x4 / (p.s_users * p.lambda_m * x5 + p.lambda_d * x6 + p.sigma2)
    return math.log1p(snr) / math.log(2.0)


def max_d2d_density_d2d(p: SystemParams, r_th: float) -> DensityBound:
    if not r_th >= 0:
        raise ValueError(f"target SE must be non-negative, got {r_th}")
    gap = _target_gap(r_th)
    x4, x5, x6 = x4_x5_x6(p)
    top = math.inf if gap == 0 else x4 / gap - p.s_users * p.lambda_m * x5 - p.sigma2
    return _density_bound(top, x6)

