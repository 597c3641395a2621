"""Exact ergodic spectral efficiency of the typical CUE and D2D link.

Both SEs are written as ``(1/ln 2) * int_0^inf F(t)/t dt`` with Laplace-type
factors ``F``. We integrate over ``s = ln t``, which turns the ``1/t`` weight
into a bounded integrand on the real line.

CUE interference kernel
-----------------------
The exclusion-zone interference for one CUE interferer at distance beyond
``d`` is ``h(c, d) = int_d^inf r / (1 + r^alpha / c) dr = d^2 phi(c d^-alpha)``
with ``phi(x) = x^(2/alpha) int_{x^(-1/alpha)}^inf y/(1+y^alpha) dy``, which is an
incomplete Beta function. Averaging over the interferer's own power law gives
``Phi(y) = E_P[phi(y P)]``, a function of one variable that is independent of
``t`` and ``d``. ``Phi`` is evaluated by adaptive quadrature at the nodes of a
piecewise Chebyshev interpolant in ``ln y`` once per parameter set; beyond the
table it follows its two-term asymptotic expansions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.special import beta as beta_fn
from scipy.special import betainc

from .params import SystemParams
from .power import cue_cap_argument, cue_power_moment, frac_moment_d2d, varpi0
from .quadrature import (INNER_TOL, OUTER_TOL, integrate_finite, integrate_semi_infinite,
                         integrate_to_minus_infinity)
from .special import gamma

# e^-u beyond this point is far below any tolerance we ask for
EXP_TAIL = 60.0
MIDDLE_TOL = (1e-9, 1e-13)
TABLE_TOL = (1e-12, 0.0)


@dataclass(frozen=True)
class SpectralEfficiency:
    value: float
    error_estimate: float


# --- CUE interference kernel --------------------------------------------------

def _phi(x, alpha):
    """phi(x) for x >= 0, elementwise."""
    x = np.asarray(x, dtype=float)
    a, b = 1.0 - 2.0 / alpha, 2.0 / alpha
    scale = beta_fn(a, b) / alpha
    small = x <= 1.0
    out = np.empty_like(x)
    xs = x[small]
    out[small] = xs ** b * scale * betainc(a, b, xs / (1.0 + xs))
    xl = x[~small]
    # complementary form keeps the deficit accurate when x/(1+x) rounds to 1
    out[~small] = xl ** b * scale * (1.0 - betainc(b, a, 1.0 / (1.0 + xl)))
    return out


@dataclass(frozen=True)
class _CuePowerLaw:
    """CUE transmit power as atom + ``A nu^k`` on ``nu in (0, nu_max)`` with weight e^-nu."""

    atom_weight: float
    atom_power: float
    scale: float
    exponent: float
    nu_max: float

    @classmethod
    def from_params(cls, p: SystemParams):
        if p.eta == 0:
            return cls(1.0, min(p.p_o, p.p_max_c), 0.0, 0.0, 0.0)
        u = cue_cap_argument(p)
        k = p.eta * p.alpha_m / 2.0
        scale = p.p_o * p.beta ** (-p.eta) * (math.pi * p.lambda_m) ** (-k)
        return cls(math.exp(-u), p.p_max_c, scale, k, min(u, EXP_TAIL))


class CueInterferenceKernel:
    """``Phi(y) = E_P[phi(y P)]`` with y in W^-1, valid for all y >= 0."""

    width = 2.0
    degree = 20

    def __init__(self, p: SystemParams):
        self.alpha = p.alpha_m
        self.law = _CuePowerLaw.from_params(p)
        self.p_ref = p.p_max_c
        b = 2.0 / self.alpha
        # small-y series: phi(x) = x/(alpha-2) - x^2/(2 alpha-2) + ...
        self.m1 = cue_power_moment(p, 1.0) / (self.alpha - 2.0)
        self.m2 = cue_power_moment(p, 2.0) / (2.0 * self.alpha - 2.0)
        # large-y: phi(x) = H0 x^b - 1/2 + O(x^-1)
        h0 = beta_fn(1.0 - b, b) / self.alpha
        self.c_inf = h0 * cue_power_moment(p, b)
        self.lo, self.hi = -30.0, 60.0
        self._build()

    def direct(self, y):
        """Phi at each y by quadrature (no interpolation)."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        law = self.law
        out = law.atom_weight * _phi(y * law.atom_power, self.alpha)
        if law.nu_max > 0:
            def f(nu):
                pw = law.scale * nu ** law.exponent
                return np.exp(-nu)[:, None] * _phi(np.outer(pw, y), self.alpha)
            res = integrate_finite(f, 0.0, law.nu_max, *TABLE_TOL)
            out = out + np.atleast_1d(res.value)
        return out

    def _build(self):
        n_pieces = int(math.ceil((self.hi - self.lo) / self.width))
        edges = self.lo + self.width * np.arange(n_pieces + 1)
        self.edges = edges
        k = np.arange(self.degree + 1)
        unit = -np.cos((2 * k + 1) * math.pi / (2 * (self.degree + 1)))
        # check points halfway between interpolation nodes
        check_unit = -np.cos((2 * k[:-1] + 2) * math.pi / (2 * (self.degree + 1)))
        mids = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * self.width
        xi = (mids[:, None] + half * unit[None, :]).ravel()
        xc = (mids[:, None] + half * check_unit[None, :]).ravel()
        vals = np.log(self.direct(np.exp(np.concatenate([xi, xc])) / self.p_ref))
        fit, chk = vals[:xi.size], vals[xi.size:]
        self.coef = np.array([cheb.chebfit(unit, row, self.degree)
                              for row in fit.reshape(n_pieces, -1)])
        approx = self._eval_table(xc)
        # interpolation error in ln Phi, i.e. relative error of Phi
        self.interpolation_error = float(np.max(np.abs(approx - chk)))

    def _eval_table(self, xi):
        idx = np.clip(((xi - self.lo) // self.width).astype(int), 0, len(self.coef) - 1)
        local = (xi - (self.edges[idx] + 0.5 * self.width)) / (0.5 * self.width)
        out = np.empty_like(xi)
        for j in np.unique(idx):
            sel = idx == j
            out[sel] = cheb.chebval(local[sel], self.coef[j])
        return out

    def log_value(self, log_y):
        """ln Phi(y) given ln y (array)."""
        log_y = np.asarray(log_y, dtype=float)
        xi = log_y + math.log(self.p_ref)
        out = np.empty_like(xi)
        low = xi < self.lo
        high = xi > self.hi
        mid = ~(low | high)
        if np.any(low):
            y = np.exp(log_y[low])
            out[low] = np.log(y * (self.m1 - self.m2 * y))
        if np.any(high):
            ly = log_y[high]
            lead = math.log(self.c_inf) + (2.0 / self.alpha) * ly
            out[high] = lead + np.log1p(-0.5 * np.exp(-lead))
        if np.any(mid):
            out[mid] = self._eval_table(xi[mid])
        return out


@lru_cache(maxsize=64)
def _kernel_cached(key):
    return CueInterferenceKernel(key)


def cue_interference_kernel(p: SystemParams) -> CueInterferenceKernel:
    # the kernel depends only on the CUE power law and alpha_m
    key = p.replace(lambda_d=0.0, n_antennas=1, s_users=0, i_th=0.0, sigma2=1.0,
                    d_o=1.0, bandwidth=1.0)
    return _kernel_cached(key)


# --- Laplace factors ---------------------------------------------------------

def _xi1_batch(p: SystemParams, t: np.ndarray, tol=MIDDLE_TOL):
    """Xi_1 at every t (> 0); returns (values, abs_errors)."""
    lam = math.pi * p.lambda_m
    alpha = p.alpha_m
    log_gain = math.log(p.gamma_shape) + math.log(p.beta)
    log_t = np.log(t)
    kernel = cue_interference_kernel(p) if p.s_users > 0 else None
    density = 2.0 * math.pi * p.s_users * p.lambda_m
    u_cap = cue_cap_argument(p) if p.eta > 0 else (0.0 if p.p_o >= p.p_max_c else math.inf)
    log_pc_scale = math.log(p.p_o) - p.eta * math.log(p.beta)

    def integrand(u):
        log_d2 = np.log(u / lam)
        log_pc = np.where(u < u_cap, log_pc_scale + 0.5 * p.eta * alpha * log_d2,
                          math.log(p.p_max_c))
        if p.eta == 0:
            log_pc = np.full_like(u, math.log(min(p.p_o, p.p_max_c)))
        base = log_gain + log_pc - 0.5 * alpha * log_d2
        log_sig = base[:, None] + log_t[None, :]
        signal = -np.expm1(-np.exp(np.minimum(log_sig, 700.0)))
        expo = -u[:, None] * np.ones_like(log_t)[None, :]
        if kernel is not None:
            log_y = math.log(p.beta) + log_t[None, :] - 0.5 * alpha * log_d2[:, None]
            j = np.exp(log_d2[:, None] + kernel.log_value(log_y))
            expo = expo - density * j
        return signal * np.exp(expo)

    breaks = [u_cap] if 0 < u_cap < EXP_TAIL else []
    res = integrate_finite(integrand, 0.0, EXP_TAIL, *tol, breakpoints=breaks)
    return np.atleast_1d(res.value), np.atleast_1d(res.abs_error_estimate)


def xi1(p: SystemParams, t):
    """Xi_1(t) = E[(1 - e^{-t Z_1}) e^{-t I_M}] with the serving gain set to N - S + 1."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t_arr)
    pos = t_arr > 0
    if np.any(pos):
        out[pos] = _xi1_batch(p, t_arr[pos])[0]
    return float(out[0]) if np.ndim(t) == 0 else out


def _laplace_pp(lam, beta, alpha, moment, t):
    """exp(-pi lam beta^(2/a) E[P^(2/a)] Gamma(1+2/a) Gamma(1-2/a) t^(2/a))."""
    b = 2.0 / alpha
    c = math.pi * lam * beta ** b * moment * gamma(1.0 + b) * gamma(1.0 - b)
    t = np.asarray(t, dtype=float)
    out = np.exp(-c * t ** b)
    return float(out) if out.ndim == 0 else out


def xi2(p: SystemParams, t):
    """Laplace transform of the D2D interference at the MBS."""
    if p.lambda_d == 0 or p.i_th == 0:
        return _laplace_pp(0.0, p.beta, p.alpha_m, 0.0, t)
    return _laplace_pp(p.lambda_d, p.beta, p.alpha_m, frac_moment_d2d(p, 2.0 / p.alpha_m), t)


def _one_minus_xi3(p: SystemParams, t: np.ndarray, tol=INNER_TOL):
    """1 - Xi_3(t) = E[a/(1+a)] with a = t P_D beta d_o^-alpha_D, free of cancellation."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if p.i_th == 0:
        return np.zeros_like(t), np.zeros_like(t)
    link = p.beta * p.d_o ** (-p.alpha_d)
    a_max = t * p.p_max_d * link
    w0 = varpi0(p)
    out = math.exp(-w0) * a_max / (1.0 + a_max)
    err = np.zeros_like(t)
    if w0 > 0:
        lam = math.pi * p.lambda_m
        coef = p.i_th * p.d_o ** (-p.alpha_d)

        def f(x):
            a = coef * (x / lam) ** (p.alpha_m / 2.0)
            a = np.outer(a, t)
            return np.exp(-x)[:, None] * (a / (1.0 + a))

        res = integrate_finite(f, 0.0, min(w0, EXP_TAIL), *tol)
        out = out + np.atleast_1d(res.value)
        err = np.atleast_1d(res.abs_error_estimate)
    return out, err


def xi3(p: SystemParams, t):
    """Laplace transform of the D2D serving-link signal, E[e^{-t Z_2}]."""
    val = 1.0 - _one_minus_xi3(p, t)[0]
    return float(val[0]) if np.ndim(t) == 0 else val


def omega1(p: SystemParams) -> float:
    return cue_power_moment(p, 2.0 / p.alpha_d)


def omega2(p: SystemParams) -> float:
    if p.i_th == 0:
        return 0.0
    return frac_moment_d2d(p, 2.0 / p.alpha_d)


def xi4(p: SystemParams, t):
    """Laplace transform of the CUE plus D2D interference at the D2D receiver."""
    weighted = p.s_users * p.lambda_m * omega1(p) + p.lambda_d * omega2(p)
    return _laplace_pp(1.0, p.beta, p.alpha_d, weighted, t)


# --- SE integrals ---------------------------------------------------------

def _integrate_log_t(batch, pivot, tol=OUTER_TOL):
    """(1/ln 2) int F(e^s) ds over R, split at s = pivot."""
    right = integrate_semi_infinite(batch, pivot, *tol)
    left = integrate_to_minus_infinity(batch, pivot, *tol)
    value = (right.value + left.value) / math.log(2.0)
    err = (right.abs_error_estimate + left.abs_error_estimate) / math.log(2.0)
    return value, err


def _active(p: SystemParams, s: np.ndarray):
    t = np.exp(np.clip(s, -700.0, 700.0))
    live = (s > -700.0) & (p.sigma2 * t < 745.0)
    return t, live


def cue_se(p: SystemParams) -> SpectralEfficiency:
    """Ergodic SE of the typical CUE in bps/Hz."""
    if p.s_users == 0:
        raise ValueError("cue_se needs at least one CUE (s_users >= 1)")
    inner_err = [0.0]

    def batch(s):
        t, live = _active(p, s)
        out = np.zeros_like(s)
        if np.any(live):
            tl = t[live]
            v, e = _xi1_batch(p, tl)
            weight = xi2(p, tl) * np.exp(-p.sigma2 * tl)
            out[live] = v * weight
            inner_err[0] = max(inner_err[0], float(np.max(e / np.maximum(v, 1e-300))))
        return out

    value, err = _integrate_log_t(batch, -math.log(p.sigma2))
    # inner relative error passes through the outer integral linearly
    return SpectralEfficiency(value, err + min(inner_err[0], MIDDLE_TOL[0]) * value)


def d2d_se(p: SystemParams) -> SpectralEfficiency:
    """Ergodic SE of the typical D2D link (d_o apart) in bps/Hz."""
    if p.i_th == 0:
        return SpectralEfficiency(0.0, 0.0)
    inner_err = [0.0]

    def batch(s):
        t, live = _active(p, s)
        out = np.zeros_like(s)
        if np.any(live):
            tl = t[live]
            v, e = _one_minus_xi3(p, tl)
            out[live] = v * xi4(p, tl) * np.exp(-p.sigma2 * tl)
            inner_err[0] = max(inner_err[0], float(np.max(e / np.maximum(v, 1e-300))))
        return out

    value, err = _integrate_log_t(batch, -math.log(p.sigma2))
    return SpectralEfficiency(value, err + min(inner_err[0], INNER_TOL[0]) * value)


def area_se_cellular(p: SystemParams, se: SpectralEfficiency | None = None) -> float:
    """S lambda_m R_C in bps/Hz/m^2."""
    if p.s_users == 0:
        return 0.0
    se = se or cue_se(p)
    return se.value * p.s_users * p.lambda_m


def area_se_d2d(p: SystemParams, se: SpectralEfficiency | None = None) -> float:
    """lambda_d R_D in bps/Hz/m^2."""
    if p.lambda_d == 0:
        return 0.0
    se = se or d2d_se(p)
    return se.value * p.lambda_d
