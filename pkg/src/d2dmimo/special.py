"""Gamma-family special functions on the positive real axis.

Scalar, pure-Python implementations: Lanczos for Gamma, the power series /
Legendre continued fraction pair for the incomplete Gamma functions, and the
asymptotic expansion (after upward recurrence) for digamma.
"""

import math

EULER_GAMMA = 0.57721566490153286060651209008240243

# Lanczos approximation, g = 7, n = 9 (Godfrey's coefficients).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

_EPS = 1e-16
_MAX_ITER = 10_000


class SpecialFunctionDomainError(ValueError):
    pass


def _check_positive(name, s):
    if not (isinstance(s, (int, float)) and math.isfinite(s)):
        raise SpecialFunctionDomainError(f"{name}: argument must be finite, got {s!r}")
    if s <= 0:
        raise SpecialFunctionDomainError(f"{name}: argument must be positive, got {s!r}")


def _lanczos_sum(z):
    # z is the shifted argument (s - 1)
    x = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        x += _LANCZOS_COEF[i] / (z + i)
    return x


def log_gamma(s: float) -> float:
    """ln Gamma(s) for s > 0."""
    _check_positive("log_gamma", s)
    if s < 0.5:
        # reflection keeps the Lanczos sum in its accurate range
        return math.log(math.pi / math.sin(math.pi * s)) - log_gamma(1.0 - s)
    z = s - 1.0
    t = z + _LANCZOS_G + 0.5
    return 0.5 * math.log(2 * math.pi) + (z + 0.5) * math.log(t) - t + math.log(_lanczos_sum(z))


def gamma(s: float) -> float:
    _check_positive("gamma", s)
    if s == int(s) and s <= 171:
        return float(math.factorial(int(s) - 1))
    if s < 0.5:
        return math.pi / (math.sin(math.pi * s) * gamma(1.0 - s))
    if s > 171.7:
        return math.inf
    z = s - 1.0
    t = z + _LANCZOS_G + 0.5
    # split the power to avoid premature overflow near the top of the range
    half = t ** ((z + 0.5) / 2)
    return math.sqrt(2 * math.pi) * half * (half * math.exp(-t)) * _lanczos_sum(z)


def _lower_series(s, x):
    """Regularized lower incomplete gamma P(s, x) by its power series."""
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma series did not converge (s={s}, x={x})")
    return total * math.exp(-x + s * math.log(x) - log_gamma(s))


def _upper_cf(s, x):
    """Unregularized Gamma(s, x) by the Legendre continued fraction (modified Lentz)."""
    if -x + s * math.log(x) < -800.0:
        return 0.0
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b if b != 0 else 1.0 / tiny
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= 2 * _EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma continued fraction did not converge (s={s}, x={x})")
    return math.exp(-x + s * math.log(x)) * h


def exp_integral_e1(x: float) -> float:
    """E1(x) = Gamma(0, x) for x > 0."""
    _check_positive("exp_integral_e1", x)
    if x < 1.0:
        total = 0.0
        term = 1.0
        for k in range(1, _MAX_ITER):
            term *= -x / k
            contrib = term / k
            total += contrib
            if abs(contrib) < _EPS * abs(total):
                break
        return -EULER_GAMMA - math.log(x) - total
    return _upper_cf(0.0, x)


def upper_incomplete_gamma(s: float, x: float) -> float:
    """Gamma(s, x) = integral of t**(s-1) e**-t over [x, inf).

    ``s = 0`` is accepted for ``x > 0`` (the exponential integral E1).
    """
    if not (math.isfinite(s) and (math.isfinite(x) or x == math.inf)):
        raise SpecialFunctionDomainError(f"upper_incomplete_gamma: bad arguments ({s!r}, {x!r})")
    if x < 0 or s < 0:
        raise SpecialFunctionDomainError(f"upper_incomplete_gamma: need s >= 0, x >= 0, got ({s}, {x})")
    if x == math.inf:
        return 0.0
    if s == 0:
        if x == 0:
            raise SpecialFunctionDomainError("upper_incomplete_gamma(0, 0) diverges")
        return exp_integral_e1(x)
    if x == 0:
        return gamma(s)
    if x < s + 1.0:
        return gamma(s) * (1.0 - _lower_series(s, x))
    return _upper_cf(s, x)


def lower_incomplete_gamma(s: float, x: float) -> float:
    """gamma(s, x) = integral of t**(s-1) e**-t over [0, x]."""
    _check_positive("lower_incomplete_gamma", s)
    if x < 0 or math.isnan(x):
        raise SpecialFunctionDomainError(f"lower_incomplete_gamma: need x >= 0, got {x!r}")
    if x == 0:
        return 0.0
    if x == math.inf:
        return gamma(s)
    if x < s + 1.0:
        return gamma(s) * _lower_series(s, x)
    return gamma(s) - _upper_cf(s, x)


def regularized_lower_gamma(s: float, x: float) -> float:
    _check_positive("regularized_lower_gamma", s)
    if x <= 0:
        return 0.0
    if x == math.inf:
        return 1.0
    if x < s + 1.0:
        return _lower_series(s, x)
    return 1.0 - _upper_cf(s, x) * math.exp(-log_gamma(s))


# Bernoulli numbers B_2k / (2k) for the digamma asymptotic series.
_DIGAMMA_ASYMPTOTIC = (
    1.0 / 12,
    -1.0 / 120,
    1.0 / 252,
    -1.0 / 240,
    1.0 / 132,
    -691.0 / 32760,
    1.0 / 12,
)


def digamma(s: float) -> float:
    _check_positive("digamma", s)
    shift = 0.0
    while s < 10.0:
        shift -= 1.0 / s
        s += 1.0
    inv2 = 1.0 / (s * s)
    tail = 0.0
    power = inv2
    for c in _DIGAMMA_ASYMPTOTIC:
        tail += c * power
        power *= inv2
    return shift + math.log(s) - 0.5 / s - tail
