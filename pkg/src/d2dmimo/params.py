"""System parameters, unit conversions and the flat ``key = value`` config format.

Everything inside the package is in watts and meters. dB/dBm only show up
at the config and report boundary.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Mapping

SPEED_OF_LIGHT = 299_792_458.0
CARRIER_FREQUENCY = 1e9


class ParameterError(ValueError):
    """Invalid parameter set or malformed config file."""


def dbm_to_watts(x: float) -> float:
    return 10.0 ** ((x - 30.0) / 10.0)


def watts_to_dbm(p: float) -> float:
    if p <= 0:
        return -math.inf
    return 10.0 * math.log10(p) + 30.0


def db_to_ratio(x: float) -> float:
    return 10.0 ** (x / 10.0)


def ratio_to_db(r: float) -> float:
    if r <= 0:
        return -math.inf
    return 10.0 * math.log10(r)


def noise_power(bandwidth: float) -> float:
    """Thermal noise of -170 dBm/Hz integrated over ``bandwidth``, in watts."""
    if not bandwidth > 0:
        raise ParameterError(f"bandwidth must be positive, got {bandwidth}")
    return dbm_to_watts(-170.0 + 10.0 * math.log10(bandwidth))


def free_space_beta(carrier_frequency: float = CARRIER_FREQUENCY) -> float:
    """Free-space path gain at 1 m, ``(c / (4 pi f_c))**2``."""
    return (SPEED_OF_LIGHT / (4.0 * math.pi * carrier_frequency)) ** 2


@dataclass(frozen=True)
class SystemParams:
    """Physical and network constants of the uplink D2D-underlaid network.

    Densities are per m^2, powers in W, distances in m. ``i_th`` may be
    ``math.inf`` (no D2D power control) or 0 (D2D transmissions forbidden).
    """

    lambda_m: float
    lambda_d: float
    n_antennas: int
    s_users: int
    alpha_m: float
    alpha_d: float
    beta: float
    p_o: float
    eta: float
    p_max_c: float
    p_max_d: float
    i_th: float
    sigma2: float
    d_o: float
    ref_d0: float
    ref_d1: float
    ref_d2: float
    p_f: float
    zeta: float
    bandwidth: float
    region_radius: float

    def __post_init__(self):
        validate(self)

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    @property
    def gamma_shape(self) -> int:
        """Shape ``N - S + 1`` of the ZF serving-link gain."""
        return self.n_antennas - self.s_users + 1

    @property
    def i_th_over_sigma2_db(self) -> float:
        if math.isinf(self.i_th):
            return math.inf
        return ratio_to_db(self.i_th / self.sigma2)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


FIELD_NAMES = tuple(f.name for f in fields(SystemParams))
INT_FIELDS = ("n_antennas", "s_users")
CONVENIENCE_KEYS = ("i_th_over_sigma2_db", "p_max_d_dbm", "p_max_c_dbm", "lambda_d_over_lambda_m")


def validate(p: SystemParams) -> None:
    for name in FIELD_NAMES:
        value = getattr(p, name)
        if name in INT_FIELDS:
            if int(value) != value:
                raise ParameterError(f"{name} must be an integer, got {value!r}")
            continue
        if math.isnan(value):
            raise ParameterError(f"{name} is NaN")
        if name != "i_th" and math.isinf(value):
            raise ParameterError(f"{name} must be finite")
    # S = 0 is admitted as a degenerate "no cellular users" network.
    if not p.n_antennas >= p.s_users >= 0 or p.n_antennas < 1:
        raise ParameterError(
            f"need n_antennas >= s_users >= 0, got N={p.n_antennas}, S={p.s_users}")
    if not (p.alpha_m > 2 and p.alpha_d > 2):
        raise ParameterError("path-loss exponents must exceed 2")
    if not 0 <= p.eta <= 1:
        raise ParameterError(f"eta must lie in [0, 1], got {p.eta}")
    if not 0 < p.zeta <= 1:
        raise ParameterError(f"zeta must lie in (0, 1], got {p.zeta}")
    if p.i_th < 0:
        raise ParameterError("i_th must be non-negative")
    if p.lambda_d < 0:
        raise ParameterError("lambda_d must be non-negative")
    for name in ("lambda_m", "beta", "p_o", "p_max_c", "p_max_d", "sigma2", "d_o",
                 "ref_d0", "ref_d1", "ref_d2", "p_f", "bandwidth", "region_radius"):
        if not getattr(p, name) > 0:
            raise ParameterError(f"{name} must be strictly positive")


def default_params() -> SystemParams:
    """Reference network: 500 m MBS spacing, 1 GHz, 5 MHz, d_o=35 m, S=20, N=400."""
    bandwidth = 5e6
    sigma2 = noise_power(bandwidth)
    lambda_m = 1.0 / (500.0 ** 2 * math.pi)
    return SystemParams(
        lambda_m=lambda_m,
        lambda_d=30.0 * lambda_m,
        n_antennas=400,
        s_users=20,
        alpha_m=3.5,
        alpha_d=4.0,
        beta=free_space_beta(),
        p_o=dbm_to_watts(-80.0),
        eta=0.8,
        p_max_c=dbm_to_watts(23.0),
        p_max_d=dbm_to_watts(15.0),
        i_th=db_to_ratio(10.0) * sigma2,
        sigma2=sigma2,
        d_o=35.0,
        ref_d0=1.0,
        ref_d1=1.0,
        ref_d2=1.0,
        p_f=0.1,
        zeta=0.5,
        bandwidth=bandwidth,
        region_radius=1e4,
    )


def _parse_number(key: str, text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    if t in ("-inf", "-infinity"):
        return -math.inf
    try:
        return float(t)
    except ValueError:
        raise ParameterError(f"{key}: cannot parse {text!r} as a number") from None


def parse_assignments(lines: Iterable[str], source: str = "<config>") -> dict[str, float]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, float] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in FIELD_NAMES and key not in CONVENIENCE_KEYS:
            raise ParameterError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ParameterError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = _parse_number(key, value)
    return out


def _consistent(a: float, b: float) -> bool:
    if math.isinf(a) or math.isinf(b):
        return a == b
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=0.0)


def apply_overrides(base: SystemParams, values: Mapping[str, float]) -> SystemParams:
    """Return ``base`` updated with raw and convenience keys.

    ``bandwidth`` drives ``sigma2`` unless ``sigma2`` itself is given, and
    ``i_th_over_sigma2_db`` is resolved against the final ``sigma2``. A raw key
    and its convenience twin may both appear only if they agree.
    """
    raw = {k: v for k, v in values.items() if k in FIELD_NAMES}
    for k in INT_FIELDS:
        if k in raw:
            if raw[k] != int(raw[k]):
                raise ParameterError(f"{k} must be an integer")
            raw[k] = int(raw[k])
    if "bandwidth" in raw and "sigma2" not in raw:
        raw["sigma2"] = noise_power(raw["bandwidth"])
    sigma2 = raw.get("sigma2", base.sigma2)

    derived: dict[str, float] = {}
    if "p_max_c_dbm" in values:
        derived["p_max_c"] = dbm_to_watts(values["p_max_c_dbm"])
    if "p_max_d_dbm" in values:
        derived["p_max_d"] = dbm_to_watts(values["p_max_d_dbm"])
    if "i_th_over_sigma2_db" in values:
        db = values["i_th_over_sigma2_db"]
        derived["i_th"] = math.inf if db == math.inf else db_to_ratio(db) * sigma2
    elif "sigma2" in raw and "i_th" not in raw and not math.isinf(base.i_th):
        # keep the configured threshold-to-noise ratio when the noise floor moves
        derived["i_th"] = base.i_th / base.sigma2 * sigma2
    if "lambda_d_over_lambda_m" in values:
        derived["lambda_d"] = values["lambda_d_over_lambda_m"] * raw.get("lambda_m", base.lambda_m)

    for key, value in derived.items():
        if key in raw and not _consistent(raw[key], value):
            raise ParameterError(
                f"{key}={raw[key]!r} conflicts with its convenience key (gives {value!r})")
        raw[key] = value
    return base.replace(**raw)


def load_config(path: str | Path, base: SystemParams | None = None) -> SystemParams:
    path = Path(path)
    values = parse_assignments(path.read_text().splitlines(), source=str(path))
    return apply_overrides(base or default_params(), values)


def parse_set_options(items: Iterable[str]) -> dict[str, float]:
    """Parse repeated ``--set key=value`` command-line options."""
    return parse_assignments(items, source="--set")


def format_number(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def dump_config(p: SystemParams) -> str:
    lines = [f"{name} = {format_number(getattr(p, name))}" for name in FIELD_NAMES]
    lines.append(f"# i_th_over_sigma2_db = {format_number(p.i_th_over_sigma2_db)}")
    lines.append(f"# p_max_c_dbm = {format_number(watts_to_dbm(p.p_max_c))}")
    lines.append(f"# p_max_d_dbm = {format_number(watts_to_dbm(p.p_max_d))}")
    lines.append(f"# lambda_d_over_lambda_m = {format_number(p.lambda_d / p.lambda_m)}")
    return "\n".join(lines) + "\n"
