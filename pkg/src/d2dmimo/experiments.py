"""Figure presets, parameter sweeps, CSV output and the analytic-vs-MC report."""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import numpy as np

from . import __version__
from .energy import cue_ee, d2d_ee
from .montecarlo import (DEFAULT_TRIALS, MonteCarloEstimate, laplace_xi2, laplace_xi4,
                         simulate_cue_se, simulate_d2d_se, simulate_mean_powers)
from .params import (CONVENIENCE_KEYS, FIELD_NAMES, ParameterError, SystemParams, apply_overrides,
                     default_params, dump_config)
from .power import avg_cue_power, mean_d2d_power, mean_d2d_power_verbatim
from .scaling import (ScaleDomainError, lower_bound_cue_se, lower_bound_d2d_se, max_d2d_density_cellular,
                      max_d2d_density_d2d, x1, x2_x3, x4_x5_x6)
from .spectral import SpectralEfficiency, area_se_cellular, area_se_d2d, cue_se, d2d_se, xi2, xi4

METRICS = ("cue_se", "d2d_se", "area_se_c", "area_se_d", "cue_ee", "d2d_ee", "bounds")
UNITS = {
    "cue_se": "bps/Hz", "cue_se_err": "bps/Hz", "d2d_se": "bps/Hz", "d2d_se_err": "bps/Hz",
    "area_se_c": "bps/Hz/m^2", "area_se_d": "bps/Hz/m^2",
    "cue_ee": "bit/J/Hz", "d2d_ee": "bit/J/Hz", "cue_ee_bpj": "bit/J", "d2d_ee_bpj": "bit/J",
    "cue_se_lb": "bps/Hz", "d2d_se_lb": "bps/Hz",
    "cue_se_mc": "bps/Hz", "cue_se_mc_se": "bps/Hz", "cue_se_mc_ci_low": "bps/Hz", "cue_se_mc_ci_high": "bps/Hz",
    "d2d_se_mc": "bps/Hz", "d2d_se_mc_se": "bps/Hz", "d2d_se_mc_ci_low": "bps/Hz", "d2d_se_mc_ci_high": "bps/Hz",
}
SWEEP_UNITS = {
    "lambda_d_over_lambda_m": "1", "lambda_d": "m^-2", "lambda_m": "m^-2", "n_antennas": "1",
    "s_users": "1", "eta": "1", "d_o": "m", "i_th_over_sigma2_db": "dB", "p_max_d_dbm": "dBm",
    "p_max_c_dbm": "dBm", "p_max_d": "W", "p_max_c": "W", "i_th": "W", "sigma2": "W",
}


class SweepError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    """A one-dimensional sweep, optionally repeated for each value of a family field."""

    base: SystemParams
    field: str
    values: tuple
    metrics: tuple = METRICS
    mc: bool = False
    mc_trials: int = DEFAULT_TRIALS
    seed: int = 0
    family_field: str | None = None
    family_values: tuple = ()

    def __post_init__(self):
        for name in (self.field, self.family_field):
            if name is not None and name not in FIELD_NAMES and name not in CONVENIENCE_KEYS:
                raise SweepError(f"unknown sweep field {name!r}")
        if not self.values:
            raise SweepError("sweep needs at least one value")
        if not all(math.isfinite(v) or (v == math.inf and self.field == "i_th_over_sigma2_db")
                   for v in self.values):
            raise SweepError("sweep values must be finite")
        bad = set(self.metrics) - set(METRICS)
        if bad:
            raise SweepError(f"unknown metrics {sorted(bad)}; choose from {METRICS}")
        if self.family_field is not None and not self.family_values:
            raise SweepError("family field given without values")

    def points(self):
        families = self.family_values if self.family_field else (None,)
        for fam in families:
            for x in self.values:
                yield fam, x


@dataclass
class SweepResult:
    columns: list
    rows: list
    metadata: list = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return any(isinstance(v, str) and v.startswith("error") for row in self.rows for v in row)

    def column(self, name):
        k = self.columns.index(name)
        return [row[k] for row in self.rows]


# --- figure presets -----------------------------------------------------------

LAMBDA_RATIOS = (1, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100)


@dataclass(frozen=True)
class FigurePreset:
    name: str
    title: str
    overrides: dict
    field: str
    values: tuple
    family_field: str
    family_values: tuple
    metrics: tuple


def _preset(name, title, overrides, field, values, family_field, family_values, metrics):
    return FigurePreset(name, title, overrides, field, tuple(values), family_field,
                        tuple(family_values), tuple(metrics))


_AREA = ("cue_se", "d2d_se", "area_se_c", "area_se_d")
_EE = ("cue_se", "d2d_se", "cue_ee", "d2d_ee")

PRESETS = {
    p.name: p for p in (
        _preset("fig2", "area SE vs D2D density, CUE power-control family",
                dict(d_o=35.0, s_users=20, n_antennas=400, p_max_d_dbm=15.0, i_th_over_sigma2_db=10.0),
                "lambda_d_over_lambda_m", LAMBDA_RATIOS, "eta", (0.5, 0.8, 1.0), _AREA),
        _preset("fig3", "area SE vs D2D density, D2D power-control family",
                dict(d_o=35.0, s_users=20, n_antennas=400, p_max_d_dbm=15.0, eta=0.8),
                "lambda_d_over_lambda_m", LAMBDA_RATIOS, "i_th_over_sigma2_db", (-20.0, 0.0, math.inf), _AREA),
        _preset("fig4", "EE vs D2D density, D2D power-control family",
                dict(d_o=35.0, s_users=20, n_antennas=400, p_max_d_dbm=15.0, eta=0.8),
                "lambda_d_over_lambda_m", LAMBDA_RATIOS, "i_th_over_sigma2_db", (-20.0, 0.0, math.inf), _EE),
        _preset("fig5", "area SE vs antennas, maximum D2D power family",
                dict(d_o=50.0, s_users=20, lambda_d_over_lambda_m=30.0, eta=0.8, i_th_over_sigma2_db=0.0),
                "n_antennas", range(100, 701, 100), "p_max_d_dbm", (10.0, 15.0, 20.0), _AREA),
        _preset("fig6", "EE vs antennas, maximum D2D power family",
                dict(d_o=50.0, s_users=20, lambda_d_over_lambda_m=30.0, eta=0.8, i_th_over_sigma2_db=0.0),
                "n_antennas", range(100, 701, 100), "p_max_d_dbm", (10.0, 15.0, 20.0), _EE),
        _preset("fig7", "area SE vs D2D density, CUEs-per-cell family",
                dict(d_o=50.0, n_antennas=400, p_max_d_dbm=15.0, eta=0.8, i_th_over_sigma2_db=0.0),
                "lambda_d_over_lambda_m", LAMBDA_RATIOS, "s_users", (10, 20, 30), _AREA),
        _preset("fig8", "EE vs D2D density, CUEs-per-cell family",
                dict(d_o=50.0, n_antennas=400, p_max_d_dbm=15.0, eta=0.8, i_th_over_sigma2_db=0.0),
                "lambda_d_over_lambda_m", LAMBDA_RATIOS, "s_users", (10, 20, 30), _EE),
        _preset("d2d-distance", "area SE vs D2D distance, CUEs-per-cell family",
                dict(n_antennas=400, lambda_d_over_lambda_m=30.0, p_max_d_dbm=15.0, eta=0.9,
                     i_th_over_sigma2_db=5.0),
                "d_o", (10.0, 20.0, 35.0, 50.0, 75.0, 100.0, 150.0, 200.0), "s_users", (10, 20, 30), _AREA),
    )
}


def preset_params(name: str, base: SystemParams | None = None) -> SystemParams:
    try:
        preset = PRESETS[name]
    except KeyError:
        raise SweepError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return apply_overrides(base or default_params(), preset.overrides)


def preset_sweep(name: str, base: SystemParams | None = None, **kwargs) -> SweepSpec:
    preset = PRESETS.get(name)
    params = preset_params(name, base)
    return SweepSpec(params, preset.field, preset.values, preset.metrics,
                     family_field=preset.family_field, family_values=preset.family_values, **kwargs)


# --- sweep evaluation ---------------------------------------------------------

def _point_params(spec: SweepSpec, fam, x) -> SystemParams:
    values = {spec.field: x}
    if spec.family_field is not None:
        values[spec.family_field] = fam
    return apply_overrides(spec.base, values)


def _columns(spec: SweepSpec) -> list:
    cols = []
    if spec.family_field:
        cols.append(spec.family_field)
    cols.append(spec.field)
    m = spec.metrics
    if "cue_se" in m:
        cols += ["cue_se", "cue_se_err"]
    if "d2d_se" in m:
        cols += ["d2d_se", "d2d_se_err"]
    for name in ("area_se_c", "area_se_d", "cue_ee", "d2d_ee"):
        if name in m:
            cols.append(name)
    for name in ("cue_ee", "d2d_ee"):
        if name in m:
            cols.append(name + "_bpj")
    if "bounds" in m:
        cols += ["cue_se_lb", "d2d_se_lb"]
    if spec.mc:
        if "cue_se" in m:
            cols += ["cue_se_mc", "cue_se_mc_se", "cue_se_mc_ci_low", "cue_se_mc_ci_high"]
        if "d2d_se" in m:
            cols += ["d2d_se_mc", "d2d_se_mc_se", "d2d_se_mc_ci_low", "d2d_se_mc_ci_high"]
    return cols


def _guard(cells: dict, names, fn):
    """Run ``fn`` and store its values; a failure becomes an error cell."""
    try:
        out = fn()
    except (ArithmeticError, ValueError) as exc:
        for n in names:
            cells[n] = f"error: {type(exc).__name__}: {exc}"
        return
    if len(names) == 1:
        out = (out,)
    for n, v in zip(names, out):
        cells[n] = v


def _evaluate_point(spec: SweepSpec, index: int, fam, x) -> dict:
    cells = {spec.field: x}
    if spec.family_field:
        cells[spec.family_field] = fam
    try:
        p = _point_params(spec, fam, x)
    except ParameterError as exc:
        return {**cells, "_error": f"error: {exc}"}
    m = spec.metrics
    need_c = any(k in m for k in ("cue_se", "area_se_c", "cue_ee"))
    need_d = any(k in m for k in ("d2d_se", "area_se_d", "d2d_ee"))
    se_c = se_d = None
    if need_c:
        if p.s_users == 0:
            # no typical CUE exists; only the area SE is meaningful (zero)
            cells.update(cue_se="n/a", cue_se_err="n/a")
        else:
            _guard(cells, ("cue_se", "cue_se_err"), lambda: tuple(vars(cue_se(p)).values()))
            if not isinstance(cells.get("cue_se"), str):
                se_c = SpectralEfficiency(cells["cue_se"], cells["cue_se_err"])
    if need_d:
        _guard(cells, ("d2d_se", "d2d_se_err"), lambda: tuple(vars(d2d_se(p)).values()))
        if not isinstance(cells.get("d2d_se"), str):
            se_d = SpectralEfficiency(cells["d2d_se"], cells["d2d_se_err"])
    if "area_se_c" in m:
        if p.s_users == 0:
            cells["area_se_c"] = 0.0
        else:
            cells["area_se_c"] = cells["cue_se"] if se_c is None else area_se_cellular(p, se_c)
    if "area_se_d" in m:
        cells["area_se_d"] = cells["d2d_se"] if se_d is None else area_se_d2d(p, se_d)
    if "cue_ee" in m:
        if p.s_users == 0:
            cells["cue_ee"] = "n/a"
        else:
            cells["cue_ee"] = cells["cue_se"] if se_c is None else cue_ee(p, se_c)
    if "d2d_ee" in m:
        cells["d2d_ee"] = cells["d2d_se"] if se_d is None else d2d_ee(p, se_d)
    for name in ("cue_ee", "d2d_ee"):
        if name in m:
            v = cells[name]
            cells[name + "_bpj"] = v if isinstance(v, str) else v * p.bandwidth
    if "bounds" in m:
        _guard(cells, ("cue_se_lb",), lambda: lower_bound_cue_se(p) if p.s_users else "n/a")
        _guard(cells, ("d2d_se_lb",), lambda: lower_bound_d2d_se(p))
    if spec.mc:
        stream = (spec.seed, index)
        if "cue_se" in m:
            names = ("cue_se_mc", "cue_se_mc_se", "cue_se_mc_ci_low", "cue_se_mc_ci_high")
            if p.s_users == 0:
                cells.update(dict.fromkeys(names, "n/a"))
            else:
                _guard(cells, names, lambda: _mc_cells(simulate_cue_se(p, spec.mc_trials, stream)))
        if "d2d_se" in m:
            names = ("d2d_se_mc", "d2d_se_mc_se", "d2d_se_mc_ci_low", "d2d_se_mc_ci_high")
            _guard(cells, names, lambda: _mc_cells(simulate_d2d_se(p, spec.mc_trials, stream)))
    return cells


def _mc_cells(est: MonteCarloEstimate):
    return est.mean, est.std_error, est.ci95_low, est.ci95_high


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Evaluate every sweep point; failures are recorded in-row and the sweep continues."""
    columns = _columns(spec)
    points = list(spec.points())

    def job(k):
        fam, x = points[k]
        return _evaluate_point(spec, k, fam, x)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(job, range(len(points))))
    else:
        cells = [job(k) for k in range(len(points))]
    rows = []
    for c in cells:
        err = c.get("_error")
        rows.append([c.get(name, err if err else "") for name in columns])
    meta = [f"tool = d2dmimo {__version__}", f"seed = {spec.seed}", f"mc = {'on' if spec.mc else 'off'}",
            f"mc_trials = {spec.mc_trials if spec.mc else 0}",
            "mc_streams = SeedSequence((seed, point index)) spawned per chunk of 200 trials; "
            "point index counts rows from 0",
            f"sweep = {spec.field}", f"family = {spec.family_field or '-'}"]
    meta += ["param " + line for line in dump_config(spec.base).splitlines() if not line.startswith("#")]
    return SweepResult(columns, rows, meta)


# --- CSV ----------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    x = float(v)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _header(name: str) -> str:
    unit = UNITS.get(name) or SWEEP_UNITS.get(name, "1")
    return f"{name} [{unit}]"


def format_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    for line in result.metadata:
        buf.write(f"# {line}\n")
    buf.write(",".join(_header(c) for c in result.columns) + "\n")
    for row in result.rows:
        buf.write(",".join(_fmt(v).replace(",", ";") for v in row) + "\n")
    return buf.getvalue()


def write_csv(result: SweepResult, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(result))


def read_csv(text: str) -> tuple[list, list]:
    """Parse CSV text back into (column names, rows of float-or-str)."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    names = [h.split(" [", 1)[0] for h in lines[0].split(",")]
    rows = []
    for ln in lines[1:]:
        row = []
        for cell in ln.split(","):
            try:
                row.append(float(cell))
            except ValueError:
                row.append(cell)
        rows.append(row)
    return names, rows


# --- analytic vs Monte Carlo report ----------------------------------------------

@dataclass(frozen=True)
class ReportLine:
    name: str
    analytic: float | None
    estimate: MonteCarloEstimate | None
    verdict: str
    note: str = ""

    def render(self) -> str:
        if self.estimate is None:
            return f"{self.name:<22} {self.verdict}"
        e = self.estimate
        text = (f"{self.name:<22} analytic={self.analytic:.10g}  mc={e.mean:.10g} "
                f"+/- {1.96 * e.std_error:.3g} (95% CI)  {self.verdict}")
        return text + (f"  [{self.note}]" if self.note else "")


@dataclass
class Report:
    lines: list
    header: list

    @property
    def passed(self) -> bool:
        return all(line.verdict != "FAIL" for line in self.lines)

    def render(self) -> str:
        out = [f"# {h}" for h in self.header]
        out += [line.render() for line in self.lines]
        out.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(out) + "\n"


def laplace_half_point(coef_fn, p: SystemParams, alpha: float) -> float:
    """t at which exp(-c t^(2/alpha)) = 1/2, from its value at t = 1."""
    c = -math.log(coef_fn(p, 1.0))
    return (math.log(2.0) / c) ** (alpha / 2.0)


def compare_report(p: SystemParams, trials: int = DEFAULT_TRIALS, seed: int = 0,
                   rel_tol: float = 0.05, n_se: float = 3.0, workers: int = 1) -> Report:
    """Analytic values against Monte Carlo; a line passes within max(rel_tol, n_se SE)."""
    lines = []

    def verdict(est, value, rel):
        return "PASS" if est.agrees_with(value, rel, n_se) else "FAIL"

    no_cue = p.s_users == 0
    no_d2d = p.lambda_d == 0 or p.i_th == 0
    if no_cue:
        lines.append(ReportLine("cue_se", None, None, "skipped (no CUEs)"))
    else:
        a = cue_se(p).value
        e = simulate_cue_se(p, trials, (seed, 1), workers)
        lines.append(ReportLine("cue_se", a, e, verdict(e, a, rel_tol)))
    if no_d2d:
        lines.append(ReportLine("d2d_se", None, None, "skipped (no D2D)"))
    else:
        a = d2d_se(p).value
        e = simulate_d2d_se(p, trials, (seed, 2), workers)
        lines.append(ReportLine("d2d_se", a, e, verdict(e, a, rel_tol)))
    pc, pd = simulate_mean_powers(p, max(trials, 100_000), (seed, 3), workers)
    lines.append(ReportLine("mean_cue_power", avg_cue_power(p), pc, verdict(pc, avg_cue_power(p), 0.0)))
    if no_d2d:
        lines.append(ReportLine("mean_d2d_power", None, None, "skipped (no D2D)"))
    else:
        a = mean_d2d_power(p)
        lines.append(ReportLine("mean_d2d_power", a, pd, verdict(pd, a, 0.0),
                                f"uncorrected closed form gives {mean_d2d_power_verbatim(p):.10g}"))
    if no_d2d:
        lines.append(ReportLine("laplace_xi2", None, None, "skipped (no D2D)"))
        lines.append(ReportLine("laplace_xi4", None, None, "skipped (no D2D)"))
    else:
        t2 = laplace_half_point(xi2, p, p.alpha_m)
        e = laplace_xi2(p, [t2], trials, (seed, 4), workers)[0]
        lines.append(ReportLine("laplace_xi2", xi2(p, t2), e, verdict(e, xi2(p, t2), 0.0), f"t={t2:.6g}"))
        t4 = laplace_half_point(xi4, p, p.alpha_d)
        e = laplace_xi4(p, [t4], trials, (seed, 5), workers)[0]
        lines.append(ReportLine("laplace_xi4", xi4(p, t4), e, verdict(e, xi4(p, t4), 0.0), f"t={t4:.6g}"))
    header = [f"tool = d2dmimo {__version__}", f"seed = {seed}", f"trials = {trials}",
              f"tolerance = max({rel_tol:g} relative, {n_se:g} standard errors)"]
    return Report(lines, header)


def bounds_report(p: SystemParams, target_cue: float = 1.0, target_d2d: float = 1.0,
                  exact_se: bool = True) -> str:
    """Text summary of the Jensen factors, lower bounds and D2D-density thresholds."""
    out = [f"# tool = d2dmimo {__version__}"]

    def add(name, value):
        out.append(f"{name:<42} {value if isinstance(value, str) else format(value, '.10g')}")

    if p.s_users:
        x2, x3 = x2_x3(p)
        add("X1", x1(p))
        add("X2", x2)
        add("X3", x3)
    x4, x5, x6 = x4_x5_x6(p)
    add("X4", x4)
    add("X5", x5)
    add("X6", x6)
    if p.s_users:
        add("cue_se_lower_bound", lower_bound_cue_se(p))
        add("cue_se_lower_bound_digamma_gain", lower_bound_cue_se(p, exact=True))
        th = max_d2d_density_cellular(p, target_cue)
        add(f"max_lambda_d_cellular(R={target_cue:g})", th.label())
        add(f"max_lambda_d_cellular_digamma(R={target_cue:g})",
            max_d2d_density_cellular(p, target_cue, exact=True).label())
        if th.status == "ok":
            add("  round-trip cue_se_lower_bound", lower_bound_cue_se(p.replace(lambda_d=th.value)))
    else:
        add("cue_se_lower_bound", "n/a (no CUEs)")
    add("d2d_se_lower_bound", lower_bound_d2d_se(p))
    th = max_d2d_density_d2d(p, target_d2d)
    add(f"max_lambda_d_d2d(R={target_d2d:g})", th.label())
    if th.status == "ok":
        add("  round-trip d2d_se_lower_bound", lower_bound_d2d_se(p.replace(lambda_d=th.value)))
    if exact_se:
        if p.s_users:
            add("cue_se_exact", cue_se(p).value)
        add("d2d_se_exact", d2d_se(p).value)
    try:
        add("X1_uncorrected_sign (diagnostic)", x1(p, verbatim=True))
    except ScaleDomainError as exc:
        add("X1_uncorrected_sign (diagnostic)", f"n/a ({exc})")
    add("X4_uncorrected_sign (diagnostic)", x4_x5_x6(p, verbatim=True)[0])
    return "\n".join(out) + "\n"


def sweep_values(text: str) -> tuple:
    """Parse a comma-separated value list (``inf`` allowed)."""
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            out.append(float(item))
        except ValueError:
            raise SweepError(f"cannot parse sweep value {item!r}") from None
    return tuple(out)


__all__ = [
    "METRICS", "PRESETS", "bounds_report", "FigurePreset", "Report", "ReportLine", "SweepError", "SweepResult", "SweepSpec",
    "compare_report", "format_csv", "preset_params", "preset_sweep", "read_csv", "run_sweep",
    "sweep_values", "write_csv",
]
