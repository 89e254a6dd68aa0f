"""Full-pipeline analysis report: assembly, serialization, validation.

`run_analysis` folds the ledger once, then fills a grid of cells
(4 categories x k periods, with a sender/receiver split where the
analysis is role-specific).  Every cell carries a status: "ok" with the
fitted numbers, "absent" when the slice has too little data to fit, or
"error" when a stage failed unexpectedly.  Failures never abort the
remaining slices.

`write_analysis` lays the result out on disk: `report.json` with a
stable key order, one delimited table per analysis, and per-slice
plot-data files.  Identical input, config, and seed produce byte
identical files.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .aggregate import (
    aggregate_ledger,
    degree_sample,
    hourly_matrix,
    sender_profiles,
)
from .config import RNG_ALGORITHM, RunConfig
from .ingest import source_paths
from .model import CATEGORIES, ROLES, Category, Role
from .powerlaw import (
    DegenerateTailError,
    InsufficientTailError,
    TailModel,
    analyze_tail,
)
from .scaling import InsufficientDataError, fit_from_binned, log_bin
from .stationarity import MIN_OBS, stationary_fraction
from .taylor import fit_taylor, mean_variance

SCHEMA_VERSION = 1
REPORT_FILENAME = "report.json"

_TABLE_BY_KIND = {"scaling": "table2", "tail": "table3", "taylor": "table5"}

_TABLE_COLUMNS = {
    "table1": ("category", "period", "count"),
    "table2": ("category", "period", "role", "alpha", "intercept", "r2",
               "n_points", "n_profiles", "status"),
    "table3": ("category", "period", "role", "gamma", "x_min", "sigma_gamma",
               "ks_distance", "llr", "p_value", "n_tail", "verdict", "status"),
    "table4": ("category", "period", "role", "n_tested", "n_stationary",
               "percentage", "activity_floor", "status"),
    "table5": ("category", "period", "role", "b", "log_a", "a", "r2", "se_b",
               "n_accounts", "status"),
}


class SchemaError(ValueError):
    """Report does not conform to the published schema."""


@dataclass(frozen=True)
class PlotSeries:
    """One plot-data file worth of points plus its fit parameters."""

    kind: str
    category: str
    period: int
    role: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    meta: dict = field(default_factory=dict)

    @property
    def basename(self) -> str:
        return f"{_TABLE_BY_KIND[self.kind]}_{self.category}_{self.period}_{self.role}"


@dataclass
class AnalysisBundle:
    report: dict
    series: list


def _absent(reason: str) -> dict:
    return {"status": "absent", "reason": reason}


def _error_cell(exc: Exception) -> dict:
    return {"status": "error", "error": f"{type(exc).__name__}: {exc}"}


def _scaling_cell(cell_agg, category: Category, period: int, n_bins: int):
    profiles = sender_profiles(cell_agg)
    if not profiles:
        return _absent("no sender profiles in slice"), None
    n = np.array([p.partners for p in profiles], dtype=float)
    v = np.array([p.trades for p in profiles], dtype=float)
    try:
        cut = log_bin(n, v, n_bins)
        fit = fit_from_binned(cut)
    except InsufficientDataError as exc:
        return _absent(str(exc)), None
    cell = {
        "status": "ok",
        "alpha": float(fit.alpha),
        "intercept": float(fit.intercept),
        "r2": float(fit.r_squared),
        "n_points": int(fit.n_points),
        "n_profiles": len(profiles),
    }
    rows = tuple((float(a), float(mv)) for a, mv in zip(cut.abscissa, cut.mean_v))
    series = PlotSeries(kind="scaling", category=category.value, period=period,
                        role=Role.SENDER.value, columns=("n_partners", "mean_trades"),
                        rows=rows, meta={"alpha": float(fit.alpha),
                                         "intercept": float(fit.intercept),
                                         "r2": float(fit.r_squared)})
    return cell, series


def _density_rows(counts: np.ndarray, model: TailModel, n_tail: int,
                  n_bins: int) -> tuple[tuple, ...]:
    """Log-binned empirical density with the fitted model overlaid.

    The model column is the fitted tail mass spread over each bin's
    width, scaled by the tail share so both columns are densities of the
    same sample.
    """
    x = counts.astype(float)
    n = x.size
    lo, hi = x.min(), x.max()
    tail_share = n_tail / n

    def model_mass(a: float, b: float, closed: bool) -> float:
        top = np.floor(b) if closed else np.ceil(b) - 1.0
        bottom = np.ceil(a) - 1.0
        cdf_top = float(model.cdf(top)) if top >= model.x_min else 0.0
        cdf_bottom = float(model.cdf(bottom)) if bottom >= model.x_min else 0.0
        return max(cdf_top - cdf_bottom, 0.0)

    if lo == hi:
        return ((float(lo), 1.0, tail_share * model_mass(lo, lo, True)),)
    log_edges = np.linspace(np.log10(lo), np.log10(hi), n_bins + 1)
    edges = 10.0 ** log_edges
    idx = np.searchsorted(log_edges, np.log10(x), side="right") - 1
    np.clip(idx, 0, n_bins - 1, out=idx)
    rows = []
    for b in range(n_bins):
        members = idx == b
        count = int(members.sum())
        if count == 0:
            continue
        a_edge, b_edge = float(edges[b]), float(edges[b + 1])
        width = b_edge - a_edge
        closed = b == n_bins - 1
        abscissa = float(10.0 ** np.log10(x[members]).mean())
        empirical = count / (n * width)
        modeled = tail_share * model_mass(a_edge, b_edge, closed) / width
        rows.append((abscissa, empirical, modeled))
    return tuple(rows)


def _tail_cell(sample, category: Category, period: int, role: Role,
               n_tail_min: int, n_bins: int):
    counts = sample.counts
    if counts.size == 0:
        return _absent("no accounts in slice"), None
    try:
        rep = analyze_tail(counts, n_tail_min=n_tail_min)
    except (InsufficientTailError, DegenerateTailError) as exc:
        return _absent(str(exc)), None
    cell = {
        "status": "ok",
        "gamma": float(rep.gamma),
        "x_min": int(rep.x_min),
        "sigma_gamma": float(rep.sigma_gamma),
        "ks_distance": float(rep.ks_distance),
        "llr": float(rep.llr),
        "p_value": float(rep.p_value),
        "n_tail": int(rep.n_tail),
        "verdict": rep.verdict,
        "exp_lambda": float(rep.exp_lambda),
        "indistinguishable": bool(rep.indistinguishable),
    }
    model = TailModel(rep.gamma, int(rep.x_min))
    rows = _density_rows(counts, model, int(rep.n_tail), n_bins)
    series = PlotSeries(kind="tail", category=category.value, period=period,
                        role=role.value,
                        columns=("degree", "density", "model_density"),
                        rows=rows, meta={"gamma": float(rep.gamma),
                                         "x_min": int(rep.x_min),
                                         "ks_distance": float(rep.ks_distance)})
    return cell, series


def _stationarity_cell(matrix: np.ndarray, config: RunConfig):
    if matrix.shape[0] == 0:
        return _absent("no accounts in slice"), None
    if matrix.shape[1] < MIN_OBS:
        return (_absent(f"period spans {matrix.shape[1]} hour bins; "
                        f"need >= {MIN_OBS}"), None)
    share = stationary_fraction(matrix, activity_floor=config.activity_floor,
                                regression=config.kpss_variant,
                                bandwidth=config.kpss_bandwidth)
    percentage = None if share.n_tested == 0 else float(share.percentage)
    cell = {
        "status": "ok",
        "n_tested": share.n_tested,
        "n_stationary": share.n_stationary,
        "n_skipped": share.n_skipped,
        "percentage": percentage,
        "activity_floor": config.activity_floor,
    }
    return cell, None


def _taylor_cell(matrix: np.ndarray, category: Category, period: int, role: Role,
                 activity_floor: int):
    if matrix.shape[0] == 0:
        return _absent("no accounts in slice"), None
    if matrix.shape[1] < 2:
        return _absent("period spans fewer than two hour bins"), None
    active = matrix[(matrix != 0).sum(axis=1) >= activity_floor]
    if active.shape[0] == 0:
        return _absent("no accounts above the activity floor"), None
    mu, var = mean_variance(active)
    try:
        fit = fit_taylor(mu, var)
    except InsufficientDataError as exc:
        return _absent(str(exc)), None
    cell = {
        "status": "ok",
        "b": float(fit.beta),
        "log_a": float(fit.intercept),
        "a": float(fit.prefactor),
        "r2": float(fit.r_squared),
        "se_b": float(fit.se_beta),
        "n_accounts": int(fit.n_points),
    }
    used = (mu > 0) & (var > 0)
    rows = tuple((float(np.log10(m)), float(np.log10(s)))
                 for m, s in zip(mu[used], var[used]))
    series = PlotSeries(kind="taylor", category=category.value, period=period,
                        role=role.value, columns=("log10_mean", "log10_variance"),
                        rows=rows, meta={"b": float(fit.beta),
                                         "log_a": float(fit.intercept),
                                         "r2": float(fit.r_squared)})
    return cell, series


def _guard(builder, *args):
    """Run one cell builder; unexpected failures become error cells."""
    try:
        return builder(*args)
    except Exception as exc:  # noqa: BLE001 - per-slice isolation is the contract
        return _error_cell(exc), None


def _input_digests(source) -> list:
    digests = []
    for path in source_paths(source):
        h = hashlib.sha256()
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 20), b""):
                h.update(chunk)
        digests.append({"path": str(path), "sha256": h.hexdigest()})
    return digests


def run_analysis(source, config: RunConfig, version: str = __version__) -> AnalysisBundle:
    """Fold the ledger and fill every enabled section of the report."""
    options = config.ingest_options()
    need_hourly = config.kpss or config.taylor
    agg = aggregate_ledger(source, periods=config.periods, options=options,
                           collect_hourly=need_hourly)
    k = agg.partition.k
    periods = range(1, k + 1)
    report = {"schema_version": SCHEMA_VERSION,
              "census": agg.census_summary().to_dict()}
    series_out: list[PlotSeries] = []

    def collect(cell_and_series):
        cell, series = cell_and_series
        if series is not None and series.rows:
            series_out.append(series)
        return cell

    if config.scaling:
        report["scaling"] = {
            cat.value: {
                str(p): collect(_guard(_scaling_cell, agg.slice(cat, p), cat, p,
                                       config.n_bins))
                for p in periods
            }
            for cat in CATEGORIES
        }
    if config.powerlaw:
        report["tails"] = {
            cat.value: {
                str(p): {
                    role.value: collect(_guard(
                        _tail_cell, degree_sample(agg.slice(cat, p), role),
                        cat, p, role, config.n_tail_min, config.n_bins))
                    for role in ROLES
                }
                for p in periods
            }
            for cat in CATEGORIES
        }
    if config.kpss:
        report["stationarity"] = {
            cat.value: {
                str(p): {
                    role.value: collect(_guard(
                        _stationarity_cell,
                        hourly_matrix(agg.slice(cat, p), role, agg.partition, p)[1],
                        config))
                    for role in ROLES
                }
                for p in periods
            }
            for cat in CATEGORIES
        }
    if config.taylor:
        report["taylor"] = {
            cat.value: {
                str(p): {
                    role.value: collect(_guard(
                        _taylor_cell,
                        hourly_matrix(agg.slice(cat, p), role, agg.partition, p)[1],
                        cat, p, role, config.activity_floor))
                    for role in ROLES
                }
                for p in periods
            }
            for cat in CATEGORIES
        }
    # The echoed config describes the analysis, so the destination directory
    # stays out of it: saving the same run elsewhere must not change a byte
    # of the report.
    config_echo = config.to_dict()
    config_echo.pop("out_dir", None)
    report["provenance"] = {
        "version": version,
        "seed": config.seed,
        "rng": RNG_ALGORITHM,
        "config": config_echo,
        "inputs": _input_digests(source),
    }
    return AnalysisBundle(report=report, series=series_out)


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _table_text(name: str, rows: list) -> str:
    header = "\t".join(_TABLE_COLUMNS[name])
    body = "\n".join("\t".join(_fmt(v) for v in row) for row in rows)
    return header + ("\n" + body if body else "") + "\n"


def _cell_row(columns, prefix, cell):
    values = list(prefix)
    for col in columns[len(prefix):-1]:
        values.append(cell.get(col))
    values.append(cell["status"])
    return tuple(values)


def _table_rows(report: dict) -> dict:
    tables: dict[str, list] = {}
    census = report["census"]["census"]
    tables["table1"] = [(cat, period, census[cat][period])
                        for cat in census for period in census[cat]]
    if "scaling" in report:
        cols = _TABLE_COLUMNS["table2"]
        tables["table2"] = [
            _cell_row(cols, (cat, period, Role.SENDER.value), cell)
            for cat, by_period in report["scaling"].items()
            for period, cell in by_period.items()
        ]
    for section, table in (("tails", "table3"), ("stationarity", "table4"),
                           ("taylor", "table5")):
        if section not in report:
            continue
        cols = _TABLE_COLUMNS[table]
        tables[table] = [
            _cell_row(cols, (cat, period, role), cell)
            for cat, by_period in report[section].items()
            for period, by_role in by_period.items()
            for role, cell in by_role.items()
        ]
    return tables


def _series_text(series: PlotSeries) -> str:
    lines = [f"# {series.basename}"]
    for key, value in series.meta.items():
        lines.append(f"# {key} = {_fmt(value)}")
    lines.append("# columns: " + "\t".join(series.columns))
    for row in series.rows:
        lines.append("\t".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def report_json_text(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_analysis(bundle: AnalysisBundle, out_dir, *, figures: bool = True) -> Path:
    """Write report.json, the delimited tables, plot data, and figures.

    Returns the report.json path.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / REPORT_FILENAME
    report_path.write_text(report_json_text(bundle.report), encoding="utf-8")
    for name, rows in _table_rows(bundle.report).items():
        (out / f"{name}.tsv").write_text(_table_text(name, rows), encoding="utf-8")
    for series in bundle.series:
        (out / f"{series.basename}.dat").write_text(_series_text(series),
                                                    encoding="utf-8")
    if figures:
        from .figures import render_series
        for series in bundle.series:
            render_series(series, out / f"{series.basename}.png")
    return report_path


_SECTION_REQUIRED = {
    "scaling": ("alpha", "intercept", "r2", "n_points"),
    "tails": ("gamma", "x_min", "sigma_gamma", "ks_distance", "llr", "p_value",
              "n_tail", "verdict"),
    "stationarity": ("n_tested", "n_stationary", "percentage", "activity_floor"),
    "taylor": ("b", "log_a", "a", "r2", "n_accounts"),
}

_ROLE_SECTIONS = ("tails", "stationarity", "taylor")


def _check_cell(path: str, section: str, cell) -> None:
    if not isinstance(cell, dict) or "status" not in cell:
        raise SchemaError(f"{path}: cell must be an object with a status")
    status = cell["status"]
    if status == "ok":
        for key in _SECTION_REQUIRED[section]:
            if key not in cell:
                raise SchemaError(f"{path}: ok cell missing field {key!r}")
    elif status == "absent":
        if "reason" not in cell:
            raise SchemaError(f"{path}: absent cell missing reason")
    elif status == "error":
        if "error" not in cell:
            raise SchemaError(f"{path}: error cell missing message")
    else:
        raise SchemaError(f"{path}: unknown status {status!r}")


def validate_report(report) -> None:
    """Raise SchemaError unless the report has every required field."""
    if not isinstance(report, dict):
        raise SchemaError("report must be a JSON object")
    if report.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"schema_version must be {SCHEMA_VERSION}")
    known = {"schema_version", "census", "scaling", "tails", "stationarity",
             "taylor", "provenance"}
    unknown = set(report) - known
    if unknown:
        raise SchemaError(f"unknown top-level sections: {', '.join(sorted(unknown))}")
    for required in ("census", "provenance"):
        if required not in report:
            raise SchemaError(f"missing required section {required!r}")
    census = report["census"]
    for key in ("boundaries", "census", "total", "rows_read", "malformed_rows",
                "out_of_span_rows", "time_span"):
        if key not in census:
            raise SchemaError(f"census: missing field {key!r}")
    boundaries = census["boundaries"]
    if not isinstance(boundaries, list) or len(boundaries) < 2:
        raise SchemaError("census.boundaries must list at least two edges")
    period_keys = [str(p) for p in range(1, len(boundaries))]
    category_names = [cat.value for cat in CATEGORIES]
    for cat in category_names:
        counts = census["census"].get(cat)
        if not isinstance(counts, dict) or list(counts) != period_keys:
            raise SchemaError(f"census.census.{cat}: need counts for periods "
                              f"{period_keys}")
    provenance = report["provenance"]
    for key in ("version", "seed", "rng", "config", "inputs"):
        if key not in provenance:
            raise SchemaError(f"provenance: missing field {key!r}")
    if not isinstance(provenance["inputs"], list):
        raise SchemaError("provenance.inputs must be a list")
    for entry in provenance["inputs"]:
        if not isinstance(entry, dict) or "path" not in entry or "sha256" not in entry:
            raise SchemaError("provenance.inputs entries need path and sha256")
    for section in _SECTION_REQUIRED:
        if section not in report:
            continue
        grid = report[section]
        if list(grid) != category_names:
            raise SchemaError(f"{section}: categories must be exactly "
                              f"{category_names} in order")
        for cat, by_period in grid.items():
            if list(by_period) != period_keys:
                raise SchemaError(f"{section}.{cat}: periods must be exactly "
                                  f"{period_keys} in order")
            for period, value in by_period.items():
                path = f"{section}.{cat}.{period}"
                if section in _ROLE_SECTIONS:
                    if not isinstance(value, dict) or list(value) != [
                            r.value for r in ROLES]:
                        raise SchemaError(f"{path}: need sender and receiver cells")
                    for role, cell in value.items():
                        _check_cell(f"{path}.{role}", section, cell)
                else:
                    _check_cell(path, section, value)


__all__ = [
    "SCHEMA_VERSION",
    "REPORT_FILENAME",
    "SchemaError",
    "PlotSeries",
    "AnalysisBundle",
    "run_analysis",
    "report_json_text",
    "write_analysis",
    "validate_report",
]
