"""Command-line entry point: census, analyze, synth, version.

Exit codes: 0 success, 1 configuration problem, 2 I/O failure, 3 parse
failure (including unusable/empty data), 4 internal error.  Data goes to
files or standard output; diagnostics go to standard error.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .config import ConfigError, build_config
from .ingest import IngestError, ParseError, ingest_census
from .report import run_analysis, write_analysis
from .synth import ScenarioError, ScenarioSpec, fabricate_ledger

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_PARSE = 3
EXIT_INTERNAL = 4


def _parse_periods(text: str):
    """Accept a period count ("4") or explicit boundaries ("0,3600,7200")."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        values = [int(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"--periods must be an integer count or comma-separated "
                          f"integer boundaries, got {text!r}") from exc
    if not values:
        raise ConfigError("--periods is empty")
    return values[0] if len(values) == 1 else values


def _parse_bandwidth(text: str):
    if text in ("auto", "schwert"):
        return text
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"--kpss-bandwidth must be auto, schwert, or a lag "
                          f"count, got {text!r}") from exc


_COMMON = [
    click.option("--config", "config_path", type=click.Path(), default=None,
                 help="JSON config file; flags override its values."),
    click.option("--periods", default=None,
                 help="Period count, or comma-separated epoch-second boundaries."),
    click.option("--fail-fast/--no-fail-fast", default=None,
                 help="Stop on the first malformed row instead of counting it."),
    click.option("--out", "out_dir", type=click.Path(), default=None,
                 help="Output directory."),
]


def _with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn
    return wrap


@click.group(name="tokenlaws")
def cli() -> None:
    """Transfer-ledger statistics: census, fits, and synthetic oracles."""


@cli.command()
@click.argument("input_path", type=click.Path())
@_with_options(_COMMON)
def census(input_path, config_path, periods, fail_fast, out_dir):
    """Count well-formed rows per category and period."""
    config = build_config(
        config_path,
        input=input_path,
        periods=_parse_periods(periods) if periods is not None else None,
        fail_fast=fail_fast,
        out_dir=out_dir,
    )
    summary = ingest_census(config.input, periods=config.periods,
                            options=config.ingest_options())
    text = json.dumps(summary.to_dict(), indent=2) + "\n"
    if config.out_dir is None:
        click.echo(text, nl=False)
    else:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        target = out / "census.json"
        target.write_text(text, encoding="utf-8")
        click.echo(str(target))


@cli.command()
@click.argument("input_path", type=click.Path())
@_with_options(_COMMON)
@click.option("--seed", type=int, default=None, help="Run seed recorded in provenance.")
@click.option("--n-bins", type=int, default=None,
              help="Geometric bins for the scaling fit and density files.")
@click.option("--n-tail-min", type=int, default=None,
              help="Smallest tail size an x_min candidate may leave.")
@click.option("--activity-floor", type=int, default=None,
              help="Minimum non-zero hour bins for stationarity/fluctuation fits.")
@click.option("--kpss-variant", type=click.Choice(["level", "trend"]), default=None,
              help="Stationarity regression: demean or detrend.")
@click.option("--kpss-bandwidth", default=None,
              help="Long-run variance bandwidth: auto, schwert, or a lag count.")
@click.option("--scaling/--no-scaling", default=None, help="Toggle the scaling stage.")
@click.option("--powerlaw/--no-powerlaw", default=None, help="Toggle the tail stage.")
@click.option("--kpss/--no-kpss", default=None, help="Toggle the stationarity stage.")
@click.option("--taylor/--no-taylor", default=None,
              help="Toggle the mean-variance stage.")
@click.option("--figures/--no-figures", default=None,
              help="Render PNG figures next to the plot-data files.")
def analyze(input_path, config_path, periods, fail_fast, out_dir, seed, n_bins,
            n_tail_min, activity_floor, kpss_variant, kpss_bandwidth, scaling,
            powerlaw, kpss, taylor, figures):
    """Run every enabled analysis and write the full report."""
    config = build_config(
        config_path,
        input=input_path,
        periods=_parse_periods(periods) if periods is not None else None,
        fail_fast=fail_fast,
        out_dir=out_dir,
        seed=seed,
        n_bins=n_bins,
        n_tail_min=n_tail_min,
        activity_floor=activity_floor,
        kpss_variant=kpss_variant,
        kpss_bandwidth=_parse_bandwidth(kpss_bandwidth)
        if kpss_bandwidth is not None else None,
        scaling=scaling,
        powerlaw=powerlaw,
        kpss=kpss,
        taylor=taylor,
        figures=figures,
    )
    if config.out_dir is None:
        raise ConfigError("analyze needs an output directory (--out)")
    bundle = run_analysis(config.input, config)
    report_path = write_analysis(bundle, config.out_dir, figures=config.figures)
    click.echo(str(report_path))


@cli.command()
@click.argument("scenario_file", type=click.Path())
@click.option("--seed", type=int, default=0, help="Generator seed.")
@click.option("--out", "out_dir", type=click.Path(), default=".",
              help="Output directory.")
@click.option("--ledger", "ledger_name", default="ledger.csv",
              help="Ledger filename; a .gz suffix writes gzip.")
@click.option("--sidecar", "sidecar_name", default="sidecar.json",
              help="Ground-truth sidecar filename.")
def synth(scenario_file, seed, out_dir, ledger_name, sidecar_name):
    """Fabricate a labelled ledger plus its ground-truth sidecar."""
    try:
        with open(scenario_file, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{scenario_file}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(f"{scenario_file}: scenario must be a JSON object")
    scenario = ScenarioSpec.from_dict(raw)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sidecar_path = out / sidecar_name
    fabricate_ledger(scenario, seed=seed, ledger_path=out / ledger_name,
                     sidecar_path=sidecar_path)
    click.echo(str(sidecar_path))


@cli.command()
def version():
    """Print the tool version."""
    click.echo(__version__)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return EXIT_OK
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_CONFIG
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ScenarioError) as exc:
        click.echo(f"config error: {exc}", err=True)
        return EXIT_CONFIG
    except ParseError as exc:
        click.echo(f"parse error: {exc}", err=True)
        return EXIT_PARSE
    except IngestError as exc:
        click.echo(f"data error: {exc}", err=True)
        return EXIT_PARSE
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001 - last-resort exit-code mapping
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
