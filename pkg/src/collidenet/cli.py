"""Command-line entry point."""

import json
import sys
from pathlib import Path

import click

from . import harness, verify as verify_mod
from .errors import ChecksumError, ConfigError, ReplayMismatch, SchemaError


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()] if text else []


@click.group()
def main():
    """Two-pair packet network simulator with delayed channel-state feedback."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), help="YAML config file.")
@click.option("--scheme", type=click.Choice(harness.SCHEMES))
@click.option("--p", type=float)
@click.option("--m", type=int)
@click.option("--seed", type=int)
@click.option("--trials", type=int)
@click.option("--mode", type=click.Choice(harness.MODES))
@click.option("--field-modulus", type=int)
@click.option("--segment", type=int)
@click.option("--workers", type=int)
@click.option("--out", type=click.Path(), help="Results CSV (stdout if omitted).")
@click.option("--trace", type=click.Path(), help="Trace file (one per trial if trials > 1).")
def simulate(config_path, **flags):
    """Run trials and write the results CSV."""
    try:
        if config_path:
            cfg = harness.SimConfig.from_file(config_path, **flags)
        else:
            cfg = harness.SimConfig(**{k: v for k, v in flags.items() if v is not None})
        exp = harness.run_experiment(cfg)
    except ConfigError as e:
        raise click.UsageError(str(e))
    if not cfg.out:
        click.echo(harness.results_csv(exp.trials), nl=False)
    click.echo(json.dumps(exp.summary, sort_keys=True), err=True)


@main.command()
@click.option("--p", "p_values", type=float, multiple=True)
@click.option("--p-grid", help="Comma-separated p values.")
@click.option("--out", type=click.Path())
def region(p_values, p_grid, out):
    """Vertices of the capacity, TDMA and rateless regions."""
    ps = list(p_values) + _floats(p_grid)
    for p in ps:
        if not 0 <= p <= 1:
            raise click.UsageError(f"p must lie in [0, 1], got {p}")
    text = harness.region_csv(ps)
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.option("--p-grid", default="0.25,0.5,0.75", show_default=True)
@click.option("--schemes", default="theorem1,tdma,rateless", show_default=True)
@click.option("--m", type=int, default=2000, show_default=True)
@click.option("--trials", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path())
def sweep(p_grid, schemes, m, trials, seed, workers, out):
    """Regions plus empirical throughput points over a grid of p."""
    names = [s for s in schemes.split(",") if s]
    bad = set(names) - set(harness.SCHEMES)
    if bad:
        raise click.UsageError(f"unknown schemes: {sorted(bad)}")
    rows = harness.sweep(_floats(p_grid), names, m=m, trials=trials, seed=seed, workers=workers)
    text = harness.sweep_csv(rows)
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@main.command()
def verify():
    """Run the built-in property checks."""
    if not verify_mod.run_all(click.echo):
        sys.exit(1)


@main.command()
@click.option("--trace", "trace_path", type=click.Path(exists=True), required=True)
def replay(trace_path):
    """Re-run a traced trial and confirm it reproduces the trace."""
    try:
        res = harness.replay(trace_path)
    except (SchemaError, ChecksumError, ReplayMismatch) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    click.echo(json.dumps(harness.asdict(res), sort_keys=True))


if __name__ == "__main__":
    main()
