"""rake-select command line.

Log verbosity comes from RAKE_SELECT_LOG (DEBUG, INFO, WARNING, ...; default
WARNING). Exit status is 0 on success, 1 on configuration or I/O errors or
failed checks, 2 when an exhaustive search would exceed its budget.
"""

from __future__ import annotations

import logging
import os
import sys

import click

from . import __version__
from .channel import ConfigError
from .config import ConfigParseError, load_config
from .selectors import BudgetExceeded

EXIT_ERROR = 1
EXIT_BUDGET = 2


def _setup_logging():
    level = os.environ.get("RAKE_SELECT_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )


def _load(config, overrides, seed):
    overrides = list(overrides)
    if seed is not None:
        overrides.append(f"system.seed={seed}")
    return load_config(config, overrides)


def _fail(msg, code=EXIT_ERROR):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


@click.group()
@click.version_option(__version__, prog_name="rake-select")
def main():
    """Finger selection experiments for MMSE selective Rake receivers."""
    _setup_logging()


_config_opt = click.option(
    "--config", "config", required=True, help="TOML config file or preset name (fig3, fig4, fig5)."
)
_set_opt = click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override a config key.")
_seed_opt = click.option("--seed", type=int, default=None, help="Root seed (overrides system.seed).")


@main.command()
@_config_opt
@_set_opt
@click.option("--out", "out_dir", default="results", show_default=True, type=click.Path(file_okay=False))
@_seed_opt
def run(config, overrides, out_dir, seed):
    """Run a Monte Carlo experiment and write results.csv, manifest.json and a plot script."""
    from .montecarlo import run_experiment
    from .report import emit_results

    try:
        plan = _load(config, overrides, seed)
        n = len(plan.points())

        def progress(i, total):
            click.echo(f"[{i + 1}/{total}] done", err=True)

        result = run_experiment(plan, progress=progress if n > 1 else None)
        paths = emit_results(result, out_dir)
    except BudgetExceeded as exc:
        _fail(str(exc), EXIT_BUDGET)
    except (ConfigError, ConfigParseError, OSError) as exc:
        _fail(str(exc))
    for name in ("results.csv", "manifest.json", "plot_results.py"):
        click.echo(paths[name])


@main.command()
@_config_opt
@_set_opt
@_seed_opt
@click.option("--trial", type=int, default=0, show_default=True, help="Trial index of the realization.")
@click.option("--point", type=int, default=0, show_default=True, help="Sweep point index.")
def solve(config, overrides, seed, trial, point):
    """Diagnose every selector on a single realization."""
    from .report import solve_instance

    try:
        plan = _load(config, overrides, seed)
        if not 0 <= point < len(plan.points()):
            raise ConfigError(f"--point must be in [0, {len(plan.points())}), got {point}")
        if trial < 0:
            raise ConfigError(f"--trial must be nonnegative, got {trial}")
        text, _ = solve_instance(plan, trial_index=trial, sweep_index=point)
    except BudgetExceeded as exc:
        _fail(str(exc), EXIT_BUDGET)
    except (ConfigError, ConfigParseError, OSError) as exc:
        _fail(str(exc))
    click.echo(text, nl=False)


@main.command()
def verify():
    """Run a quick randomized property suite."""
    from .verify import run_all

    checks = run_all()
    for c in checks:
        click.echo(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    if not all(c.passed for c in checks):
        sys.exit(EXIT_ERROR)


if __name__ == "__main__":
    main()
