# Command-line entry point: one subcommand per experiment

import dataclasses
import logging
import pprint
import sys
from typing import Any, Dict, List, Optional

import click

from .experiments import run_experiment, run_single
from .models import Experiment, NonlinearityKind, Oracle, Sign, Symmetry
from .report import emit_report
from .run_config import RunConfig, load_run_config


def parse_delta_list(ctx, param, raw_value: Optional[str]) -> Optional[List[float]]:
    """Parse the `--delta-list` option, e.g. "0.04,0.02,0.01"."""
    if not raw_value:
        return None
    try:
        return [float(entry) for entry in raw_value.split(",") if entry.strip()]
    except ValueError:
        raise click.BadParameter("--delta-list must be comma-separated numbers")


def _enum_choice(enum) -> click.Choice:
    return click.Choice([member.value for member in enum])


CONFIG_OPTIONS = [
    click.option(
        "--config",
        "config_file",
        type=click.Path(exists=True, dir_okay=False),
        default=None,
        help="Plain-text key = value config file; flags override its values",
    ),
    click.option(
        "--out",
        "out_dir",
        type=click.Path(file_okay=False),
        default=None,
        help="Output directory for the report files (default: results)",
    ),
    click.option("--u0", type=float, default=None, help="Retarded time of C_u0"),
    click.option("--u-end", type=float, default=None, help="Final retarded time"),
    click.option("--delta", type=float, default=None, help="Pulse width of a run"),
    click.option(
        "--delta-list",
        type=str,
        default=None,
        callback=parse_delta_list,
        help="Comma-separated, strictly decreasing pulse widths of a sweep",
    ),
    click.option("--n-u", type=int, default=None, help="Cells in u"),
    click.option("--n-ub", type=int, default=None, help="Cells per pulse width"),
    click.option("--n-theta", type=int, default=None, help="Angular nodes"),
    click.option("--dim", type=click.Choice(["2", "3"]), default=None),
    click.option("--symmetry", type=_enum_choice(Symmetry), default=None),
    click.option("--profile", type=str, default=None, help="Pulse profile name"),
    click.option("--amplitude", type=float, default=None),
    click.option("--angular-mode", type=int, default=None),
    click.option("--nonlinearity", type=_enum_choice(NonlinearityKind), default=None),
    click.option("--power", type=int, default=None, help="Odd exponent k >= 3"),
    click.option("--sign", type=_enum_choice(Sign), default=None),
    click.option("--max-order", type=int, default=None),
    click.option("--headroom", type=float, default=None),
    click.option("--slope-tolerance", type=float, default=None),
    click.option("--equality-tolerance", type=float, default=None),
    click.option("--refinements", type=int, default=None),
    click.option("--oracle", type=_enum_choice(Oracle), default=None),
    click.option("--energy-target", type=float, default=None, help="E0"),
    click.option("--horizon", type=float, default=None, help="T0, sets u0 = -T0"),
    click.option("--ode-amplitude", type=float, default=None),
    click.option("--jobs", type=int, default=None, help="Worker processes"),
    click.option(
        "--xlsx/--no-xlsx", default=True, help="Also write report.xlsx (default on)"
    ),
    click.option("--verbose", is_flag=True, help="Enable verbose debug output"),
]

ENUM_OPTIONS = {
    "symmetry": Symmetry,
    "nonlinearity": NonlinearityKind,
    "sign": Sign,
    "oracle": Oracle,
}


def config_options(func):
    for option in reversed(CONFIG_OPTIONS):
        func = option(func)
    return func


def build_config(experiment: Experiment, options: Dict[str, Any]) -> RunConfig:
    """RunConfig from the config file and the flags, validated.

    Raises:
        click.BadParameter: if the file or the resulting config is invalid
    """
    config_file = options.pop("config_file")
    overrides = dict(options)
    for name, enum in ENUM_OPTIONS.items():
        if overrides.get(name) is not None:
            overrides[name] = enum(overrides[name])
    if overrides.get("dim") is not None:
        overrides["dim"] = int(overrides["dim"])
    overrides["experiment"] = experiment

    try:
        if config_file is not None:
            config = load_run_config(config_file, **overrides)
        else:
            config = RunConfig().with_overrides(**overrides)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--config")

    # A 2D run without an explicit symmetry evolves every angle
    if (
        options.get("symmetry") is None
        and config.dim == 2
        and config.symmetry == Symmetry.SPHERICAL
    ):
        config = dataclasses.replace(config, symmetry=Symmetry.FULL_ANGULAR)

    try:
        config.validate()
    except ValueError as e:
        raise click.BadParameter(str(e))
    logging.debug("Run config:")
    logging.debug(pprint.pformat(dataclasses.asdict(config)))
    return config


def execute(
    experiment: Experiment, options: Dict[str, Any], checkpoint: Optional[str] = None
) -> None:
    verbose = options.pop("verbose")
    xlsx = options.pop("xlsx")
    # Configure logging based on verbose flag
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO, format="%(message)s"
    )
    config = build_config(experiment, options)
    try:
        if experiment == Experiment.SINGLE_RUN:
            result = run_single(config, checkpoint=checkpoint)
        else:
            result = run_experiment(config)
    except ValueError as e:
        # Experiment-specific requirements, e.g. a focusing nonlinearity
        raise click.UsageError(str(e))
    sys.exit(emit_report(result, config.out_dir, xlsx=xlsx))


@click.group()
def main() -> None:
    """Short-pulse semilinear wave experiments on a double-null grid.

    Every subcommand writes its report to --out and exits with 0 iff no
    verdict is violated or failed. An inconclusive fit, one with fewer than
    3 non-zero samples, does not fail the run: check fits.csv before reading
    exit 0 as a confirmed bound.
    """


@main.command()
@config_options
@click.option(
    "--checkpoint",
    type=click.Path(dir_okay=False),
    default=None,
    help="Also dump the evolved field to this checkpoint file",
)
def run(checkpoint: Optional[str], **options) -> None:
    """Evolve a single pulse and report norms, ledgers and data bounds."""
    execute(Experiment.SINGLE_RUN, options, checkpoint=checkpoint)


@main.command()
@config_options
def sweep(**options) -> None:
    """Fit the tracked norms against the pulse width over --delta-list."""
    execute(Experiment.DELTA_SWEEP, options)


@main.command()
@config_options
def converge(**options) -> None:
    """Measure the convergence order against a closed-form solution."""
    execute(Experiment.CONVERGENCE, options)


@main.command()
@config_options
def prop61(**options) -> None:
    """Check the sup norms on the last ingoing cone u_bar = delta."""
    execute(Experiment.PROP61, options)


@main.command()
@config_options
def contrast(**options) -> None:
    """Focusing pulse run with large energy against the blowing-up ODE."""
    execute(Experiment.FOCUSING_CONTRAST, options)


@main.command()
@config_options
def audit(**options) -> None:
    """Energy identity and Sobolev inequality audit over the sweep."""
    execute(Experiment.SOBOLEV_AUDIT, options)


if __name__ == "__main__":
    main()
