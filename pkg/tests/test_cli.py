"""
Tests for the command-line interface.
"""

import json
import os
from unittest import mock

import pytest
from click.testing import CliRunner

from short_pulse_wave.cli import main
from short_pulse_wave.models import Experiment, Symmetry, Verdict
from short_pulse_wave.report import CheckRow, ExperimentResult

SMALL_RUN = ["--n-u", "24", "--n-ub", "16", "--delta", "0.04", "--no-xlsx"]


@pytest.fixture
def runner():
    return CliRunner()


def test_help_lists_subcommands(runner):
    result = runner.invoke(main, ["--help"])
    assert result.exit_code == 0
    for command in ["run", "sweep", "converge", "prop61", "contrast", "audit"]:
        assert command in result.output


def test_run(runner, temp_output_dir):
    checkpoint = temp_output_dir / "field.chk"
    result = runner.invoke(
        main,
        ["run", *SMALL_RUN, "--out", str(temp_output_dir)]
        + ["--checkpoint", str(checkpoint)],
    )
    assert result.exit_code == 0, result.output
    for name in [
        "checks.csv",
        "norms.csv",
        "data_bounds.csv",
        "energy.csv",
        "ledgers.csv",
        "summary.json",
    ]:
        assert (temp_output_dir / name).exists(), name
    assert not (temp_output_dir / "report.xlsx").exists()
    assert checkpoint.exists()


def test_config_file_with_flag_override(runner, test_data_dir, temp_output_dir):
    config = os.path.join(test_data_dir, "configs", "small_run.cfg")
    result = runner.invoke(
        main,
        ["run", "--config", config, "--n-ub", "32", "--no-xlsx"]
        + ["--out", str(temp_output_dir)],
    )
    assert result.exit_code == 0, result.output
    with open(temp_output_dir / "summary.json") as f:
        parameters = json.load(f)["parameters"]
    assert parameters["n_ub"] == 32
    assert parameters["n_u"] == 24
    assert parameters["delta_list"] == [0.04, 0.02, 0.01]
    assert parameters["experiment"] == "single-run"


def test_unknown_config_key(runner, test_data_dir, temp_output_dir):
    config = os.path.join(test_data_dir, "configs", "unknown_key.cfg")
    result = runner.invoke(main, ["run", "--config", config])
    assert result.exit_code == 2
    assert "unknown key 'pulse_width'" in result.output


@pytest.mark.parametrize(
    "args, message",
    [
        pytest.param(
            ["--delta-list", "0.01,0.02,0.005"], "strictly decreasing", id="order"
        ),
        pytest.param(["--delta-list", "abc"], "comma-separated", id="not_numbers"),
        pytest.param(["--delta-list", "0.04,0.02"], "at least 3", id="short"),
        pytest.param(["--power", "4"], "odd k", id="even_power"),
    ],
)
def test_sweep_rejects_bad_options(runner, temp_output_dir, args, message):
    result = runner.invoke(main, ["sweep", "--out", str(temp_output_dir), *args])
    assert result.exit_code == 2
    assert message in result.output
    assert not (temp_output_dir / "summary.json").exists()


def test_contrast_needs_focusing(runner, temp_output_dir):
    result = runner.invoke(
        main, ["contrast", *SMALL_RUN, "--out", str(temp_output_dir)]
    )
    assert result.exit_code == 2
    assert "focusing nonlinearity" in result.output


def test_converge(runner, temp_output_dir):
    result = runner.invoke(
        main,
        ["converge", "--n-u", "16", "--n-ub", "16", "--delta", "0.04"]
        + ["--out", str(temp_output_dir)],
    )
    assert result.exit_code == 0, result.output
    assert (temp_output_dir / "convergence.csv").exists()
    assert (temp_output_dir / "report.xlsx").exists()


def test_failing_verdict_exits_with_one(runner, temp_output_dir):
    failing = ExperimentResult(
        experiment=Experiment.DELTA_SWEEP,
        checks=[CheckRow("evolution@0.01", float("nan"), None, Verdict.FAILED)],
    )
    with mock.patch(
        "short_pulse_wave.cli.run_experiment", return_value=failing
    ) as run:
        result = runner.invoke(
            main, ["sweep", "--out", str(temp_output_dir), "--no-xlsx"]
        )
    assert result.exit_code == 1
    assert run.call_args.args[0].experiment == Experiment.DELTA_SWEEP
    assert (temp_output_dir / "checks.csv").exists()


def test_2d_defaults_to_full_angular(runner, temp_output_dir):
    passing = ExperimentResult(experiment=Experiment.PROP61)
    with mock.patch(
        "short_pulse_wave.cli.run_experiment", return_value=passing
    ) as run:
        result = runner.invoke(
            main,
            ["prop61", "--dim", "2", "--n-theta", "8", "--out", str(temp_output_dir)],
        )
    assert result.exit_code == 0, result.output
    config = run.call_args.args[0]
    assert config.dim == 2
    assert config.symmetry == Symmetry.FULL_ANGULAR
    assert config.n_theta == 8
