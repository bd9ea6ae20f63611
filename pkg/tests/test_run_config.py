"""
Tests for run configuration defaults, validation and the config file loader.
"""

import os

import pytest

from short_pulse_wave.models import (
    Experiment,
    NonlinearityKind,
    Oracle,
    Sign,
    Symmetry,
)
from short_pulse_wave.run_config import RunConfig, load_run_config, parse_config_text


def test_defaults_are_valid():
    config = RunConfig().validate()
    assert config.dim == 3
    assert config.symmetry == Symmetry.SPHERICAL
    assert config.delta_list == [0.04, 0.02, 0.01, 0.005]
    assert config.resolved_max_order == 3
    assert config.resolution == (300, 64, 1)
    assert RunConfig(dim=2).resolved_max_order == 2


@pytest.mark.parametrize(
    "overrides, message",
    [
        pytest.param(
            dict(delta_list=[0.01, 0.02, 0.005]), "strictly decreasing", id="order"
        ),
        pytest.param(
            dict(experiment=Experiment.DELTA_SWEEP, delta_list=[0.02, 0.01]),
            "at least 3",
            id="short_sweep",
        ),
        pytest.param(dict(headroom=0.5), "headroom", id="headroom"),
        pytest.param(dict(refinements=2), "refinements", id="refinements"),
        pytest.param(dict(jobs=0), "jobs", id="jobs"),
        pytest.param(dict(amplitude=-1.0), "amplitude", id="amplitude"),
        pytest.param(dict(angular_mode=1), "angular_mode", id="spherical_mode"),
        pytest.param(dict(max_order=0), "max_order", id="max_order"),
        pytest.param(dict(horizon=0.5), "horizon", id="horizon"),
        pytest.param(dict(energy_target=-1.0), "energy_target", id="energy_target"),
        pytest.param(dict(u_end=-0.5), "u_end", id="u_end"),
        pytest.param(dict(power=4), "odd k", id="even_power"),
        pytest.param(dict(profile="gaussian"), "Unknown profile", id="profile"),
        pytest.param(dict(dim=2), "spherical", id="2d_spherical"),
    ],
)
def test_validate_rejects(overrides, message):
    with pytest.raises(ValueError, match=message):
        RunConfig(**overrides).validate()


def test_full_angular_config_is_valid():
    config = RunConfig(
        dim=2, symmetry=Symmetry.FULL_ANGULAR, n_theta=16, angular_mode=2
    ).validate()
    assert config.grid_for(0.01).shape == (301, 65, 16)
    assert config.pulse_for(0.01).angular_mode == 2


def test_builders():
    config = RunConfig(amplitude=2.0, sign=Sign.FOCUSING)
    grid = config.grid_for(0.02, u0=-6.0)
    assert grid.u0 == -6.0
    assert grid.delta == 0.02
    assert config.pulse_for(0.02).amplitude == 2.0
    assert config.pulse_for(0.02, amplitude=3.0).amplitude == 3.0
    assert config.build_nonlinearity().label == "power-3-focusing"


def test_with_overrides_skips_none():
    config = RunConfig().with_overrides(delta=0.02, n_u=None, sign=Sign.FOCUSING)
    assert config.delta == 0.02
    assert config.n_u == 300
    assert config.sign == Sign.FOCUSING


def test_parse_config_text():
    values = parse_config_text(
        """
        # comment
        delta_list = 0.04, 0.02, 0.01
        nonlinearity = exp-focusing
        oracle = manufactured   # trailing comment
        horizon = none
        max_order = 2
        experiment = delta-sweep
        """
    )
    assert values == {
        "delta_list": [0.04, 0.02, 0.01],
        "nonlinearity": NonlinearityKind.EXP_FOCUSING,
        "oracle": Oracle.MANUFACTURED,
        "horizon": None,
        "max_order": 2,
        "experiment": Experiment.DELTA_SWEEP,
    }


@pytest.mark.parametrize(
    "text, message",
    [
        pytest.param("delta 0.01", "cfg:1: expected 'key = value'", id="no_equals"),
        pytest.param("\nwidth = 0.01", "cfg:2: unknown key 'width'", id="unknown"),
        pytest.param("n_u = many", "cfg:1: bad value for n_u", id="bad_int"),
        pytest.param("sign = sideways", "cfg:1: bad value for sign", id="bad_enum"),
    ],
)
def test_parse_config_text_errors(text, message):
    with pytest.raises(ValueError, match=message):
        parse_config_text(text, source="cfg")


def test_load_run_config(test_data_dir):
    path = os.path.join(test_data_dir, "configs", "small_run.cfg")
    config = load_run_config(path)
    assert (config.n_u, config.n_ub, config.delta) == (24, 16, 0.04)
    assert config.delta_list == [0.04, 0.02, 0.01]
    assert config.max_order is None
    config.validate()

    overridden = load_run_config(path, n_ub=32, delta=None)
    assert overridden.n_ub == 32
    assert overridden.delta == 0.04


def test_load_run_config_reports_file_and_line(test_data_dir):
    path = os.path.join(test_data_dir, "configs", "unknown_key.cfg")
    with pytest.raises(ValueError, match=r"unknown_key.cfg:2: unknown key"):
        load_run_config(path)
