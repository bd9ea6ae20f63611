"""
Test fixtures for short_pulse_wave.

This module provides small grids, pulses and evolved fields shared by the tests.
"""

import os

import pytest

from short_pulse_wave.evolve import Nonlinearity, evolve
from short_pulse_wave.geometry import Resolution, build_grid
from short_pulse_wave.models import NonlinearityKind, Symmetry
from short_pulse_wave.pulse_data import PulseSpec
from short_pulse_wave.run_config import RunConfig

LINEAR = Nonlinearity(NonlinearityKind.LINEAR)
CUBIC = Nonlinearity(NonlinearityKind.POWER, 3)


def pytest_addoption(parser):
    """Add command line options for pytest."""
    parser.addoption(
        "--capture-output",
        action="store_true",
        help="Capture report output files as golden references",
    )


@pytest.fixture
def capture_output(request):
    """Fixture to determine if we should capture output files."""
    return request.config.getoption("--capture-output")


@pytest.fixture
def test_data_dir():
    """Return the path to the test data directory."""
    return os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture
def temp_output_dir(tmp_path):
    """Provide a temporary directory for test output files."""
    return tmp_path


@pytest.fixture
def grid_3d():
    """Coarse spherical grid with 16 cells across a pulse of width 0.04."""
    return build_grid(-4.0, -1.0, 0.04, Resolution(24, 16))


@pytest.fixture
def grid_2d():
    return build_grid(
        -4.0, -1.0, 0.04, Resolution(12, 8, 8), dim=2, symmetry=Symmetry.FULL_ANGULAR
    )


@pytest.fixture
def pulse():
    return PulseSpec(amplitude=1.0, delta=0.04)


@pytest.fixture
def linear_state(grid_3d, pulse):
    return evolve(grid_3d, pulse, LINEAR)


@pytest.fixture
def cubic_state(grid_3d, pulse):
    return evolve(grid_3d, pulse, CUBIC)


@pytest.fixture
def state_2d(grid_2d):
    return evolve(grid_2d, PulseSpec(delta=0.04, angular_mode=1), CUBIC)


@pytest.fixture
def small_config(temp_output_dir):
    """Cheap 3D cubic configuration for experiment tests."""
    return RunConfig(
        delta=0.04,
        n_u=24,
        n_ub=16,
        delta_list=[0.04, 0.02, 0.01],
        out_dir=str(temp_output_dir),
    )
