"""
Tests for the characteristic evolution scheme.
"""

import math
from unittest import mock

import numpy as np
import pytest

from short_pulse_wave.evolve import (
    BlowUpError,
    CellGeometry,
    Nonlinearity,
    StepFailureError,
    commutator_residual,
    evolve,
    step_diamond,
    transport_l_derivative,
)
from short_pulse_wave.geometry import Resolution, build_grid
from short_pulse_wave.manufactured import DalembertSolution, ManufacturedSolution
from short_pulse_wave.models import Multiplier, NonlinearityKind, Sign, Symmetry
from short_pulse_wave.pulse_data import ConeData, PulseSpec

LINEAR = Nonlinearity(NonlinearityKind.LINEAR)
CUBIC = Nonlinearity(NonlinearityKind.POWER, 3)


class ConstantData(ConeData):
    def outgoing_trace(self, grid):
        return np.ones((grid.n_ub + 1, grid.n_theta))


@pytest.mark.parametrize(
    "nonlinearity, expected",
    [
        pytest.param(LINEAR, 0.0, id="linear"),
        pytest.param(CUBIC, 8.0, id="cubic_defocusing"),
        pytest.param(
            Nonlinearity(NonlinearityKind.POWER, 3, Sign.FOCUSING),
            -8.0,
            id="cubic_focusing",
        ),
        pytest.param(Nonlinearity(NonlinearityKind.POWER, 5), 32.0, id="quintic"),
        pytest.param(
            Nonlinearity(NonlinearityKind.EXP_FOCUSING), -2 * math.e**4, id="exp"
        ),
    ],
)
def test_nonlinearity_evaluate(nonlinearity, expected):
    assert float(nonlinearity.evaluate(2.0)) == pytest.approx(expected)
    assert float(nonlinearity.homogeneous_acceleration(2.0)) == pytest.approx(
        -expected
    )
    assert float(nonlinearity.potential_density(0.0)) == 0.0


def test_nonlinearity_potential_sign():
    assert float(CUBIC.potential_density(2.0)) == pytest.approx(8.0)
    focusing = Nonlinearity(NonlinearityKind.POWER, 3, Sign.FOCUSING)
    assert float(focusing.potential_density(-2.0)) == pytest.approx(-8.0)
    assert focusing.label == "power-3-focusing"
    assert Nonlinearity(NonlinearityKind.EXP_FOCUSING).label == "exp-focusing"


@pytest.mark.parametrize("power", [1, 2, 4])
def test_nonlinearity_rejects_power(power):
    with pytest.raises(ValueError, match="odd k >= 3"):
        Nonlinearity(NonlinearityKind.POWER, power)


def test_step_diamond_flat_update():
    cell = CellGeometry(u=-2.0, u_bar=0.5, h_u=0.1, h_ub=0.1)
    north = step_diamond(
        np.array([1.0]),
        np.array([2.0]),
        np.array([3.0]),
        cell,
        lambda s, w, e, n: np.zeros_like(s),
    )
    np.testing.assert_array_equal(north, [4.0])


def test_step_diamond_rejects_diverging_corrector():
    cell = CellGeometry(u=-2.0, u_bar=0.5, h_u=1.0, h_ub=1.0)
    with pytest.raises(StepFailureError, match="did not contract") as error:
        step_diamond(
            np.array([0.0]),
            np.array([1.0]),
            np.array([0.0]),
            cell,
            lambda s, w, e, n: 1e6 * n,
        )
    assert error.value.corrector > error.value.predictor
    assert (error.value.u, error.value.u_bar) == (-1.5, 1.0)


def test_linear_spherical_evolution_is_exact(grid_3d, pulse, linear_state):
    exact = DalembertSolution(pulse).values(grid_3d)
    scale = np.max(np.abs(exact))
    np.testing.assert_allclose(linear_state.values, exact, rtol=0, atol=1e-12 * scale)


def test_ingoing_trace_stays_zero(cubic_state, state_2d):
    np.testing.assert_array_equal(cubic_state.values[:, 0], 0.0)
    np.testing.assert_array_equal(state_2d.values[:, 0], 0.0)
    assert np.all(np.isfinite(state_2d.values))


def test_evolve_rejects_nonzero_corner(grid_3d):
    with pytest.raises(ValueError, match="must vanish"):
        evolve(grid_3d, ConstantData(), LINEAR)


def test_blow_up_is_reported(grid_3d, pulse):
    with mock.patch("short_pulse_wave.evolve.BLOW_UP_THRESHOLD", 1e-3):
        with pytest.raises(BlowUpError, match="blow-up") as error:
            evolve(grid_3d, pulse, CUBIC)
    assert error.value.value > 1e-3
    assert error.value.u == pytest.approx(grid_3d.u[1])


def test_derivatives_are_cached_frame_derivatives(cubic_state):
    np.testing.assert_array_equal(
        cubic_state.derivative(1, 0, 0), cubic_state.frame.l_phi
    )
    np.testing.assert_array_equal(
        cubic_state.derivative(0, 1, 0), cubic_state.frame.lbar_phi
    )
    assert cubic_state.derivative(2, 0, 0) is cubic_state.derivative(2, 0, 0)
    np.testing.assert_array_equal(cubic_state.derivative(0, 0, 1), 0.0)


def test_box_source_without_forcing(cubic_state):
    np.testing.assert_allclose(cubic_state.box_source(), cubic_state.values**3)


def test_transport_l_derivative_matches_exact():
    grid = build_grid(-4.0, -1.0, 0.04, Resolution(96, 16))
    spec = PulseSpec(delta=0.04)
    state = evolve(grid, spec, LINEAR)
    j = 4
    exact = DalembertSolution(spec).l_derivative(grid)[:, j]
    transported = transport_l_derivative(state, grid.u_bar[j])
    assert transported.shape == (97, 1)
    np.testing.assert_allclose(
        transported, exact, rtol=0, atol=1e-3 * np.max(np.abs(exact))
    )


def test_transport_l_derivative_vanishes_behind_linear_pulse(linear_state):
    transported = transport_l_derivative(linear_state, linear_state.grid.delta)
    assert np.max(np.abs(transported)) < 1e-10 * np.max(
        np.abs(linear_state.frame.l_phi)
    )


def test_commutators_are_round_off(state_2d, cubic_state):
    for pair in Multiplier:
        scale = max(1.0, float(np.max(np.abs(state_2d.derivative(1, 0, 1)))))
        assert commutator_residual(state_2d, pair) <= 1e-9 * scale
        assert commutator_residual(cubic_state, pair) == 0.0


def _manufactured_error(n):
    grid = build_grid(
        -4.0, -1.0, 1.0, Resolution(n, n, 8), dim=2, symmetry=Symmetry.FULL_ANGULAR
    )
    solution = ManufacturedSolution(dim=2, angular_mode=2, nonlinearity=CUBIC)
    return solution.error(evolve(grid, solution, CUBIC))


@pytest.mark.slow
def test_manufactured_solution_converges_at_second_order():
    coarse, fine = _manufactured_error(16), _manufactured_error(32)
    assert fine < coarse
    assert math.log2(coarse / fine) > 1.5
