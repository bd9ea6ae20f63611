"""
Tests for the double-null grid and its derivative operators.
"""

import math

import numpy as np
import pytest

from short_pulse_wave.geometry import (
    Resolution,
    angular_derivative,
    build_grid,
    frame_sample,
    null_derivative,
    sphere_measure,
    to_null,
    to_time_radius,
)
from short_pulse_wave.models import Symmetry


def test_grid_layout(grid_3d):
    assert grid_3d.shape == (25, 17, 1)
    assert grid_3d.h_u == pytest.approx(3 / 24)
    assert grid_3d.h_ub == pytest.approx(0.04 / 16)
    assert grid_3d.u[0] == -4.0
    assert grid_3d.u[-1] == pytest.approx(-1.0)
    assert grid_3d.u_bar[-1] == pytest.approx(0.04)
    assert grid_3d.radial_coefficient == 1.0
    np.testing.assert_allclose(
        grid_3d.radius, grid_3d.u_bar[None, :] - grid_3d.u[:, None]
    )
    # r stays at least 1 on the whole slab
    assert grid_3d.radius.min() == pytest.approx(1.0)


def test_node_lookup(grid_3d):
    assert grid_3d.index_of_u(-4.0) == 0
    assert grid_3d.index_of_u(-1.0) == 24
    assert grid_3d.index_of_u_bar(0.04) == 16
    assert grid_3d.index_of_u_bar(0.02) == 8
    with pytest.raises(ValueError, match="not a node"):
        grid_3d.index_of_u(-3.99)
    with pytest.raises(ValueError, match="not a node"):
        grid_3d.index_of_u_bar(0.05)


def test_refined_keeps_angular_count():
    assert Resolution(10, 8, 16).refined(2) == Resolution(20, 16, 16)
    assert Resolution(10, 8).refined(3) == Resolution(30, 24, 1)


@pytest.mark.parametrize(
    "kwargs, message",
    [
        pytest.param(dict(u_end=-0.5), "u_end", id="u_end_above_minus_one"),
        pytest.param(dict(u0=-1.0), "u0", id="empty_u_range"),
        pytest.param(dict(delta=0.0), "delta", id="zero_delta"),
        pytest.param(dict(dim=4), "dim", id="unsupported_dim"),
        pytest.param(
            dict(symmetry=Symmetry.FULL_ANGULAR), "full-angular", id="3d_full_angular"
        ),
        pytest.param(dict(dim=2), "spherical", id="2d_spherical"),
        pytest.param(dict(resolution=Resolution(1, 8)), "n_u", id="too_few_cells"),
        pytest.param(
            dict(resolution=Resolution(8, 8, 4)), "n_theta", id="spherical_angles"
        ),
        pytest.param(
            dict(
                dim=2,
                symmetry=Symmetry.FULL_ANGULAR,
                resolution=Resolution(8, 8, 1),
            ),
            "n_theta",
            id="full_angular_single_angle",
        ),
    ],
)
def test_build_grid_rejects(kwargs, message):
    arguments = dict(
        u0=-4.0,
        u_end=-1.0,
        delta=0.01,
        resolution=Resolution(8, 8),
        dim=3,
        symmetry=Symmetry.SPHERICAL,
    )
    arguments.update(kwargs)
    with pytest.raises(ValueError, match=message):
        build_grid(**arguments)


def test_null_coordinates():
    t, r = to_time_radius(-2.0, 0.5)
    assert (t, r) == (-1.5, 2.5)
    assert to_null(t, r) == (-2.0, 0.5)


def test_sphere_measure(grid_3d, grid_2d):
    measure = sphere_measure(grid_3d, -2.0, 0.01)
    assert measure.total == pytest.approx(4 * math.pi * 2.01**2)
    assert measure.weights.sum() == pytest.approx(measure.total)

    measure = sphere_measure(grid_2d, -2.0, 0.0)
    assert measure.total == pytest.approx(4 * math.pi)
    assert len(measure.weights) == 8

    with pytest.raises(ValueError):
        sphere_measure(grid_3d, -5.0, 0.0)
    with pytest.raises(ValueError):
        sphere_measure(grid_3d, -2.0, 0.1)


def test_node_weights_sum_to_sphere_area(grid_2d):
    np.testing.assert_allclose(grid_2d.node_weights.sum(axis=2), grid_2d.sphere_area)


def test_angular_derivative_is_spectral():
    theta = 2 * np.pi * np.arange(16) / 16
    values = np.cos(2 * theta)[None, :]
    np.testing.assert_allclose(
        angular_derivative(values, 1), -2 * np.sin(2 * theta)[None, :], atol=1e-12
    )
    np.testing.assert_allclose(angular_derivative(values, 2), -4 * values, atol=1e-12)
    np.testing.assert_array_equal(angular_derivative(values, 0), values)
    np.testing.assert_array_equal(
        angular_derivative(np.ones((3, 1)), 1), np.zeros((3, 1))
    )


def test_null_derivative_exact_on_quadratics():
    x = np.linspace(0, 1, 11)
    values = (3 * x**2 - x)[:, None]
    np.testing.assert_allclose(
        null_derivative(values, 0.1, axis=0), (6 * x - 1)[:, None], atol=1e-12
    )


def test_frame_sample_angular_gradient(grid_2d):
    theta = grid_2d.theta[None, None, :]
    phi = np.cos(theta) * grid_2d.u_bar[None, :, None] * np.ones(grid_2d.shape)
    frame = frame_sample(grid_2d, phi)
    np.testing.assert_allclose(
        grid_2d.radius[:, :, None] * frame.slashed_nabla_phi, frame.omega_phi
    )
    np.testing.assert_allclose(frame.l_phi, np.cos(theta) * np.ones(grid_2d.shape))
    np.testing.assert_allclose(frame.lbar_phi, 0.0, atol=1e-12)
