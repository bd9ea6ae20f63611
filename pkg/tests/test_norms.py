"""
Tests for sphere and cone norms, the norm hierarchy and the Sobolev checks.
"""

import math

import numpy as np
import pytest

from short_pulse_wave.evolve import FieldState, Nonlinearity
from short_pulse_wave.models import NonlinearityKind
from short_pulse_wave.norms import (
    assemble_norm_report,
    cone_norm_ingoing,
    cone_norm_outgoing,
    family_terms,
    ingoing_cone_norms,
    norm_columns,
    outgoing_cone_norms,
    parse_quantity,
    sobolev_check,
    sphere_norm,
)

LINEAR = Nonlinearity(NonlinearityKind.LINEAR)


@pytest.fixture
def unit_state_2d(grid_2d):
    return FieldState(grid=grid_2d, values=np.ones(grid_2d.shape), nonlinearity=LINEAR)


@pytest.mark.parametrize(
    "name, powers",
    [
        pytest.param("phi", (0, 0, 0), id="phi"),
        pytest.param("L", (1, 0, 0), id="L"),
        pytest.param("L_phi", (1, 0, 0), id="L_phi"),
        pytest.param("Lbar", (0, 1, 0), id="Lbar"),
        pytest.param("Omega2", (0, 0, 2), id="Omega2"),
        pytest.param("L2", (2, 0, 0), id="L2"),
        pytest.param("LbarOmega", (0, 1, 1), id="LbarOmega"),
        pytest.param("L2Omega", (2, 0, 1), id="L2Omega"),
        pytest.param("LLbar", (1, 1, 0), id="LLbar"),
        pytest.param("Lbar2_phi", (0, 2, 0), id="Lbar2_phi"),
    ],
)
def test_parse_quantity(name, powers):
    assert parse_quantity(name) == powers


@pytest.mark.parametrize("name", ["", "psi", "OmegaL", "L_Omega"])
def test_parse_quantity_rejects(name):
    with pytest.raises(ValueError, match="Unknown quantity"):
        parse_quantity(name)


def test_sphere_norm_of_constant(unit_state_2d):
    u, u_bar = -2.0, 0.02
    area = 2 * math.pi * (u_bar - u)
    assert sphere_norm(unit_state_2d, u, u_bar, "phi", 2) == pytest.approx(
        math.sqrt(area)
    )
    assert sphere_norm(unit_state_2d, u, u_bar, "phi", 4) == pytest.approx(
        area**0.25
    )
    assert sphere_norm(unit_state_2d, u, u_bar, "phi", np.inf) == 1.0
    with pytest.raises(ValueError, match="p=3"):
        sphere_norm(unit_state_2d, u, u_bar, "phi", 3)


def test_cone_norms_of_constant(unit_state_2d):
    grid = unit_state_2d.grid
    u = -2.0
    # sphere area is linear in u_bar, so the trapezoid rule is exact
    expected = math.sqrt(2 * math.pi * (grid.delta**2 / 2 - u * grid.delta))
    assert cone_norm_outgoing(unit_state_2d, u, grid.delta, "phi") == pytest.approx(
        expected
    )
    expected = math.sqrt(2 * math.pi * ((grid.u_end**2 - grid.u0**2) / -2))
    assert cone_norm_ingoing(unit_state_2d, 0.0, grid.u_end, "phi") == pytest.approx(
        expected
    )
    assert cone_norm_outgoing(unit_state_2d, u, 0.0, "phi") == 0.0
    assert cone_norm_ingoing(unit_state_2d, 0.0, grid.u0, "L") == 0.0


def test_cumulative_cone_norms_match_single_cones(state_2d):
    grid = state_2d.grid
    outgoing = outgoing_cone_norms(state_2d, "L")
    ingoing = ingoing_cone_norms(state_2d, "Omega")
    for i, j in [(0, grid.n_ub), (5, 3), (grid.n_u, grid.n_ub)]:
        assert outgoing[i, j] == pytest.approx(
            cone_norm_outgoing(state_2d, grid.u[i], grid.u_bar[j], "L"), rel=1e-12
        )
        assert ingoing[i, j] == pytest.approx(
            cone_norm_ingoing(state_2d, grid.u_bar[j], grid.u[i], "Omega"), rel=1e-12
        )


def test_family_terms():
    terms = family_terms(2)
    assert list(terms) == ["E1", "E2", "Ebar1", "Ebar2", "F2", "Fbar2"]
    assert terms["E2"] == [("out", "LOmega", 0.0), ("out", "Omega2", -0.5)]
    assert terms["Ebar1"] == [("in", "Omega", 0.0), ("in", "Lbar", -0.5)]
    assert terms["F2"] == [("out", "L2", 1.0)]
    assert norm_columns(1)[:5] == ["delta", "u", "u_bar", "E1", "Ebar1"]
    assert norm_columns(1)[-1] == "M"


def test_norm_report_spherical(cubic_state):
    report = assemble_norm_report(cubic_state)
    table = report.table
    grid = cubic_state.grid
    assert report.max_order == 3
    assert list(table.columns) == norm_columns(3)
    assert len(table) == (grid.n_u + 1) * (grid.n_ub + 1)
    assert report.structurally_zero == [
        "E2",
        "E3",
        "Ebar2",
        "Ebar3",
        "F3",
        "Fbar3",
        "Omega_phi_L4_S",
    ]
    for column in report.structurally_zero:
        assert table[column].abs().max() == 0.0
    families = list(family_terms(3))
    np.testing.assert_allclose(table["M"], table[families].sum(axis=1))

    row = report.at(3, 5)
    assert row["u"] == pytest.approx(grid.u[3])
    assert row["u_bar"] == pytest.approx(grid.u_bar[5])
    assert (table["M"] >= 0).all()


def test_norm_report_2d(state_2d):
    report = assemble_norm_report(state_2d, max_order=2)
    assert report.structurally_zero == []
    assert report.table["Omega_phi_L4_S"].max() > 0
    with pytest.raises(ValueError, match="max_order"):
        assemble_norm_report(state_2d, max_order=0)


def test_norm_report_csv(cubic_state, temp_output_dir):
    report = assemble_norm_report(cubic_state, max_order=1)
    path = temp_output_dir / "norms.csv"
    report.to_csv(path)
    assert path.read_text().splitlines()[0] == ",".join(norm_columns(1))


@pytest.mark.parametrize("lemma", ["2.4", "2.5"])
def test_sobolev_ratios_finite(cubic_state, lemma):
    audit = sobolev_check(cubic_state, lemma)
    assert audit.lemma == lemma
    assert np.isfinite(audit.worst_ratio)
    assert audit.worst_ratio > 0
    assert not audit.violated
    assert cubic_state.grid.u0 <= audit.u <= cubic_state.grid.u_end


@pytest.mark.parametrize("lemma", ["7.1", "7.2", "7.3"])
def test_sobolev_ratios_finite_2d(state_2d, lemma):
    audit = sobolev_check(state_2d, lemma)
    assert np.isfinite(audit.worst_ratio)
    assert not audit.violated


def test_sobolev_check_rejects(cubic_state):
    with pytest.raises(ValueError, match="Unknown lemma"):
        sobolev_check(cubic_state, "9.9")
    with pytest.raises(ValueError, match="dim 2"):
        sobolev_check(cubic_state, "7.1")
