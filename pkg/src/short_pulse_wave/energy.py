"""
Energy-momentum tensor in the null frame, deformation currents and the
integrated energy identity on the slab.

With the measures dmu_S du_bar on C_u, dmu_S du on Cbar_{u_bar} and
dmu_S du du_bar on the slab, the divergence identity for X in {L, Lbar} reads

    int_{C_u} T(X, L) + int_{Cbar_ubar} T(X, Lbar)
        = int_{C_u0} T(X, L) + iint -2(d-1) K^X - 2 Phi X phi

where Phi = Box phi = N(phi) - forcing.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .evolve import FieldState, Nonlinearity
from .geometry import NullGrid
from .models import Multiplier
from .pulse_data import ConeData


class EnergyFlux(NamedTuple):
    kinetic: float
    potential: float


@dataclass
class EnergyLedger:
    """All terms of the energy identity on D(u, u_bar) for one multiplier.

    Attributes:
        multiplier: X
        u: Retarded time of the final outgoing cone
        u_bar: Advanced time of the final ingoing cone
        flux_out: int_{C_u} T(X, L)
        flux_in: int_{Cbar_ubar} T(X, Lbar)
        initial_flux: int_{C_u0} T(X, L)
        bulk_K: Deformation bulk term
        bulk_source: Source bulk term
        residual: flux_out + flux_in - initial_flux - bulk_K - bulk_source
        bulk_K_magnitude: Bulk integral of |deformation density|
        bulk_source_magnitude: Bulk integral of |source density|
    """

    multiplier: Multiplier
    u: float
    u_bar: float
    flux_out: float
    flux_in: float
    initial_flux: float
    bulk_K: float
    bulk_source: float
    residual: float
    bulk_K_magnitude: float = 0.0
    bulk_source_magnitude: float = 0.0

    @property
    def largest_term(self) -> float:
        """Largest term, bulk terms measured before cancellation in the integral."""
        return max(
            abs(self.flux_out),
            abs(self.flux_in),
            abs(self.initial_flux),
            abs(self.bulk_K),
            abs(self.bulk_source),
            self.bulk_K_magnitude,
            self.bulk_source_magnitude,
        )

    @property
    def relative_residual(self) -> float:
        largest = self.largest_term
        return abs(self.residual) / largest if largest > 0 else 0.0


def bulk_weight(dim: int) -> float:
    """Coefficient of K^X in the divergence density on dmu_S du du_bar."""
    return -2.0 * (dim - 1)


def stress_fields(state: FieldState) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    frame = state.frame
    return (
        frame.l_phi**2,
        frame.lbar_phi**2,
        frame.slashed_nabla_phi**2,
    )


def stress_null_components(
    state: FieldState, u: float, u_bar: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(T(L,L), T(Lbar,Lbar), T(L,Lbar)) = (|L phi|^2, |Lbar phi|^2, |nabla phi|^2)."""
    i = state.grid.index_of_u(u)
    j = state.grid.index_of_u_bar(u_bar)
    return tuple(component[i, j] for component in stress_fields(state))


def deformation_density(
    l_phi, lbar_phi, nabla_phi, r, dim: int, multiplier: Multiplier
) -> np.ndarray:
    """K^L = (1/2r) L phi Lbar phi in 3D, (1/2r)(|nabla phi|^2 + L phi Lbar phi) in 2D.

    K^Lbar = -K^L in both dimensions.
    """
    current = l_phi * lbar_phi
    if dim == 2:
        current = current + nabla_phi**2
    current = current / (2 * r)
    return current if multiplier == Multiplier.L else -current


def deformation_current(
    state: FieldState, multiplier: Multiplier, u: float, u_bar: float
) -> np.ndarray:
    i = state.grid.index_of_u(u)
    j = state.grid.index_of_u_bar(u_bar)
    frame = state.frame
    return deformation_density(
        frame.l_phi[i, j],
        frame.lbar_phi[i, j],
        frame.slashed_nabla_phi[i, j],
        state.grid.radius[i, j],
        state.grid.dim,
        multiplier,
    )


def _sphere_integral(state: FieldState, density: np.ndarray) -> np.ndarray:
    return np.sum(state.grid.node_weights * density, axis=2)


def energy_identity_audit(
    state: FieldState, multiplier: Multiplier, u_star: float, u_bar_star: float
) -> EnergyLedger:
    """Evaluate every term of the energy identity on D(u_star, u_bar_star).

    Cone integrals and the bulk use trapezoid quadrature, which equals the
    corner-averaged cell quadrature of the evolution scheme.
    """
    grid = state.grid
    frame = state.frame
    i = grid.index_of_u(u_star)
    j = grid.index_of_u_bar(u_bar_star)

    t_ll, t_lblb, t_llb = stress_fields(state)
    if multiplier == Multiplier.L:
        outgoing, ingoing = t_ll, t_llb
        x_phi = frame.l_phi
    else:
        outgoing, ingoing = t_llb, t_lblb
        x_phi = frame.lbar_phi

    u = grid.u[: i + 1]
    u_bar = grid.u_bar[: j + 1]

    def cone_out(density, row):
        return float(trapezoid(_sphere_integral(state, density)[row, : j + 1], u_bar))

    def slab(density):
        inner = trapezoid(_sphere_integral(state, density)[: i + 1, : j + 1], u_bar)
        return float(trapezoid(inner, u))

    flux_out = cone_out(outgoing, i)
    flux_in = float(trapezoid(_sphere_integral(state, ingoing)[: i + 1, j], u))
    initial_flux = cone_out(outgoing, 0)

    k_density = deformation_density(
        frame.l_phi,
        frame.lbar_phi,
        frame.slashed_nabla_phi,
        grid.radius[:, :, None],
        grid.dim,
        multiplier,
    )
    k_term = bulk_weight(grid.dim) * k_density
    source_term = -2.0 * state.box_source() * x_phi
    bulk_k = slab(k_term)
    bulk_source = slab(source_term)

    residual = flux_out + flux_in - initial_flux - bulk_k - bulk_source
    ledger = EnergyLedger(
        multiplier=multiplier,
        u=float(grid.u[i]),
        u_bar=float(grid.u_bar[j]),
        flux_out=flux_out,
        flux_in=flux_in,
        initial_flux=initial_flux,
        bulk_K=bulk_k,
        bulk_source=bulk_source,
        residual=residual,
        bulk_K_magnitude=slab(np.abs(k_term)),
        bulk_source_magnitude=slab(np.abs(source_term)),
    )
    logging.debug(
        f"energy ledger X={multiplier.value}: residual={residual:.3e} "
        f"(relative {ledger.relative_residual:.3e})"
    )
    return ledger


def conserved_energy_flux(state: FieldState) -> EnergyFlux:
    """Flux of T(d_t, L) = (|L phi|^2 + |nabla phi|^2)/2 through C_u0.

    This is the kinetic-energy surrogate of the data; the potential term of
    the nonlinearity on C_u0 is returned separately.
    """
    frame = state.frame
    kinetic_density = 0.5 * (frame.l_phi**2 + frame.slashed_nabla_phi**2)
    potential_density = state.nonlinearity.potential_density(state.values)
    u_bar = state.grid.u_bar
    return EnergyFlux(
        kinetic=float(trapezoid(_sphere_integral(state, kinetic_density)[0], u_bar)),
        potential=float(
            trapezoid(_sphere_integral(state, potential_density)[0], u_bar)
        ),
    )


def initial_cone_state(
    grid: NullGrid, data: ConeData, nonlinearity: Nonlinearity
) -> FieldState:
    """State holding only the data on C_u0, enough for conserved_energy_flux."""
    values = np.zeros(grid.shape)
    values[0] = data.outgoing_trace(grid)
    return FieldState(grid=grid, values=values, nonlinearity=nonlinearity, data=data)
