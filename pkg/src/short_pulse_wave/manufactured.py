"""Closed-form solutions used as convergence oracles."""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .evolve import FieldState, Nonlinearity
from .geometry import NullGrid
from .models import NonlinearityKind
from .pulse_data import ConeData, PulseSpec


class ExactSolution(ABC):
    @abstractmethod
    def values(self, grid: NullGrid) -> np.ndarray:
        pass

    @abstractmethod
    def l_derivative(self, grid: NullGrid) -> np.ndarray:
        pass

    def error(self, state: FieldState) -> float:
        """Max nodal error of phi and L phi against the exact solution."""
        grid = state.grid
        return float(
            max(
                np.max(np.abs(state.values - self.values(grid))),
                np.max(np.abs(state.frame.l_phi - self.l_derivative(grid))),
            )
        )


@dataclass
class DalembertSolution(ExactSolution):
    """Linear spherical 3D solution r phi = r0(u_bar) phi_0(u_bar).

    psi = r phi solves d_u d_ubar psi = 0, so psi = F(u_bar) + G(u) with G = 0
    because phi vanishes on u_bar = 0.
    """

    pulse: PulseSpec

    def values(self, grid):
        r0 = grid.u_bar - grid.u0
        psi = r0 * self.pulse.value(grid.u_bar)
        return (psi[None, :] / grid.radius)[:, :, None]

    def l_derivative(self, grid):
        r0 = grid.u_bar - grid.u0
        phi0 = self.pulse.value(grid.u_bar)
        dpsi = phi0 + r0 * self.pulse.l_derivative(grid.u_bar)
        r = grid.radius
        return ((dpsi[None, :] * r - (r0 * phi0)[None, :]) / r**2)[:, :, None]


@dataclass
class ManufacturedSolution(ConeData, ExactSolution):
    """phi* = sin(u) sin(u_bar) cos(m theta) with the forcing that makes it exact.

    Attributes:
        dim: Spatial dimension of the grid it is used on
        angular_mode: m, zero in spherical mode
        nonlinearity: N(phi) included in the forcing
    """

    dim: int = 2
    angular_mode: int = 2
    nonlinearity: Nonlinearity = field(
        default_factory=lambda: Nonlinearity(NonlinearityKind.LINEAR)
    )

    def __post_init__(self):
        if self.dim == 3 and self.angular_mode != 0:
            raise ValueError("spherical mode needs angular_mode = 0")

    def _phi(self, u, u_bar, theta):
        return np.sin(u) * np.sin(u_bar) * np.cos(self.angular_mode * theta)

    def outgoing_trace(self, grid):
        return self._phi(grid.u0, grid.u_bar[:, None], grid.theta[None, :])

    @property
    def has_forcing(self):
        return True

    def forcing(self, u, u_bar, theta):
        m = self.angular_mode
        c = (self.dim - 1) / 2
        r = u_bar - u
        angular = np.cos(m * theta)
        phi = self._phi(u, u_bar, theta)
        mixed = np.cos(u) * np.cos(u_bar) * angular
        l_phi = np.sin(u) * np.cos(u_bar) * angular
        lbar_phi = np.cos(u) * np.sin(u_bar) * angular
        laplacian = -(m**2) * phi
        return (
            mixed
            - laplacian / r**2
            - c / r * (l_phi - lbar_phi)
            + self.nonlinearity.evaluate(phi)
        )

    def values(self, grid):
        return self._phi(
            grid.u[:, None, None], grid.u_bar[None, :, None], grid.theta[None, None, :]
        )

    def l_derivative(self, grid):
        return (
            np.sin(grid.u)[:, None, None]
            * np.cos(grid.u_bar)[None, :, None]
            * np.cos(self.angular_mode * grid.theta)[None, None, :]
        )
