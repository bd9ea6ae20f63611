"""
Short-pulse characteristic data on the initial outgoing cone C_{u0}.

The data is phi(u0, u_bar, theta) = a * delta^(1/2) * psi_0(u_bar / delta) *
cos(m theta) and vanishes on the ingoing cone u_bar = 0.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp, trapezoid

from .geometry import NullGrid, angular_derivative
from .models import BoundKind
from .profiles import PulseProfile, SinPowerProfile

if TYPE_CHECKING:
    from .evolve import Nonlinearity

# Step in s = u_bar/delta for finite-difference profile derivatives
FD_STEP = 1e-4


class ConeData(ABC):
    """Interface for characteristic data of the slab problem."""

    @abstractmethod
    def outgoing_trace(self, grid: NullGrid) -> np.ndarray:
        """Field on C_{u0}, shape (n_ub + 1, n_theta)."""
        pass

    @property
    def has_forcing(self) -> bool:
        return False

    def forcing(self, u, u_bar, theta) -> np.ndarray:
        """Source added to d_u d_ubar phi; broadcasts over its arguments."""
        return np.zeros(np.broadcast(u, u_bar, theta).shape)


@dataclass
class PulseSpec(ConeData):
    """Short pulse a * delta^(1/2) * psi_0(u_bar/delta) * cos(m theta).

    Attributes:
        profile: Shape psi_0 supported in (0, 1)
        amplitude: Scale factor a
        delta: Pulse width
        angular_mode: m, only non-zero in dim 2
    """

    profile: PulseProfile = field(default_factory=SinPowerProfile)
    amplitude: float = 1.0
    delta: float = 0.01
    angular_mode: int = 0

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError(f"delta={self.delta} must be positive")
        if self.amplitude < 0:
            raise ValueError(f"amplitude={self.amplitude} must be non-negative")
        if self.angular_mode < 0:
            raise ValueError(f"angular_mode={self.angular_mode} must be >= 0")

    def angular_factor(self, theta, order: int = 0) -> np.ndarray:
        """d^order/dtheta^order of cos(m theta)."""
        m = self.angular_mode
        if m == 0:
            return np.ones_like(np.asarray(theta, dtype=float)) * (order == 0)
        return m**order * np.cos(m * np.asarray(theta) + order * np.pi / 2)

    def value(self, u_bar, theta=0.0) -> np.ndarray:
        s = np.asarray(u_bar, dtype=float) / self.delta
        return (
            self.amplitude
            * np.sqrt(self.delta)
            * self.profile.value(s)
            * self.angular_factor(theta)
        )

    def has_closed_form(self, order: int) -> bool:
        try:
            self.profile.derivative(np.array([0.5]), order)
        except NotImplementedError:
            return False
        return True

    def profile_derivative(self, s, order: int) -> np.ndarray:
        """psi_0 derivative, by central differences where no closed form exists."""
        if order == 0:
            return self.profile.value(s)
        try:
            return self.profile.derivative(s, order)
        except NotImplementedError:
            h = FD_STEP
            return (
                self.profile_derivative(s + h, order - 1)
                - self.profile_derivative(s - h, order - 1)
            ) / (2 * h)

    def l_derivative(self, u_bar, theta=0.0, order: int = 1, omega: int = 0):
        """L^order Omega^omega phi on C_{u0}."""
        s = np.asarray(u_bar, dtype=float) / self.delta
        return (
            self.amplitude
            * self.delta ** (0.5 - order)
            * self.profile_derivative(s, order)
            * self.angular_factor(theta, omega)
        )

    def outgoing_trace(self, grid):
        return self.value(grid.u_bar[:, None], grid.theta[None, :])


def short_pulse_value(spec: PulseSpec, u_bar, theta=0.0):
    """a * delta^(1/2) * psi_0(u_bar/delta, theta); exactly 0 off (0, delta)."""
    return spec.value(u_bar, theta)


def ingoing_data(grid: NullGrid) -> np.ndarray:
    """Trace on the ingoing cone u_bar = 0, which is always vanishing."""
    return np.zeros((grid.n_u + 1, grid.n_theta))


@dataclass
class DataBound:
    name: str
    norm: str
    value: float
    exponent: float
    kind: BoundKind
    source: str


@dataclass
class DataBoundsReport:
    """Initial-data norms on C_{u0} with the delta exponent each should follow."""

    delta: float
    bounds: List[DataBound] = field(default_factory=list)
    used_finite_differences: bool = False

    def get(self, name: str) -> DataBound:
        for bound in self.bounds:
            if bound.name == name:
                return bound
        raise KeyError(name)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "delta": self.delta,
                    "name": b.name,
                    "norm": b.norm,
                    "value": b.value,
                    "exponent": b.exponent,
                    "kind": b.kind.value,
                    "source": b.source,
                }
                for b in self.bounds
            ]
        )


def transport_ingoing_derivative(
    spec: PulseSpec,
    grid: NullGrid,
    nonlinearity: Optional["Nonlinearity"] = None,
) -> np.ndarray:
    """Lbar phi on C_{u0} from the equation restricted to the initial cone.

    Along C_{u0} the equation is the linear transport
    L(Lbar phi) = -c/r Lbar phi + c/r L phi + r^-2 Laplacian phi - N(phi)
    with Lbar phi = 0 at u_bar = 0.

    Returns:
        Array of shape (n_ub + 1, n_theta)
    """
    c = grid.radial_coefficient
    theta = grid.theta

    def rhs(u_bar, y):
        r = u_bar - grid.u0
        phi = spec.value(u_bar, theta)
        source = c / r * spec.l_derivative(u_bar, theta, 1)
        if not grid.is_spherical:
            source = source + spec.l_derivative(u_bar, theta, 0, omega=2) / r**2
        if nonlinearity is not None:
            source = source - nonlinearity.evaluate(phi)
        return -c / r * y + source

    sol = solve_ivp(
        rhs,
        (0.0, grid.delta),
        np.zeros(grid.n_theta),
        method="DOP853",
        t_eval=grid.u_bar,
        max_step=grid.h_ub,
        rtol=1e-10,
        atol=1e-13,
    )
    assert sol.success, f"transport along C_u0 failed: {sol.message}"
    return sol.y.T


def verify_data_bounds(
    spec: PulseSpec,
    grid: NullGrid,
    nonlinearity: Optional["Nonlinearity"] = None,
) -> DataBoundsReport:
    """Measure the initial-data norms on C_{u0}.

    L-derivatives come from the profile's closed forms; a profile without one
    falls back to finite differences along u_bar and the report is flagged.
    Lbar derivatives come from transport along the cone.

    Args:
        spec: Pulse data
        grid: Grid whose u_bar nodes sample the pulse
        nonlinearity: Nonlinear term used by the transport equation

    Returns:
        DataBoundsReport
    """
    report = DataBoundsReport(delta=spec.delta)
    weights = (grid.sphere_area[0] / grid.n_theta)[:, None]

    def l2(values):
        return float(
            np.sqrt(trapezoid(np.sum(weights * values**2, axis=1), grid.u_bar))
        )

    def sup(values):
        return float(np.max(np.abs(values)))

    u_bar = grid.u_bar[:, None]
    theta = grid.theta[None, :]
    derivatives = {
        (order, omega): spec.l_derivative(u_bar, theta, order, omega)
        for order, omega in [(1, 0), (2, 0), (1, 1), (1, 2)]
    }
    report.used_finite_differences = not (
        spec.has_closed_form(1) and spec.has_closed_form(2)
    )
    if report.used_finite_differences:
        logging.warning(
            f"profile {spec.profile.name!r} lacks closed-form derivatives, "
            "using finite differences on C_u0"
        )
    source = "finite-difference" if report.used_finite_differences else "closed-form"

    phi = spec.outgoing_trace(grid)
    lbar_phi = transport_ingoing_derivative(spec, grid, nonlinearity)
    lbar_omega_phi = angular_derivative(lbar_phi, 1)

    l_phi = derivatives[(1, 0)]
    l2_phi = derivatives[(2, 0)]
    rows = [
        ("sup_phi", "sup", sup(phi), 0.5, BoundKind.EQUALITY, "closed-form"),
        ("sup_L_phi", "sup", sup(l_phi), -0.5, BoundKind.EQUALITY, source),
        ("sup_L2_phi", "sup", sup(l2_phi), -1.5, BoundKind.EQUALITY, source),
        ("L2_L_phi", "L2", l2(l_phi), 0.0, BoundKind.EQUALITY, source),
        ("L2_L2_phi", "L2", l2(l2_phi), -1.0, BoundKind.EQUALITY, source),
        (
            "sup_Omega_phi",
            "sup",
            sup(spec.l_derivative(u_bar, theta, 0, 1)),
            0.0,
            BoundKind.UPPER,
            "closed-form",
        ),
        (
            "sup_L_Omega_phi",
            "sup",
            sup(derivatives[(1, 1)]),
            -0.5,
            BoundKind.UPPER,
            source,
        ),
        (
            "sup_L_Omega2_phi",
            "sup",
            sup(derivatives[(1, 2)]),
            -0.5,
            BoundKind.UPPER,
            source,
        ),
        ("L2_L_Omega_phi", "L2", l2(derivatives[(1, 1)]), 0.0, BoundKind.UPPER, source),
        (
            "L2_L_Omega2_phi",
            "L2",
            l2(derivatives[(1, 2)]),
            0.0,
            BoundKind.UPPER,
            source,
        ),
        ("sup_Lbar_phi", "sup", sup(lbar_phi), 0.5, BoundKind.UPPER, "transport"),
        (
            "sup_Lbar_Omega_phi",
            "sup",
            sup(lbar_omega_phi),
            0.5,
            BoundKind.UPPER,
            "transport",
        ),
    ]
    report.bounds = [DataBound(*row) for row in rows]

    logging.debug(
        f"data bounds at delta={spec.delta}: "
        + ", ".join(f"{b.name}={b.value:.4e}" for b in report.bounds)
    )
    return report
