"""
Characteristic evolution of the semilinear wave equation on the double-null slab.

In null coordinates the equation reads

    d_u d_ubar phi = r^-2 Laplacian phi + c r^-1 (L phi - Lbar phi) - N(phi) + forcing

with c = 1 in 3+1 and c = 1/2 in 2+1 dimensions. In spherical symmetry the 3D
problem is evolved for psi = r phi, for which the radial terms cancel:
d_u d_ubar psi = -r N(psi / r) + r forcing. Every cell of the grid is updated
with the null-parallelogram rule from its south, west and east corners.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, NamedTuple, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .geometry import (
    FrameSample,
    NullGrid,
    angular_derivative,
    frame_sample,
    null_derivative,
)
from .models import BLOW_UP_THRESHOLD, Multiplier, NonlinearityKind, Sign
from .pulse_data import ConeData, PulseSpec

# Corrector changes below either bound count as converged
CORRECTOR_ABS_TOL = 1e-12
CORRECTOR_REL_TOL = 1e-10


class BlowUpError(RuntimeError):
    def __init__(self, u: float, u_bar: float, value: float):
        super().__init__(f"blow-up at u={u:.6g}, u_bar={u_bar:.6g}: |phi|={value:.3e}")
        self.u = u
        self.u_bar = u_bar
        self.value = value


class StepFailureError(RuntimeError):
    def __init__(self, u: float, u_bar: float, predictor: float, corrector: float):
        super().__init__(
            f"corrector did not contract at u={u:.6g}, u_bar={u_bar:.6g}: "
            f"|predictor change|={predictor:.3e}, |corrector change|={corrector:.3e}"
        )
        self.u = u
        self.u_bar = u_bar
        self.predictor = predictor
        self.corrector = corrector


@dataclass(frozen=True)
class Nonlinearity:
    """Right-hand side N(phi) of Box phi = N(phi).

    Attributes:
        kind: LINEAR (N = 0), POWER (+-|phi|^(k-1) phi) or EXP_FOCUSING
            (-phi e^(phi^2))
        power: Odd exponent k >= 3 for POWER
        sign: DEFOCUSING (+) or FOCUSING (-) for POWER
    """

    kind: NonlinearityKind = NonlinearityKind.POWER
    power: int = 3
    sign: Sign = Sign.DEFOCUSING

    def __post_init__(self):
        if self.kind == NonlinearityKind.POWER and (
            self.power < 3 or self.power % 2 == 0
        ):
            raise ValueError(f"power nonlinearity needs odd k >= 3, got {self.power}")

    @property
    def signum(self) -> int:
        return 1 if self.sign == Sign.DEFOCUSING else -1

    @property
    def label(self) -> str:
        if self.kind == NonlinearityKind.POWER:
            return f"power-{self.power}-{self.sign.value}"
        return self.kind.value

    def evaluate(self, phi: np.ndarray) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        if self.kind == NonlinearityKind.LINEAR:
            return np.zeros_like(phi)
        if self.kind == NonlinearityKind.POWER:
            # |phi|^(k-1) phi == phi^k for odd k
            return self.signum * phi**self.power
        return -phi * np.exp(phi**2)

    def potential_density(self, phi: np.ndarray) -> np.ndarray:
        """Potential part of the energy density, zero at phi = 0."""
        phi = np.asarray(phi, dtype=float)
        if self.kind == NonlinearityKind.LINEAR:
            return np.zeros_like(phi)
        if self.kind == NonlinearityKind.POWER:
            k = self.power
            return self.signum * 2 / (k + 1) * np.abs(phi) ** (k + 1)
        return -(np.exp(phi**2) - 1)

    def homogeneous_acceleration(self, phi: np.ndarray) -> np.ndarray:
        """phi'' for spatially constant solutions, where Box phi = -phi''."""
        return -self.evaluate(phi)


class CellStencil(NamedTuple):
    """Centre values of a cell: phi and its first frame derivatives."""

    phi: np.ndarray
    l_phi: np.ndarray
    lbar_phi: np.ndarray
    angular_laplacian: np.ndarray


class CellGeometry(NamedTuple):
    """Centre coordinates and spacings of one null-parallelogram cell."""

    u: float
    u_bar: float
    h_u: float
    h_ub: float

    @property
    def r(self) -> float:
        return self.u_bar - self.u

    @property
    def north(self) -> Tuple[float, float]:
        return self.u + self.h_u / 2, self.u_bar + self.h_ub / 2


@dataclass
class FieldState:
    """Evolved field on the slab.

    values are phi at every node, indexed [i, j, m]. frame holds the first
    null-frame derivatives; higher mixed derivatives are produced on demand by
    `derivative` and cached.
    """

    grid: NullGrid
    values: np.ndarray
    nonlinearity: Nonlinearity
    data: Optional[ConeData] = None
    frame: Optional[FrameSample] = None
    forcing: Optional[np.ndarray] = None
    _derivatives: Dict[Tuple[int, int, int], np.ndarray] = field(
        default_factory=dict, repr=False
    )

    def __post_init__(self):
        assert self.values.shape == self.grid.shape, (
            f"values shape {self.values.shape} != grid shape {self.grid.shape}"
        )
        if self.frame is None:
            self.frame = frame_sample(self.grid, self.values)

    def derivative(self, n_l: int = 0, n_lbar: int = 0, n_omega: int = 0) -> np.ndarray:
        """L^n_l Lbar^n_lbar Omega^n_omega phi by nested differences."""
        key = (n_l, n_lbar, n_omega)
        if key not in self._derivatives:
            if n_l > 0:
                result = null_derivative(
                    self.derivative(n_l - 1, n_lbar, n_omega), self.grid.h_ub, axis=1
                )
            elif n_lbar > 0:
                result = null_derivative(
                    self.derivative(0, n_lbar - 1, n_omega), self.grid.h_u, axis=0
                )
            else:
                result = angular_derivative(self.values, n_omega)
            self._derivatives[key] = result
        return self._derivatives[key]

    def forcing_values(self) -> np.ndarray:
        if self.forcing is None:
            return np.zeros(self.grid.shape)
        return self.forcing

    def box_source(self) -> np.ndarray:
        """Box phi = N(phi) - forcing at every node."""
        return self.nonlinearity.evaluate(self.values) - self.forcing_values()


def null_frame_rhs(
    stencil: CellStencil,
    r: float,
    nonlinearity: Nonlinearity,
    forcing=0.0,
    radial_coefficient: float = 1.0,
) -> np.ndarray:
    """d_u d_ubar phi at a cell centre from the null-frame form of the equation."""
    with np.errstate(over="ignore", invalid="ignore"):
        return (
            stencil.angular_laplacian / r**2
            + radial_coefficient / r * (stencil.l_phi - stencil.lbar_phi)
            - nonlinearity.evaluate(stencil.phi)
            + forcing
        )


def reduced_rhs(psi: np.ndarray, r: float, nonlinearity: Nonlinearity, forcing=0.0):
    """d_u d_ubar psi for psi = r phi in spherical symmetry."""
    with np.errstate(over="ignore", invalid="ignore"):
        return -r * nonlinearity.evaluate(psi / r) + r * forcing


RhsEvaluator = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def step_diamond(
    psi_s: np.ndarray,
    psi_w: np.ndarray,
    psi_e: np.ndarray,
    cell: CellGeometry,
    rhs: RhsEvaluator,
) -> np.ndarray:
    """Null-parallelogram update of the north corner.

    psi_N = psi_W + psi_E - psi_S + h_u h_ub RHS(centre). The centre depends on
    psi_N, so a predictor pass uses the flat guess psi_W + psi_E - psi_S and one
    corrector pass re-evaluates with the predicted corner.

    Args:
        psi_s: Value at (u_i, u_bar_j)
        psi_w: Value at (u_{i+1}, u_bar_j)
        psi_e: Value at (u_i, u_bar_{j+1})
        cell: Centre coordinates and spacings
        rhs: Evaluates the centre right-hand side from (S, W, E, N) corners

    Returns:
        Value at (u_{i+1}, u_bar_{j+1})

    Raises:
        StepFailureError: if the corrector change is not at most half the
            predictor change and is above tolerance
    """
    area = cell.h_u * cell.h_ub
    guess = psi_w + psi_e - psi_s
    predicted = guess + area * rhs(psi_s, psi_w, psi_e, guess)
    corrected = guess + area * rhs(psi_s, psi_w, psi_e, predicted)

    predictor_change = float(np.max(np.abs(predicted - guess)))
    corrector_change = float(np.max(np.abs(corrected - predicted)))
    scale = float(np.max(np.abs(corrected)))
    if (
        corrector_change > CORRECTOR_ABS_TOL
        and corrector_change > CORRECTOR_REL_TOL * scale
        and corrector_change > 0.5 * predictor_change
    ):
        raise StepFailureError(*cell.north, predictor_change, corrector_change)
    return corrected


def _reduced_evaluator(
    cell: CellGeometry, nonlinearity: Nonlinearity, forcing: np.ndarray
) -> RhsEvaluator:
    r = cell.r

    def rhs(s, w, e, n):
        return reduced_rhs((s + w + e + n) / 4, r, nonlinearity, forcing)

    return rhs


def _frame_evaluator(
    cell: CellGeometry,
    nonlinearity: Nonlinearity,
    forcing: np.ndarray,
    radial_coefficient: float,
) -> RhsEvaluator:
    r = cell.r

    def rhs(s, w, e, n):
        centre = (s + w + e + n) / 4
        stencil = CellStencil(
            phi=centre,
            l_phi=((e - s) + (n - w)) / (2 * cell.h_ub),
            lbar_phi=((w - s) + (n - e)) / (2 * cell.h_u),
            angular_laplacian=angular_derivative(centre, 2),
        )
        return null_frame_rhs(stencil, r, nonlinearity, forcing, radial_coefficient)

    return rhs


def _sample_forcing(grid: NullGrid, forcing) -> Tuple[np.ndarray, np.ndarray]:
    """Forcing at the nodes and at the cell centres."""
    if forcing is None:
        return np.zeros(grid.shape), np.zeros((grid.n_u, grid.n_ub, grid.n_theta))
    u_c = grid.u[:-1] + grid.h_u / 2
    ub_c = grid.u_bar[:-1] + grid.h_ub / 2
    nodes = forcing(grid.u[:, None, None], grid.u_bar[None, :, None], grid.theta)
    centres = forcing(u_c[:, None, None], ub_c[None, :, None], grid.theta)
    return (
        np.broadcast_to(nodes, grid.shape).astype(float),
        np.broadcast_to(centres, (grid.n_u, grid.n_ub, grid.n_theta)).astype(float),
    )


def evolve(
    grid: NullGrid,
    pulse: ConeData,
    nonlinearity: Nonlinearity,
    forcing: Optional[Callable] = None,
) -> FieldState:
    """Fill the slab from data on C_{u0} and zero data on the ingoing cone u_bar = 0.

    Cells are swept u-major, then in increasing u_bar, which respects the
    domain of dependence of every diamond.

    Args:
        grid: Slab grid
        pulse: Characteristic data; supplies forcing when it has any
        nonlinearity: N(phi)
        forcing: Source f(u, u_bar, theta) overriding the data's own forcing

    Returns:
        FieldState with frame derivatives filled in

    Raises:
        BlowUpError: at the first node where |phi| exceeds the threshold or
            stops being finite
        StepFailureError: if a corrector pass fails to contract
    """
    if forcing is None and pulse.has_forcing:
        forcing = pulse.forcing
    node_forcing, centre_forcing = _sample_forcing(grid, forcing)

    trace = np.asarray(pulse.outgoing_trace(grid), dtype=float)
    if trace.shape != (grid.n_ub + 1, grid.n_theta):
        raise ValueError(f"outgoing trace has shape {trace.shape}")
    if np.any(trace[0] != 0):
        raise ValueError("data on C_u0 must vanish where it meets the cone u_bar = 0")

    reduced = grid.is_spherical
    radius = grid.radius[:, :, None]
    field_values = np.zeros(grid.shape)
    field_values[0] = trace * radius[0] if reduced else trace

    logging.debug(
        f"evolving {nonlinearity.label} on {grid.shape} nodes, "
        f"h_u={grid.h_u:.4g}, h_ub={grid.h_ub:.4g}"
    )

    for i in range(grid.n_u):
        u_c = grid.u[i] + grid.h_u / 2
        for j in range(grid.n_ub):
            cell = CellGeometry(u_c, grid.u_bar[j] + grid.h_ub / 2, grid.h_u, grid.h_ub)
            if reduced:
                rhs = _reduced_evaluator(cell, nonlinearity, centre_forcing[i, j])
            else:
                rhs = _frame_evaluator(
                    cell, nonlinearity, centre_forcing[i, j], grid.radial_coefficient
                )
            north = step_diamond(
                field_values[i, j],
                field_values[i + 1, j],
                field_values[i, j + 1],
                cell,
                rhs,
            )
            phi_north = north / radius[i + 1, j + 1] if reduced else north
            magnitude = float(np.max(np.abs(phi_north)))
            if not np.all(np.isfinite(phi_north)) or magnitude > BLOW_UP_THRESHOLD:
                raise BlowUpError(grid.u[i + 1], grid.u_bar[j + 1], magnitude)
            field_values[i + 1, j + 1] = north

    values = field_values / radius if reduced else field_values
    logging.debug(f"evolution complete, sup|phi|={np.max(np.abs(values)):.4e}")
    return FieldState(
        grid=grid,
        values=values,
        nonlinearity=nonlinearity,
        data=pulse,
        forcing=node_forcing if forcing is not None else None,
    )


def transport_l_derivative(state: FieldState, u_bar: float) -> np.ndarray:
    """L phi on the ingoing cone Cbar_{u_bar} from the equation along it.

    With r^c L phi the equation becomes d_u (r^c L phi) = r^c S, where
    S = r^-2 Laplacian phi - c r^-1 Lbar phi - N(phi) + forcing only needs
    phi on the cone, so no difference across the pulse edge is taken. The
    start value on C_u0 comes from the data.

    Returns:
        Array of shape (n_u + 1, n_theta)
    """
    grid = state.grid
    j = grid.index_of_u_bar(u_bar)
    c = grid.radial_coefficient
    r = grid.radius[:, j][:, None]
    phi = state.values[:, j]
    lbar_phi = null_derivative(phi, grid.h_u, axis=0)
    source = (
        angular_derivative(phi, 2) / r**2
        - c / r * lbar_phi
        - state.nonlinearity.evaluate(phi)
        + state.forcing_values()[:, j]
    )
    start = state.frame.l_phi[0, j]
    if isinstance(state.data, PulseSpec):
        start = state.data.l_derivative(grid.u_bar[j], grid.theta, 1)
    weighted = r[0] ** c * start + cumulative_trapezoid(
        r**c * source, grid.u, axis=0, initial=0
    )
    return weighted / r**c


def commutator_residual(state: FieldState, pair: Multiplier) -> float:
    """max |X Omega phi - Omega X phi| over the grid for X = L or Lbar."""
    grid = state.grid
    axis, spacing = (1, grid.h_ub) if pair == Multiplier.L else (0, grid.h_u)
    x_then_omega = angular_derivative(null_derivative(state.values, spacing, axis), 1)
    omega_then_x = null_derivative(angular_derivative(state.values, 1), spacing, axis)
    return float(np.max(np.abs(x_then_omega - omega_then_x)))
