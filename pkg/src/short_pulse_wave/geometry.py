"""
Discrete double-null domain.

Nodes are (u_i, u_bar_j, theta_m) with u = (t - r)/2 and u_bar = (t + r)/2, so
r = u_bar - u and t = u + u_bar. In these coordinates L = d/du_bar and
Lbar = d/du are plain grid directions. Field arrays are always indexed
[i, j, m] (u-major, then u_bar, then theta); spherical mode keeps a length-1
theta axis.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Tuple, Union

import numpy as np

from .models import Symmetry

ArrayLike = Union[float, np.ndarray]


class Resolution(NamedTuple):
    n_u: int
    n_ub: int
    n_theta: int = 1

    def refined(self, factor: int = 2) -> "Resolution":
        """Refine the null directions; the angular count is left alone."""
        return Resolution(self.n_u * factor, self.n_ub * factor, self.n_theta)


class SphereMeasure(NamedTuple):
    total: float
    weights: np.ndarray


@dataclass(frozen=True)
class NullGrid:
    """Uniform grid on the slab [u0, u_end] x [0, delta] (x S^1 in 2D).

    Attributes:
        u0: Retarded time of the initial outgoing cone
        u_end: Last retarded time of the slab
        delta: Pulse width, also the u_bar extent of the slab
        n_u: Cells in u
        n_ub: Cells in u_bar across the pulse
        n_theta: Angular samples (1 in spherical mode)
        dim: Spatial dimension, 2 or 3
        symmetry: Spherical (3D) or full-angular (2D)
    """

    u0: float
    u_end: float
    delta: float
    n_u: int
    n_ub: int
    n_theta: int
    dim: int
    symmetry: Symmetry

    @property
    def h_u(self) -> float:
        return (self.u_end - self.u0) / self.n_u

    @property
    def h_ub(self) -> float:
        return self.delta / self.n_ub

    @property
    def resolution(self) -> Resolution:
        return Resolution(self.n_u, self.n_ub, self.n_theta)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.n_u + 1, self.n_ub + 1, self.n_theta)

    @property
    def node_count(self) -> int:
        return (self.n_u + 1) * (self.n_ub + 1) * self.n_theta

    @property
    def is_spherical(self) -> bool:
        return self.symmetry == Symmetry.SPHERICAL

    @property
    def radial_coefficient(self) -> float:
        """Coefficient c of r^-1 (L - Lbar) in the null-frame equation."""
        return (self.dim - 1) / 2

    @cached_property
    def u(self) -> np.ndarray:
        return self.u0 + self.h_u * np.arange(self.n_u + 1)

    @cached_property
    def u_bar(self) -> np.ndarray:
        return self.h_ub * np.arange(self.n_ub + 1)

    @cached_property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_theta) / self.n_theta

    @cached_property
    def radius(self) -> np.ndarray:
        """r = u_bar - u on the (u, u_bar) nodes, shape (n_u + 1, n_ub + 1)."""
        return self.u_bar[None, :] - self.u[:, None]

    @cached_property
    def time(self) -> np.ndarray:
        return self.u_bar[None, :] + self.u[:, None]

    @cached_property
    def sphere_area(self) -> np.ndarray:
        """|S_{u_bar,u}| on the (u, u_bar) nodes."""
        return sphere_area(self.radius, self.dim)

    @cached_property
    def node_weights(self) -> np.ndarray:
        """Per-node angular quadrature weights, broadcastable to field arrays."""
        return (self.sphere_area / self.n_theta)[:, :, None]

    def index_of_u(self, u: float) -> int:
        i = int(round((u - self.u0) / self.h_u))
        if not 0 <= i <= self.n_u or not math.isclose(
            self.u[i], u, rel_tol=1e-9, abs_tol=1e-12
        ):
            raise ValueError(f"u={u} is not a node of the grid")
        return i

    def index_of_u_bar(self, u_bar: float) -> int:
        j = int(round(u_bar / self.h_ub))
        if not 0 <= j <= self.n_ub or not math.isclose(
            self.u_bar[j], u_bar, rel_tol=1e-9, abs_tol=1e-12
        ):
            raise ValueError(f"u_bar={u_bar} is not a node of the grid")
        return j

    def with_resolution(self, resolution: Resolution) -> "NullGrid":
        return build_grid(
            self.u0, self.u_end, self.delta, resolution, self.dim, self.symmetry
        )


@dataclass
class FrameSample:
    """Field and its null-frame derivatives, arrays indexed [i, j, m].

    slashed_nabla_phi is the angular gradient r^-1 Omega phi, so that
    r * slashed_nabla_phi == omega_phi at every node.
    """

    phi: np.ndarray
    l_phi: np.ndarray
    lbar_phi: np.ndarray
    omega_phi: np.ndarray
    slashed_nabla_phi: np.ndarray


def build_grid(
    u0: float,
    u_end: float,
    delta: float,
    resolution: Resolution,
    dim: int = 3,
    symmetry: Symmetry = Symmetry.SPHERICAL,
) -> NullGrid:
    """Build the slab grid.

    Args:
        u0: Retarded time of the initial cone C_{u0}
        u_end: Final retarded time, at most -1 so that r stays away from 0
        delta: Pulse width
        resolution: Cell counts (n_u, n_ub, n_theta)
        dim: Spatial dimension
        symmetry: SPHERICAL for dim 3, FULL_ANGULAR for dim 2

    Returns:
        NullGrid
    """
    n_u, n_ub, n_theta = resolution
    if u_end > -1:
        raise ValueError(f"u_end={u_end} must be <= -1 to keep r bounded below")
    if not u0 < u_end:
        raise ValueError(f"u0={u0} must be smaller than u_end={u_end}")
    if delta <= 0:
        raise ValueError(f"delta={delta} must be positive")
    if dim not in (2, 3):
        raise ValueError(f"dim={dim} must be 2 or 3")
    if dim == 3 and symmetry != Symmetry.SPHERICAL:
        raise ValueError("full-angular evolution is only available in dim 2")
    if dim == 2 and symmetry != Symmetry.FULL_ANGULAR:
        raise ValueError("spherical symmetry is only available in dim 3")
    if n_u < 2 or n_ub < 2:
        raise ValueError(f"n_u={n_u} and n_ub={n_ub} must both be >= 2")
    if symmetry == Symmetry.SPHERICAL and n_theta != 1:
        raise ValueError(f"n_theta={n_theta} must be 1 in spherical mode")
    if symmetry == Symmetry.FULL_ANGULAR and n_theta < 2:
        raise ValueError(f"n_theta={n_theta} must be >= 2 in full-angular mode")

    return NullGrid(
        u0=float(u0),
        u_end=float(u_end),
        delta=float(delta),
        n_u=int(n_u),
        n_ub=int(n_ub),
        n_theta=int(n_theta),
        dim=int(dim),
        symmetry=symmetry,
    )


def to_time_radius(u: ArrayLike, u_bar: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    return u + u_bar, u_bar - u


def to_null(t: ArrayLike, r: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    return 0.5 * (t - r), 0.5 * (t + r)


def sphere_area(r: ArrayLike, dim: int) -> ArrayLike:
    return 4 * np.pi * r**2 if dim == 3 else 2 * np.pi * r


def sphere_measure(grid: NullGrid, u: float, u_bar: float) -> SphereMeasure:
    """Measure of S_{u_bar,u} and its per-node trapezoid weights in theta."""
    eps = 1e-12
    if not (grid.u0 - eps <= u <= grid.u_end + eps):
        raise ValueError(f"u={u} outside [{grid.u0}, {grid.u_end}]")
    if not (-eps <= u_bar <= grid.delta + eps):
        raise ValueError(f"u_bar={u_bar} outside [0, {grid.delta}]")

    total = float(sphere_area(u_bar - u, grid.dim))
    return SphereMeasure(total, np.full(grid.n_theta, total / grid.n_theta))


def angular_derivative(values: np.ndarray, order: int = 1) -> np.ndarray:
    """Spectral d^order/dtheta^order along the last axis (periodic in theta)."""
    n = values.shape[-1]
    if order == 0:
        return values.copy()
    if n == 1:
        return np.zeros_like(values)

    k = np.fft.rfftfreq(n, d=1.0 / n)
    multiplier = (1j * k) ** order
    if n % 2 == 0 and order % 2 == 1:
        # Nyquist mode has no odd derivative on the grid
        multiplier[-1] = 0
    return np.fft.irfft(multiplier * np.fft.rfft(values, axis=-1), n=n, axis=-1)


def null_derivative(values: np.ndarray, spacing: float, axis: int) -> np.ndarray:
    """Second-order difference along a null grid direction (axis 0: Lbar, 1: L)."""
    return np.gradient(values, spacing, axis=axis, edge_order=2)


def frame_sample(grid: NullGrid, phi: np.ndarray) -> FrameSample:
    omega_phi = angular_derivative(phi, 1)
    return FrameSample(
        phi=phi,
        l_phi=null_derivative(phi, grid.h_ub, axis=1),
        lbar_phi=null_derivative(phi, grid.h_u, axis=0),
        omega_phi=omega_phi,
        slashed_nabla_phi=omega_phi / grid.radius[:, :, None],
    )
