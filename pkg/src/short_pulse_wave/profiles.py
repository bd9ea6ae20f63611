import math
from abc import ABC, abstractmethod
from typing import Dict, Type

import numpy as np


class PulseProfile(ABC):
    """Interface for the pulse shape psi_0(s), supported in 0 < s < 1."""

    name: str = ""

    @abstractmethod
    def value(self, s: np.ndarray) -> np.ndarray:
        """Evaluate the profile.

        Args:
            s: Rescaled advanced time u_bar / delta

        Returns:
            Profile values, exactly 0 for s <= 0 and s >= 1
        """
        pass

    def derivative(self, s: np.ndarray, order: int) -> np.ndarray:
        """Closed-form d^order psi_0 / ds^order.

        Raises:
            NotImplementedError: if the profile has no closed form for this order
        """
        raise NotImplementedError(f"{self.name}: no closed-form derivative {order}")

    def max_value(self) -> float:
        s = np.linspace(0, 1, 20001)
        return float(np.max(np.abs(self.value(s))))


def _support(s: np.ndarray) -> np.ndarray:
    return (s > 0) & (s < 1)


class SinPowerProfile(PulseProfile):
    """psi_0(s) = sin^4(pi s), C^3 across the support boundary.

    Uses sin^4 x = (3 - 4 cos 2x + cos 4x) / 8, which gives every derivative
    in closed form.
    """

    name = "sin4"

    def value(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(_support(s), np.sin(np.pi * s) ** 4, 0.0)

    def derivative(self, s, order):
        s = np.asarray(s, dtype=float)
        if order == 0:
            return self.value(s)
        shift = order * np.pi / 2
        d = (
            -4 * (2 * np.pi) ** order * np.cos(2 * np.pi * s + shift)
            + (4 * np.pi) ** order * np.cos(4 * np.pi * s + shift)
        ) / 8
        return np.where(_support(s), d, 0.0)

    def max_value(self):
        return 1.0

    @staticmethod
    def max_first_derivative() -> float:
        """sup |psi_0'| = 3 sqrt(3) pi / 4, attained where tan^2(pi s) = 3."""
        return 3 * math.sqrt(3) * math.pi / 4


class SmoothBumpProfile(PulseProfile):
    """psi_0(s) = exp(4 - 1/(s(1-s))), C-infinity, normalized to max 1."""

    name = "bump"

    def value(self, s):
        s = np.asarray(s, dtype=float)
        inside = _support(s)
        g = np.where(inside, s * (1 - s), 1.0)
        return np.where(inside, np.exp(4 - 1 / g), 0.0)

    def derivative(self, s, order):
        s = np.asarray(s, dtype=float)
        inside = _support(s)
        g = np.where(inside, s * (1 - s), 1.0)
        dg = 1 - 2 * s
        psi = self.value(s)
        if order == 0:
            return psi
        if order == 1:
            return np.where(inside, psi * dg / g**2, 0.0)
        if order == 2:
            # g'' = -2
            factor = dg**2 / g**4 - 2 / g**2 - 2 * dg**2 / g**3
            return np.where(inside, psi * factor, 0.0)
        return super().derivative(s, order)

    def max_value(self):
        return 1.0


PROFILES: Dict[str, Type[PulseProfile]] = {
    SinPowerProfile.name: SinPowerProfile,
    SmoothBumpProfile.name: SmoothBumpProfile,
}


def get_profile(name: str) -> PulseProfile:
    if name not in PROFILES:
        raise ValueError(
            f"Unknown profile {name!r}, expected one of {sorted(PROFILES)}"
        )
    return PROFILES[name]()
