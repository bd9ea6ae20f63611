from enum import Enum

# |phi| above this (or non-finite) aborts an evolution
BLOW_UP_THRESHOLD = 1e8

# Measured values below this count as exact zeros
ZERO_FLOOR = 1e-13


class Symmetry(Enum):
    SPHERICAL = "spherical"
    FULL_ANGULAR = "full-angular"


class NonlinearityKind(Enum):
    LINEAR = "linear"
    POWER = "power"
    EXP_FOCUSING = "exp-focusing"


class Sign(Enum):
    DEFOCUSING = "defocusing"
    FOCUSING = "focusing"


class Multiplier(Enum):
    """Multiplier vector field of the energy identity."""

    L = "L"
    LBAR = "Lbar"


class Experiment(Enum):
    SINGLE_RUN = "single-run"
    DELTA_SWEEP = "delta-sweep"
    CONVERGENCE = "convergence"
    PROP61 = "prop61"
    FOCUSING_CONTRAST = "focusing-contrast"
    SOBOLEV_AUDIT = "sobolev-audit"


class Oracle(Enum):
    DALEMBERT = "dalembert"
    MANUFACTURED = "manufactured"


class BoundKind(Enum):
    # q <= C delta^p
    UPPER = "upper"
    # log-log slope equals p (closed-form data quantities)
    EQUALITY = "equality"


class Verdict(Enum):
    BOUND_RESPECTED = "bound-respected"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"
    STRUCTURALLY_ZERO = "structurally-zero"
    FAILED = "failed"

    @property
    def passed(self) -> bool:
        return self not in (Verdict.VIOLATED, Verdict.FAILED)
