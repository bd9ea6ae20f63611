# Run configuration: dataclass, key-value file loader and builders for grids,
# pulses and nonlinearities

import dataclasses
import logging
import pprint
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

from .evolve import Nonlinearity
from .geometry import NullGrid, Resolution, build_grid
from .models import (
    Experiment,
    NonlinearityKind,
    Oracle,
    Sign,
    Symmetry,
)
from .profiles import get_profile
from .pulse_data import PulseSpec

FITTING_EXPERIMENTS = (
    Experiment.DELTA_SWEEP,
    Experiment.PROP61,
    Experiment.SOBOLEV_AUDIT,
)


@dataclass
class RunConfig:
    """Configuration of one experiment.

    Attributes:
        u0: Retarded time of the initial cone
        u_end: Final retarded time (at most -1)
        delta: Pulse width of a single run
        n_u: Cells in u, fixed across a sweep so h_u does not change
        n_ub: Cells in u_bar, i.e. cells per pulse width
        n_theta: Angular nodes (1 in spherical mode)
        dim: Spatial dimension, 3 (spherical) or 2 (full angular)
        symmetry: Symmetry of the evolution
        profile: Registered pulse profile name
        amplitude: Pulse amplitude a
        angular_mode: m of the cos(m theta) factor (dim 2 only)
        nonlinearity: LINEAR, POWER or EXP_FOCUSING
        power: Odd exponent k of the power nonlinearity
        sign: DEFOCUSING or FOCUSING power nonlinearity
        experiment: Which experiment the `run` entry point performs
        delta_list: Strictly decreasing pulse widths of a sweep
        max_order: Highest E/F family index (3 in dim 3, 2 in dim 2 if unset)
        headroom: Allowed max/min spread of the ratio series q/delta^p
        slope_tolerance: Allowed shortfall of the slope below p for upper bounds
        equality_tolerance: Allowed |slope - p| for closed-form data quantities
        refinements: Number of resolutions in a convergence study
        oracle: Exact solution of the convergence study
        energy_target: E0, minimal C_u0 flux energy of the contrast run
        horizon: T0, sets u0 = -T0 for the contrast run
        ode_amplitude: phi(0) of the ODE baseline
        jobs: Worker processes for sweeps
        out_dir: Directory receiving the reports
    """

    u0: float = -4.0
    u_end: float = -1.0
    delta: float = 0.01
    n_u: int = 300
    n_ub: int = 64
    n_theta: int = 1
    dim: int = 3
    symmetry: Symmetry = Symmetry.SPHERICAL
    profile: str = "sin4"
    amplitude: float = 1.0
    angular_mode: int = 0
    nonlinearity: NonlinearityKind = NonlinearityKind.POWER
    power: int = 3
    sign: Sign = Sign.DEFOCUSING
    experiment: Experiment = Experiment.SINGLE_RUN
    delta_list: List[float] = field(default_factory=lambda: [0.04, 0.02, 0.01, 0.005])
    max_order: Optional[int] = None
    headroom: float = 3.0
    slope_tolerance: float = 0.1
    equality_tolerance: float = 0.05
    refinements: int = 3
    oracle: Oracle = Oracle.DALEMBERT
    energy_target: Optional[float] = None
    horizon: Optional[float] = None
    ode_amplitude: float = 1.0
    jobs: int = 1
    out_dir: str = "results"

    @property
    def resolved_max_order(self) -> int:
        if self.max_order is not None:
            return self.max_order
        return 3 if self.dim == 3 else 2

    @property
    def resolution(self) -> Resolution:
        return Resolution(self.n_u, self.n_ub, self.n_theta)

    def validate(self) -> "RunConfig":
        """Check the configuration, raising ValueError naming the field."""
        deltas = list(self.delta_list)
        if any(b >= a for a, b in zip(deltas, deltas[1:])):
            raise ValueError(f"delta_list={deltas} must be strictly decreasing")
        if self.experiment in FITTING_EXPERIMENTS and len(deltas) < 3:
            raise ValueError(
                f"delta_list needs at least 3 entries for {self.experiment.value}"
            )
        if self.headroom < 1:
            raise ValueError(f"headroom={self.headroom} must be >= 1")
        if self.refinements < 3:
            raise ValueError(f"refinements={self.refinements} must be >= 3")
        if self.jobs < 1:
            raise ValueError(f"jobs={self.jobs} must be >= 1")
        if self.amplitude < 0:
            raise ValueError(f"amplitude={self.amplitude} must be non-negative")
        if self.dim == 3 and self.angular_mode != 0:
            raise ValueError(
                f"angular_mode={self.angular_mode} must be 0 in spherical mode"
            )
        if self.resolved_max_order < 1:
            raise ValueError(f"max_order={self.max_order} must be >= 1")
        if self.horizon is not None and self.horizon <= -self.u_end:
            raise ValueError(
                f"horizon={self.horizon} must exceed |u_end|={abs(self.u_end)}"
            )
        if self.energy_target is not None and self.energy_target < 0:
            raise ValueError(f"energy_target={self.energy_target} must be >= 0")
        # Grid and data invariants surface as ValueError from the builders
        for delta in {self.delta, *deltas}:
            self.grid_for(delta)
            self.pulse_for(delta)
        self.build_nonlinearity()
        return self

    def grid_for(
        self, delta: float, resolution: Optional[Resolution] = None, u0=None
    ) -> NullGrid:
        return build_grid(
            self.u0 if u0 is None else u0,
            self.u_end,
            delta,
            resolution or self.resolution,
            self.dim,
            self.symmetry,
        )

    def pulse_for(self, delta: float, amplitude: Optional[float] = None) -> PulseSpec:
        return PulseSpec(
            profile=get_profile(self.profile),
            amplitude=self.amplitude if amplitude is None else amplitude,
            delta=delta,
            angular_mode=self.angular_mode,
        )

    def build_nonlinearity(self) -> Nonlinearity:
        return Nonlinearity(self.nonlinearity, self.power, self.sign)

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Copy with every non-None override applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **changes)


def _optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse_optional(raw: str):
        return None if raw.lower() in ("none", "") else parse(raw)

    return parse_optional


def _float_list(raw: str) -> List[float]:
    return [float(part) for part in raw.split(",") if part.strip()]


FIELD_PARSERS: Dict[str, Callable[[str], Any]] = {
    "u0": float,
    "u_end": float,
    "delta": float,
    "n_u": int,
    "n_ub": int,
    "n_theta": int,
    "dim": int,
    "symmetry": Symmetry,
    "profile": str,
    "amplitude": float,
    "angular_mode": int,
    "nonlinearity": NonlinearityKind,
    "power": int,
    "sign": Sign,
    "experiment": Experiment,
    "delta_list": _float_list,
    "max_order": _optional(int),
    "headroom": float,
    "slope_tolerance": float,
    "equality_tolerance": float,
    "refinements": int,
    "oracle": Oracle,
    "energy_target": _optional(float),
    "horizon": _optional(float),
    "ode_amplitude": float,
    "jobs": int,
    "out_dir": str,
}


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """Parse `key = value` lines into RunConfig keyword arguments.

    Lines starting with `#` and blank lines are skipped, list values are
    comma-separated.

    Raises:
        ValueError: on malformed lines, unknown keys or unparsable values,
            with the source and line number in the message
    """
    values: Dict[str, Any] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{number}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in FIELD_PARSERS:
            raise ValueError(f"{source}:{number}: unknown key {key!r}")
        try:
            values[key] = FIELD_PARSERS[key](raw)
        except ValueError as e:
            raise ValueError(f"{source}:{number}: bad value for {key}: {e}") from e
    return values


def load_run_config(path: Union[str, Path], **overrides: Any) -> RunConfig:
    """Load a config file; non-None overrides (CLI flags) take precedence."""
    path = Path(path)
    values = parse_config_text(path.read_text(), source=str(path))
    config = RunConfig(**values).with_overrides(**overrides)
    logging.debug(f"Loaded run config from {path}:")
    logging.debug(pprint.pformat(dataclasses.asdict(config)))
    return config
