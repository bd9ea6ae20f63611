"""
Experiment drivers: delta sweeps with scaling fits, the smallness check on
the last ingoing cone, convergence studies, the focusing contrast run and the
Sobolev and energy audits.

Every sweep entry is an independent evolution, so entries can run in worker
processes; results are always aggregated in delta order.
"""

import dataclasses
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import quad, solve_ivp

from .checkpoint import save_checkpoint
from .energy import conserved_energy_flux, energy_identity_audit, initial_cone_state
from .evolve import (
    BlowUpError,
    FieldState,
    Nonlinearity,
    StepFailureError,
    commutator_residual,
    evolve,
    transport_l_derivative,
)
from .geometry import Resolution, angular_derivative, build_grid, null_derivative
from .manufactured import DalembertSolution, ExactSolution, ManufacturedSolution
from .models import (
    BLOW_UP_THRESHOLD,
    ZERO_FLOOR,
    BoundKind,
    Experiment,
    Multiplier,
    NonlinearityKind,
    Oracle,
    Sign,
    Symmetry,
    Verdict,
)
from .norms import (
    LEMMAS,
    assemble_norm_report,
    ingoing_cone_norms,
    outgoing_cone_norms,
    sobolev_check,
)
from .pulse_data import verify_data_bounds
from .report import CheckRow, ExperimentResult, delta_label
from .run_config import RunConfig

# Lowest acceptable observed convergence order
MIN_ORDER = 1.5

# Energy ledgers must balance to this fraction of their largest term
LEDGER_TOLERANCE = 0.01

# Allowed relative change of a Sobolev ratio under 2x refinement
REFINEMENT_TOLERANCE = 0.1

# Column values below this fraction of the slab maximum are scheme round-off
COLUMN_ROUNDOFF = 1e-10

# Manufactured-solution grids: u_bar in [0, 1] with a coarse base resolution
MANUFACTURED_DELTA = 1.0
MANUFACTURED_BASE = Resolution(16, 16, 16)

# phi(0) beyond which the exponential ODE is taken to have blown up
EXP_ESCAPE = 5.0


class TrackedQuantity(NamedTuple):
    name: str
    exponent: float
    kind: BoundKind = BoundKind.UPPER


# Maxima over the slab of full-cone norms, bounded by C delta^p
EVOLVED_QUANTITIES = [
    TrackedQuantity("L_phi_C_u", 0.0),
    TrackedQuantity("Omega_phi_C_u", 0.5),
    TrackedQuantity("Omega_phi_Cbar", 0.0),
    TrackedQuantity("Lbar_phi_Cbar", 0.5),
    TrackedQuantity("L2_phi_C_u", -1.0),
    TrackedQuantity("Lbar2_phi_Cbar", 0.25),
    TrackedQuantity("phi_sup", 0.25),
]

# Closed-form data norms on C_u0, whose slopes must match exactly
DATA_QUANTITIES = [
    TrackedQuantity("sup_L_phi", -0.5, BoundKind.EQUALITY),
    TrackedQuantity("sup_L2_phi", -1.5, BoundKind.EQUALITY),
    TrackedQuantity("L2_L2_phi", -1.0, BoundKind.EQUALITY),
    TrackedQuantity("L2_L_phi", 0.0, BoundKind.EQUALITY),
]

# Sups on the last ingoing cone u_bar = delta
PROP61_QUANTITIES = [
    TrackedQuantity("L_phi_sup_Cbar_delta", 0.25),
    TrackedQuantity("phi_sup_Cbar_delta", 0.25),
    TrackedQuantity("Omega_phi_sup_Cbar_delta", 0.25),
    TrackedQuantity("Lbar_phi_sup_Cbar_delta", 1.25),
]


@dataclass
class ScalingFit:
    """Measured series of one quantity against the pulse width.

    Attributes:
        quantity: Name of the measured norm
        exponent: p in q <= C delta^p (or q ~ delta^p for EQUALITY)
        kind: UPPER bound or EQUALITY of exponents
        deltas: Pulse widths in configured order
        values: q(delta)
        ratios: q(delta) / delta^p
        slope: Least-squares log-log slope over the non-zero samples
        verdict: Outcome of the fit
        note: Reason for the verdict where it is not obvious
    """

    quantity: str
    exponent: float
    kind: BoundKind
    deltas: List[float]
    values: List[float]
    ratios: List[float]
    slope: float = math.nan
    verdict: Verdict = Verdict.INCONCLUSIVE
    note: str = ""

    def _nonzero_ratios(self) -> np.ndarray:
        ratios = np.asarray(self.ratios, dtype=float)
        values = np.abs(np.asarray(self.values, dtype=float))
        return ratios[np.isfinite(ratios) & (values > ZERO_FLOOR)]

    @property
    def ratio_min(self) -> float:
        ratios = self._nonzero_ratios()
        return float(np.min(ratios)) if ratios.size else math.nan

    @property
    def ratio_max(self) -> float:
        ratios = self._nonzero_ratios()
        return float(np.max(ratios)) if ratios.size else math.nan

    def to_row(self) -> Dict[str, object]:
        row = {
            "quantity": self.quantity,
            "exponent": float(self.exponent),
            "kind": self.kind.value,
            "slope": float(self.slope),
            "ratio_min": self.ratio_min,
            "ratio_max": self.ratio_max,
            "verdict": self.verdict.value,
            "note": self.note,
        }
        for delta, value in zip(self.deltas, self.values):
            row[f"q@{delta_label(delta)}"] = float(value)
        for delta, ratio in zip(self.deltas, self.ratios):
            row[f"ratio@{delta_label(delta)}"] = float(ratio)
        return row


def fit_scaling(
    quantity: str,
    exponent: float,
    deltas: Sequence[float],
    values: Sequence[float],
    kind: BoundKind = BoundKind.UPPER,
    headroom: float = 3.0,
    slope_tolerance: float = 0.1,
    equality_tolerance: float = 0.05,
    failure: Optional[str] = None,
) -> ScalingFit:
    """Fit log q against log delta and decide the verdict.

    UPPER rows respect the bound iff max ratio / min ratio of q/delta^p is at
    most `headroom` over the sweep and the slope is at least p - slope_tolerance.
    EQUALITY rows pass iff |slope - p| <= equality_tolerance. Samples below
    ZERO_FLOOR count as zero and are left out of the fit.

    Args:
        quantity: Name of the quantity
        exponent: p
        deltas: Pulse widths
        values: Measured q(delta)
        kind: UPPER or EQUALITY
        headroom: Allowed max/min spread of the ratio series
        slope_tolerance: Allowed shortfall of the slope for UPPER rows
        equality_tolerance: Allowed slope error for EQUALITY rows
        failure: Solver failure message; the row is marked failed

    Returns:
        ScalingFit
    """
    deltas_arr = np.asarray(deltas, dtype=float)
    values_arr = np.asarray(values, dtype=float)
    assert deltas_arr.shape == values_arr.shape, (
        f"{quantity}: {deltas_arr.size} deltas but {values_arr.size} values"
    )
    with np.errstate(invalid="ignore"):
        ratios = values_arr / deltas_arr**exponent
    fit = ScalingFit(
        quantity=quantity,
        exponent=exponent,
        kind=kind,
        deltas=[float(d) for d in deltas_arr],
        values=[float(v) for v in values_arr],
        ratios=[float(r) for r in ratios],
    )

    if failure is not None or not np.all(np.isfinite(values_arr)):
        fit.verdict = Verdict.FAILED
        fit.note = failure or "non-finite measurement"
        return fit

    nonzero = np.abs(values_arr) > ZERO_FLOOR
    if not nonzero.any():
        fit.verdict = Verdict.STRUCTURALLY_ZERO
        return fit
    if nonzero.sum() < 3:
        fit.verdict = Verdict.INCONCLUSIVE
        fit.note = f"only {int(nonzero.sum())} non-zero samples"
        logging.warning(f"{quantity}: scaling fit inconclusive ({fit.note})")
        return fit

    fit.slope = float(
        np.polyfit(np.log(deltas_arr[nonzero]), np.log(np.abs(values_arr[nonzero])), 1)[
            0
        ]
    )
    notes = []
    if not nonzero.all():
        notes.append(f"{int((~nonzero).sum())} zero samples excluded")

    if kind == BoundKind.EQUALITY:
        passed = abs(fit.slope - exponent) <= equality_tolerance
        if not passed:
            notes.append(f"slope differs from {exponent:g}")
    else:
        magnitudes = np.abs(ratios[nonzero])
        spread = float(magnitudes.max() / magnitudes.min())
        passed = spread <= headroom and fit.slope >= exponent - slope_tolerance
        if spread > headroom:
            notes.append(f"ratio spread {spread:.3g}")
        if fit.slope < exponent - slope_tolerance:
            notes.append(f"slope below {exponent - slope_tolerance:g}")
    fit.verdict = Verdict.BOUND_RESPECTED if passed else Verdict.VIOLATED
    fit.note = "; ".join(notes)
    return fit


def run_parameters(config: RunConfig) -> Dict[str, object]:
    parameters = {
        f.name: getattr(config, f.name)
        for f in dataclasses.fields(config)
        if f.name != "out_dir"
    }
    parameters["max_order"] = config.resolved_max_order
    return parameters


def _map_deltas(config: RunConfig, measure: Callable, deltas: Sequence[float]):
    """Apply measure(config, delta) to every delta, in delta order."""
    worker = partial(measure, config)
    if config.jobs > 1 and len(deltas) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(worker, deltas))
    return [worker(delta) for delta in deltas]


def _evolve_or_failure(config: RunConfig, delta: float, resolution=None):
    """(state, None) or (None, failure message) for one pulse width."""
    grid = config.grid_for(delta, resolution)
    pulse = config.pulse_for(delta)
    try:
        return evolve(grid, pulse, config.build_nonlinearity()), None
    except (BlowUpError, StepFailureError) as e:
        logging.warning(f"delta={delta:g}: {e}")
        return None, str(e)


def evolved_quantities(state: FieldState) -> Dict[str, float]:
    """Tracked norms of an evolved field, maximized over the slab."""

    def outgoing(quantity):
        return float(np.max(outgoing_cone_norms(state, quantity)[:, -1]))

    def ingoing(quantity):
        return float(np.max(ingoing_cone_norms(state, quantity)[-1, :]))

    return {
        "L_phi_C_u": outgoing("L"),
        "Omega_phi_C_u": outgoing("Omega"),
        "Omega_phi_Cbar": ingoing("Omega"),
        "Lbar_phi_Cbar": ingoing("Lbar"),
        "L2_phi_C_u": outgoing("L2"),
        "Lbar2_phi_Cbar": ingoing("Lbar2"),
        "phi_sup": float(np.max(np.abs(state.values))),
    }


def last_ingoing_cone_sups(state: FieldState) -> Dict[str, float]:
    """Sups of L phi, phi, Omega phi and Lbar phi on u_bar = delta.

    L phi comes from transport along the cone rather than a difference across
    the trailing edge of the pulse. Values at round-off level relative to the
    same quantity on the whole slab are reported as zero.
    """
    grid = state.grid
    column = state.values[:, -1]
    columns = {
        "L_phi_sup_Cbar_delta": (
            transport_l_derivative(state, grid.u_bar[-1]),
            state.frame.l_phi,
        ),
        "phi_sup_Cbar_delta": (column, state.values),
        "Omega_phi_sup_Cbar_delta": (
            angular_derivative(column, 1),
            state.frame.omega_phi,
        ),
        "Lbar_phi_sup_Cbar_delta": (
            null_derivative(column, grid.h_u, axis=0),
            state.frame.lbar_phi,
        ),
    }
    sups = {}
    for name, (on_cone, on_slab) in columns.items():
        value = float(np.max(np.abs(on_cone)))
        scale = float(np.max(np.abs(on_slab)))
        sups[name] = 0.0 if value <= COLUMN_ROUNDOFF * scale else value
    return sups


@dataclass
class SweepSample:
    """Everything measured for one pulse width of a sweep."""

    delta: float
    data_values: Dict[str, float]
    evolved_values: Dict[str, float] = field(default_factory=dict)
    cone_values: Dict[str, float] = field(default_factory=dict)
    norms: Optional[pd.DataFrame] = None
    failure: Optional[str] = None


def measure_sweep_entry(config: RunConfig, delta: float) -> SweepSample:
    grid = config.grid_for(delta)
    pulse = config.pulse_for(delta)
    nonlinearity = config.build_nonlinearity()
    logging.info(f"delta={delta:g}: evolving on {grid.shape} nodes")

    bounds = verify_data_bounds(pulse, grid, nonlinearity)
    sample = SweepSample(
        delta=delta,
        data_values={q.name: bounds.get(q.name).value for q in DATA_QUANTITIES},
    )
    state, sample.failure = _evolve_or_failure(config, delta)
    if state is None:
        return sample

    sample.evolved_values = evolved_quantities(state)
    sample.cone_values = last_ingoing_cone_sups(state)
    sample.norms = assemble_norm_report(state, config.resolved_max_order).table
    logging.debug(
        f"delta={delta:g}: sup|phi|={sample.evolved_values['phi_sup']:.4e}, "
        f"max M={sample.norms['M'].max():.4e}"
    )
    return sample


def _fits(
    config: RunConfig,
    samples: List[SweepSample],
    quantities: List[TrackedQuantity],
    source: str,
) -> List[ScalingFit]:
    deltas = [s.delta for s in samples]
    failures = [
        f"delta={delta_label(s.delta)}: {s.failure}" for s in samples if s.failure
    ]
    fits = []
    for quantity in quantities:
        if source != "data_values" and failures:
            values = [getattr(s, source).get(quantity.name, math.nan) for s in samples]
            failure = "; ".join(failures)
        else:
            values = [getattr(s, source)[quantity.name] for s in samples]
            failure = None
        fits.append(
            fit_scaling(
                quantity.name,
                quantity.exponent,
                deltas,
                values,
                kind=quantity.kind,
                headroom=config.headroom,
                slope_tolerance=config.slope_tolerance,
                equality_tolerance=config.equality_tolerance,
                failure=failure,
            )
        )
    return fits


def _log_verdicts(name: str, fits: List[ScalingFit]) -> None:
    for fit in fits:
        logging.info(
            f"{name}: {fit.quantity:<26} p={fit.exponent:>5g} "
            f"slope={fit.slope:>8.4f} {fit.verdict.value}"
        )


def delta_sweep(config: RunConfig) -> ExperimentResult:
    """Evolve every delta of the sweep and fit the tracked quantities.

    Args:
        config: Run configuration, delta_list with at least 3 entries

    Returns:
        ExperimentResult with one fit per evolved and per data quantity and
        the norm table of every run
    """
    config.validate()
    logging.info(f"delta sweep over {config.delta_list}")
    samples = _map_deltas(config, measure_sweep_entry, config.delta_list)

    fits = _fits(config, samples, EVOLVED_QUANTITIES, "evolved_values")
    fits += _fits(config, samples, DATA_QUANTITIES, "data_values")
    _log_verdicts("sweep", fits)

    norm_tables = [s.norms for s in samples if s.norms is not None]
    return ExperimentResult(
        experiment=Experiment.DELTA_SWEEP,
        parameters=run_parameters(config),
        fits=fits,
        norms=pd.concat(norm_tables, ignore_index=True) if norm_tables else None,
    )


def prop61_check(config: RunConfig) -> ExperimentResult:
    """Sup norms on the last ingoing cone u_bar = delta across the sweep."""
    config.validate()
    logging.info(f"last ingoing cone check over {config.delta_list}")
    samples = _map_deltas(config, measure_sweep_entry, config.delta_list)
    fits = _fits(config, samples, PROP61_QUANTITIES, "cone_values")
    _log_verdicts("prop61", fits)
    return ExperimentResult(
        experiment=Experiment.PROP61,
        parameters=run_parameters(config),
        fits=fits,
    )


def observed_order(spacings: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log error against log h."""
    return float(np.polyfit(np.log(spacings), np.log(errors), 1)[0])


def convergence_study(config: RunConfig) -> ExperimentResult:
    """Errors against a closed-form solution over dyadic refinements.

    The d'Alembert oracle is the linear spherical 3D solution of the
    configured pulse; the manufactured oracle is
    sin(u) sin(u_bar) cos(m theta) on a 2D grid with u_bar in [0, 1].
    The diamond step is exact for the spherical linear solution, so the
    d'Alembert order is that of the L phi difference diagnostic; the
    manufactured order is that of the scheme.

    Returns:
        ExperimentResult with the order table and one order check
    """
    config.validate()
    if config.oracle == Oracle.DALEMBERT:
        if config.dim != 3:
            raise ValueError("the d'Alembert oracle needs dim = 3")
        nonlinearity = Nonlinearity(NonlinearityKind.LINEAR)
        pulse = config.pulse_for(config.delta)
        exact: ExactSolution = DalembertSolution(pulse)
        data = pulse
        delta, base = config.delta, config.resolution
        dim, symmetry = 3, Symmetry.SPHERICAL
    else:
        nonlinearity = config.build_nonlinearity()
        mode = config.angular_mode or 2
        exact = data = ManufacturedSolution(
            dim=2, angular_mode=mode, nonlinearity=nonlinearity
        )
        delta, base = MANUFACTURED_DELTA, MANUFACTURED_BASE
        dim, symmetry = 2, Symmetry.FULL_ANGULAR

    rows = []
    resolution = base
    for level in range(config.refinements):
        grid = build_grid(config.u0, config.u_end, delta, resolution, dim, symmetry)
        state = evolve(grid, data, nonlinearity)
        error = exact.error(state)
        rows.append(
            {
                "n_u": resolution.n_u,
                "n_ub": resolution.n_ub,
                "n_theta": resolution.n_theta,
                "h_u": grid.h_u,
                "h_ub": grid.h_ub,
                "error": error,
            }
        )
        logging.info(
            f"convergence level {level}: {grid.shape} nodes, error={error:.4e}"
        )
        resolution = resolution.refined(2)

    table = pd.DataFrame(rows)
    errors = table["error"].to_numpy()
    local = [math.nan] + [
        float(np.log2(a / b)) if a > 0 and b > 0 else math.nan
        for a, b in zip(errors[:-1], errors[1:])
    ]
    table["order"] = local

    name = f"order-{config.oracle.value}"
    if np.all(errors <= ZERO_FLOOR):
        check = CheckRow(name, 0.0, 2.0, Verdict.STRUCTURALLY_ZERO, "exact solution")
    elif np.any(errors <= ZERO_FLOOR):
        check = CheckRow(name, math.nan, 2.0, Verdict.INCONCLUSIVE, "zero errors")
    else:
        order = observed_order(table["h_u"], errors)
        verdict = Verdict.BOUND_RESPECTED if order >= MIN_ORDER else Verdict.FAILED
        check = CheckRow(name, order, 2.0, verdict)
    logging.info(f"{name}: {check.value:.4f} {check.verdict.value}")

    return ExperimentResult(
        experiment=Experiment.CONVERGENCE,
        parameters=run_parameters(config),
        checks=[check],
        tables={"convergence": table},
    )


class OdeBlowUp(NamedTuple):
    time: float
    value: float
    blew_up: bool


def ode_blow_up(
    nonlinearity: Nonlinearity, amplitude: float, t_max: float
) -> OdeBlowUp:
    """Integrate phi'' = -N(phi), phi(0) = amplitude, phi'(0) = 0.

    LSODA switches to a stiff method as the solution steepens; the terminal
    event stops at |phi| = BLOW_UP_THRESHOLD (EXP_ESCAPE for the
    exponential nonlinearity, whose right-hand side overflows earlier).
    """
    level = (
        EXP_ESCAPE
        if nonlinearity.kind == NonlinearityKind.EXP_FOCUSING
        else BLOW_UP_THRESHOLD
    )

    def rhs(t, y):
        with np.errstate(over="ignore"):
            return [y[1], float(nonlinearity.homogeneous_acceleration(y[0]))]

    def escape(t, y):
        return abs(y[0]) - level

    escape.terminal = True
    escape.direction = 1

    sol = solve_ivp(
        rhs,
        (0.0, t_max),
        [amplitude, 0.0],
        method="LSODA",
        events=escape,
        rtol=1e-10,
        atol=1e-12,
    )
    if sol.t_events[0].size:
        return OdeBlowUp(float(sol.t_events[0][0]), float(sol.y_events[0][0][0]), True)
    return OdeBlowUp(float(sol.t[-1]), float(sol.y[0, -1]), False)


def oracle_blow_up_time(nonlinearity: Nonlinearity, amplitude: float) -> float:
    """Blow-up time from the first integral phi'^2 / 2 = G(phi) - G(amplitude).

    T* = int_A^inf dphi / sqrt(2 (G(phi) - G(A))) with G' = -N, evaluated
    after substituting phi = A + s^2, which removes the endpoint singularity.
    Infinite when the solution does not blow up.
    """
    if not _is_focusing(nonlinearity) or amplitude <= 0:
        return math.inf

    def first_integral(phi):
        return -0.5 * float(nonlinearity.potential_density(phi))

    g_a = first_integral(amplitude)

    def integrand(s):
        if s == 0:
            # limit of 2s / sqrt(2 G'(A) s^2)
            return 2 / math.sqrt(-2 * float(nonlinearity.evaluate(amplitude)))
        with np.errstate(over="ignore"):
            gap = first_integral(amplitude + s * s) - g_a
        if not math.isfinite(gap):
            return 0.0
        return 2 * s / math.sqrt(2 * gap)

    value, _ = quad(integrand, 0, math.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    return float(value)


def _is_focusing(nonlinearity: Nonlinearity) -> bool:
    return nonlinearity.kind == NonlinearityKind.EXP_FOCUSING or (
        nonlinearity.kind == NonlinearityKind.POWER
        and nonlinearity.sign == Sign.FOCUSING
    )


def focusing_contrast(config: RunConfig) -> ExperimentResult:
    """Short pulse with large energy survives the slab while the ODE blows up.

    The pulse amplitude is raised until the kinetic flux through C_u0 meets
    energy_target; the horizon T0 sets u0 = -T0. The spatially constant
    solution of the same equation with phi(0) = ode_amplitude is integrated
    over [0, T0] and compared with its quadrature blow-up time.
    """
    config.validate()
    nonlinearity = config.build_nonlinearity()
    if not _is_focusing(nonlinearity):
        raise ValueError(
            f"focusing contrast needs a focusing nonlinearity, got {nonlinearity.label}"
        )
    u0 = -config.horizon if config.horizon is not None else config.u0
    horizon = -u0
    grid = config.grid_for(config.delta, u0=u0)

    unit_flux = conserved_energy_flux(
        initial_cone_state(grid, config.pulse_for(config.delta, 1.0), nonlinearity)
    ).kinetic
    amplitude = config.amplitude
    if config.energy_target is not None and unit_flux > 0:
        amplitude = max(amplitude, math.sqrt(config.energy_target / unit_flux))
    pulse = config.pulse_for(config.delta, amplitude)
    energy = conserved_energy_flux(initial_cone_state(grid, pulse, nonlinearity))
    logging.info(
        f"contrast: amplitude={amplitude:.6g}, C_u0 flux={energy.kinetic:.6g}, "
        f"potential={energy.potential:.6g}"
    )

    checks = []
    if config.energy_target is not None:
        met = energy.kinetic >= config.energy_target * (1 - 1e-9)
        checks.append(
            CheckRow(
                "pulse-energy",
                energy.kinetic,
                config.energy_target,
                Verdict.BOUND_RESPECTED if met else Verdict.VIOLATED,
                f"amplitude {amplitude:.6g}",
            )
        )

    try:
        state = evolve(grid, pulse, nonlinearity)
        sup = float(np.max(np.abs(state.values)))
        checks.append(
            CheckRow(
                "pulse-run",
                sup,
                None,
                Verdict.BOUND_RESPECTED,
                f"completed to u={grid.u_end:g}",
            )
        )
    except (BlowUpError, StepFailureError) as e:
        logging.warning(f"contrast pulse run stopped: {e}")
        checks.append(
            CheckRow(
                "pulse-run",
                math.nan,
                None,
                Verdict.VIOLATED,
                f"{e}; delta may not be small enough",
            )
        )

    ode = ode_blow_up(nonlinearity, config.ode_amplitude, horizon)
    oracle = oracle_blow_up_time(nonlinearity, config.ode_amplitude)
    checks.append(
        CheckRow(
            "ode-blow-up",
            ode.time if ode.blew_up else math.inf,
            horizon,
            Verdict.BOUND_RESPECTED if ode.blew_up else Verdict.VIOLATED,
            "blew up before the horizon" if ode.blew_up else "no blow-up",
        )
    )
    if ode.blew_up and math.isfinite(oracle):
        deviation = abs(ode.time - oracle) / oracle
        checks.append(
            CheckRow(
                "ode-oracle",
                deviation,
                1e-3,
                Verdict.BOUND_RESPECTED if deviation <= 1e-3 else Verdict.VIOLATED,
                f"quadrature blow-up time {oracle:.8g}",
            )
        )
    logging.info(f"contrast: ODE blow-up at t={ode.time:.6g}, oracle {oracle:.6g}")

    return ExperimentResult(
        experiment=Experiment.FOCUSING_CONTRAST,
        parameters={**run_parameters(config), "selected_amplitude": amplitude},
        checks=checks,
    )


def ledger_rows(state: FieldState) -> List[Dict[str, object]]:
    """Both energy ledgers on the whole slab D(u_end, delta) as table rows."""
    grid = state.grid
    rows = []
    for multiplier in Multiplier:
        ledger = energy_identity_audit(state, multiplier, grid.u_end, grid.delta)
        row = {"delta": grid.delta, **dataclasses.asdict(ledger)}
        row["multiplier"] = multiplier.value
        row["largest_term"] = ledger.largest_term
        row["relative_residual"] = ledger.relative_residual
        rows.append(row)
    return rows


def ledger_checks(rows: List[Dict[str, object]], label: str) -> List[CheckRow]:
    checks = []
    for row in rows:
        ok = row["relative_residual"] <= LEDGER_TOLERANCE
        checks.append(
            CheckRow(
                f"energy-{row['multiplier']}@{label}",
                row["relative_residual"],
                LEDGER_TOLERANCE,
                Verdict.BOUND_RESPECTED if ok else Verdict.VIOLATED,
                f"residual {row['residual']:.3e} of {row['largest_term']:.3e}",
            )
        )
    return checks


class AuditSample(NamedTuple):
    delta: float
    ledgers: List[Dict[str, object]]
    ratios: Dict[str, float]
    refined_ratios: Dict[str, float]
    failure: Optional[str]


def measure_audit_entry(config: RunConfig, delta: float) -> AuditSample:
    lemmas = [lemma for lemma, dim in LEMMAS.items() if dim == config.dim]
    state, failure = _evolve_or_failure(config, delta)
    refined, refined_failure = _evolve_or_failure(
        config, delta, config.resolution.refined(2)
    )
    if state is None or refined is None:
        return AuditSample(delta, [], {}, {}, failure or refined_failure)
    return AuditSample(
        delta,
        ledger_rows(state),
        {lemma: sobolev_check(state, lemma).worst_ratio for lemma in lemmas},
        {lemma: sobolev_check(refined, lemma).worst_ratio for lemma in lemmas},
        None,
    )


def sobolev_audit(config: RunConfig) -> ExperimentResult:
    """Energy ledgers and Sobolev ratios over the sweep.

    For every delta both ledgers at (u_end, delta) must balance, every
    applicable Sobolev ratio must be finite and change by less than 10% under
    2x refinement, and each ratio must stay within the headroom across delta.
    """
    config.validate()
    logging.info(f"Sobolev and energy audit over {config.delta_list}")
    samples = _map_deltas(config, measure_audit_entry, config.delta_list)
    lemmas = [lemma for lemma, dim in LEMMAS.items() if dim == config.dim]

    checks = []
    ledgers = []
    sobolev_rows = []
    for sample in samples:
        label = delta_label(sample.delta)
        if sample.failure is not None:
            checks.append(
                CheckRow(
                    f"evolution@{label}", math.nan, None, Verdict.FAILED, sample.failure
                )
            )
            continue
        ledgers += sample.ledgers
        checks += ledger_checks(sample.ledgers, label)
        for lemma in lemmas:
            ratio = sample.ratios[lemma]
            refined = sample.refined_ratios[lemma]
            change = abs(refined - ratio) / ratio if ratio > 0 else abs(refined)
            ok = math.isfinite(ratio) and change < REFINEMENT_TOLERANCE
            sobolev_rows.append(
                {
                    "delta": sample.delta,
                    "lemma": lemma,
                    "ratio": ratio,
                    "refined_ratio": refined,
                    "change": change,
                }
            )
            checks.append(
                CheckRow(
                    f"lemma-{lemma}@{label}",
                    ratio,
                    None,
                    Verdict.BOUND_RESPECTED if ok else Verdict.VIOLATED,
                    f"refinement change {change:.3g}",
                )
            )

    completed = [s for s in samples if s.failure is None]
    for lemma in lemmas:
        ratios = np.array([s.ratios[lemma] for s in completed])
        positive = ratios[np.isfinite(ratios) & (ratios > 0)]
        if positive.size < 2:
            checks.append(
                CheckRow(
                    f"lemma-{lemma}-uniform",
                    math.nan,
                    config.headroom,
                    Verdict.INCONCLUSIVE,
                )
            )
            continue
        spread = float(positive.max() / positive.min())
        checks.append(
            CheckRow(
                f"lemma-{lemma}-uniform",
                spread,
                config.headroom,
                Verdict.BOUND_RESPECTED
                if spread <= config.headroom
                else Verdict.VIOLATED,
                "max/min ratio across delta",
            )
        )

    for check in checks:
        if not check.verdict.passed:
            logging.warning(f"audit: {check.name} {check.verdict.value} ({check.note})")

    return ExperimentResult(
        experiment=Experiment.SOBOLEV_AUDIT,
        parameters=run_parameters(config),
        checks=checks,
        tables={
            "ledgers": pd.DataFrame(ledgers),
            "sobolev": pd.DataFrame(sobolev_rows),
        },
    )


def run_single(config: RunConfig, checkpoint: Optional[str] = None) -> ExperimentResult:
    """One evolution at config.delta with every diagnostic of the run.

    Checks the vanishing trace on u_bar = 0, both energy ledgers and both
    commutator residuals; writes a checkpoint when a path is given.
    """
    config.validate()
    grid = config.grid_for(config.delta)
    pulse = config.pulse_for(config.delta)
    nonlinearity = config.build_nonlinearity()
    bounds = verify_data_bounds(pulse, grid, nonlinearity)
    tables = {"data_bounds": bounds.to_frame()}
    parameters = run_parameters(config)

    try:
        state = evolve(grid, pulse, nonlinearity)
    except (BlowUpError, StepFailureError) as e:
        logging.warning(f"single run stopped: {e}")
        return ExperimentResult(
            experiment=Experiment.SINGLE_RUN,
            parameters=parameters,
            checks=[CheckRow("evolution", math.nan, None, Verdict.FAILED, str(e))],
            tables=tables,
        )

    if checkpoint is not None:
        save_checkpoint(state, checkpoint)

    label = delta_label(config.delta)
    trace = float(np.max(np.abs(state.values[:, 0])))
    checks = [
        CheckRow(
            "vanishing-trace",
            trace,
            ZERO_FLOOR,
            Verdict.BOUND_RESPECTED if trace <= ZERO_FLOOR else Verdict.VIOLATED,
            "sup |phi| on u_bar = 0",
        )
    ]
    ledgers = ledger_rows(state)
    checks += ledger_checks(ledgers, label)
    for multiplier in Multiplier:
        residual = commutator_residual(state, multiplier)
        scale = max(1.0, float(np.max(np.abs(state.derivative(1, 0, 1)))))
        ok = residual <= 1e-9 * scale
        checks.append(
            CheckRow(
                f"commutator-{multiplier.value}",
                residual,
                1e-9 * scale,
                Verdict.BOUND_RESPECTED if ok else Verdict.VIOLATED,
                "round-off",
            )
        )

    energy = conserved_energy_flux(state)
    tables["energy"] = pd.DataFrame(
        [
            {
                "delta": config.delta,
                "kinetic": energy.kinetic,
                "potential": energy.potential,
            }
        ]
    )
    tables["ledgers"] = pd.DataFrame(ledgers)
    report = assemble_norm_report(state, config.resolved_max_order)
    logging.info(
        f"single run: sup|phi|={np.max(np.abs(state.values)):.4e}, "
        f"C_u0 flux={energy.kinetic:.4e}"
    )
    return ExperimentResult(
        experiment=Experiment.SINGLE_RUN,
        parameters=parameters,
        checks=checks,
        norms=report.table,
        tables=tables,
    )


EXPERIMENTS: Dict[Experiment, Callable[[RunConfig], ExperimentResult]] = {
    Experiment.SINGLE_RUN: run_single,
    Experiment.DELTA_SWEEP: delta_sweep,
    Experiment.CONVERGENCE: convergence_study,
    Experiment.PROP61: prop61_check,
    Experiment.FOCUSING_CONTRAST: focusing_contrast,
    Experiment.SOBOLEV_AUDIT: sobolev_audit,
}


def run_experiment(config: RunConfig) -> ExperimentResult:
    logging.info(f"Running {config.experiment.value}")
    return EXPERIMENTS[config.experiment](config)
