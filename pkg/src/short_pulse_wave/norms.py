"""
Sphere norms, null-cone flux norms and the E/Ebar/F/Fbar hierarchy.

Quantities are named by the frame derivatives applied to phi, in the order
L, Lbar, Omega with optional powers: "phi", "L", "Lbar", "Omega2", "L2",
"LbarOmega", "L2Omega", "LLbar". A trailing "_phi" is accepted.

Outgoing cone norms integrate over C_u truncated to [0, u_bar]; ingoing cone
norms over Cbar_{u_bar} truncated to [u0, u]. The |u| weights of the energy
norms are omitted (|u| is comparable to a constant on the slab); the Sobolev
checks keep them exactly as stated.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid, trapezoid

from .evolve import FieldState
from .models import ZERO_FLOOR

QUANTITY_PATTERN = re.compile(r"(?:L(\d*))?(?:Lbar(\d*))?(?:Omega(\d*))?")

SPHERE_COLUMNS = ["phi_Linf_S", "L_phi_L4_S", "Omega_phi_L4_S", "Lbar_phi_L4_S"]

LEMMAS = {"2.4": 3, "2.5": 3, "7.1": 2, "7.2": 2, "7.3": 2}


def parse_quantity(name: str) -> Tuple[int, int, int]:
    """Powers (n_L, n_Lbar, n_Omega) of a quantity name."""
    stem = name[: -len("_phi")] if name.endswith("_phi") else name
    if stem == "phi":
        return (0, 0, 0)
    match = QUANTITY_PATTERN.fullmatch(stem)
    if not stem or match is None:
        raise ValueError(f"Unknown quantity {name!r}")

    def power(group: Optional[str]) -> int:
        if group is None:
            return 0
        return int(group) if group else 1

    n_l, n_lbar, n_omega = (power(g) for g in match.groups())
    return n_l, n_lbar, n_omega


def quantity_values(state: FieldState, quantity: str) -> np.ndarray:
    return state.derivative(*parse_quantity(quantity))


def _sphere_lp(state: FieldState, values: np.ndarray, p: float) -> np.ndarray:
    """L^p(S) norm at every (u, u_bar) node."""
    if p == np.inf:
        return np.max(np.abs(values), axis=2)
    if p not in (2, 4):
        raise ValueError(f"Unsupported sphere norm exponent p={p}")
    return np.sum(state.grid.node_weights * np.abs(values) ** p, axis=2) ** (1 / p)


def sphere_norm(
    state: FieldState, u: float, u_bar: float, quantity: str, p: float = 2
) -> float:
    """||quantity||_{L^p(S_{u_bar,u})} with trapezoid weights in theta."""
    i = state.grid.index_of_u(u)
    j = state.grid.index_of_u_bar(u_bar)
    values = quantity_values(state, quantity)[i : i + 1, j : j + 1]
    if p == np.inf:
        return float(np.max(np.abs(values)))
    if p not in (2, 4):
        raise ValueError(f"Unsupported sphere norm exponent p={p}")
    weights = state.grid.node_weights[i : i + 1, j : j + 1]
    return float(np.sum(weights * np.abs(values) ** p) ** (1 / p))


def _sphere_squares(state: FieldState, values: np.ndarray) -> np.ndarray:
    return np.sum(state.grid.node_weights * values**2, axis=2)


def cone_norm_outgoing(
    state: FieldState, u: float, u_bar_star: float, quantity: str
) -> float:
    """||quantity||_{L^2(C_u)} over 0 <= u_bar <= u_bar_star."""
    grid = state.grid
    i = grid.index_of_u(u)
    j = grid.index_of_u_bar(u_bar_star)
    squares = _sphere_squares(state, quantity_values(state, quantity))[i, : j + 1]
    return float(np.sqrt(trapezoid(squares, grid.u_bar[: j + 1]))) if j else 0.0


def cone_norm_ingoing(
    state: FieldState, u_bar: float, u_star: float, quantity: str
) -> float:
    """||quantity||_{L^2(Cbar_{u_bar})} over u0 <= u <= u_star."""
    grid = state.grid
    i = grid.index_of_u(u_star)
    j = grid.index_of_u_bar(u_bar)
    squares = _sphere_squares(state, quantity_values(state, quantity))[: i + 1, j]
    return float(np.sqrt(trapezoid(squares, grid.u[: i + 1]))) if i else 0.0


def outgoing_cone_norms(state: FieldState, quantity: str) -> np.ndarray:
    """Outgoing cone norms truncated at every node, shape (n_u + 1, n_ub + 1)."""
    squares = _sphere_squares(state, quantity_values(state, quantity))
    cumulative = cumulative_trapezoid(squares, state.grid.u_bar, axis=1, initial=0)
    return np.sqrt(np.maximum(cumulative, 0))


def ingoing_cone_norms(state: FieldState, quantity: str) -> np.ndarray:
    squares = _sphere_squares(state, quantity_values(state, quantity))
    cumulative = cumulative_trapezoid(squares, state.grid.u, axis=0, initial=0)
    return np.sqrt(np.maximum(cumulative, 0))


def _omega(name: str, power: int) -> str:
    if power == 0:
        return name if name else "phi"
    return f"{name}Omega{power if power > 1 else ''}"


def family_terms(max_order: int) -> Dict[str, List[Tuple[str, str, float]]]:
    """Column name -> [(direction, quantity, delta power)] for every family.

    E_k   = ||L Omega^(k-1)||_C + delta^-1/2 ||Omega^k||_C
    Ebar_k = ||Omega^k||_Cbar + delta^-1/2 ||Lbar Omega^(k-1)||_Cbar
    F_k   = delta ||L^2 Omega^(k-2)||_C
    Fbar_k = ||Lbar^2 Omega^(k-2)||_Cbar
    """
    terms = {}
    for k in range(1, max_order + 1):
        terms[f"E{k}"] = [
            ("out", _omega("L", k - 1), 0.0),
            ("out", _omega("", k), -0.5),
        ]
    for k in range(1, max_order + 1):
        terms[f"Ebar{k}"] = [
            ("in", _omega("", k), 0.0),
            ("in", _omega("Lbar", k - 1), -0.5),
        ]
    for k in range(2, max_order + 1):
        terms[f"F{k}"] = [("out", _omega("L2", k - 2), 1.0)]
    for k in range(2, max_order + 1):
        terms[f"Fbar{k}"] = [("in", _omega("Lbar2", k - 2), 0.0)]
    return terms


def norm_columns(max_order: int) -> List[str]:
    """Column contract of the norm CSV."""
    return ["delta", "u", "u_bar", *family_terms(max_order), *SPHERE_COLUMNS, "M"]


@dataclass
class NormReport:
    """All hierarchy norms at every (u, u_bar) node of one run.

    Attributes:
        delta: Pulse width of the run
        max_order: Highest family index
        table: One row per (u, u_bar), columns from norm_columns
        structurally_zero: Columns that vanish identically by symmetry
    """

    delta: float
    max_order: int
    table: pd.DataFrame
    structurally_zero: List[str] = field(default_factory=list)

    def at(self, u_index: int, u_bar_index: int) -> pd.Series:
        n_ub = int(self.table["u_bar"].nunique())
        return self.table.iloc[u_index * n_ub + u_bar_index]

    def to_csv(self, path) -> None:
        self.table.to_csv(path, index=False, float_format="%.10e")


def assemble_norm_report(
    state: FieldState, max_order: Optional[int] = None
) -> NormReport:
    """Evaluate every family and sphere norm on the whole slab.

    Args:
        state: Evolved field
        max_order: Highest family index (3 in dim 3, 2 in dim 2 by default)

    Returns:
        NormReport with M the sum of all E, Ebar, F and Fbar columns
    """
    grid = state.grid
    if max_order is None:
        max_order = 3 if grid.dim == 3 else 2
    if max_order < 1:
        raise ValueError(f"max_order={max_order} must be >= 1")

    cone_cache: Dict[Tuple[str, str], np.ndarray] = {}

    def cone(direction: str, quantity: str) -> np.ndarray:
        key = (direction, quantity)
        if key not in cone_cache:
            norms = outgoing_cone_norms if direction == "out" else ingoing_cone_norms
            cone_cache[key] = norms(state, quantity)
        return cone_cache[key]

    columns: Dict[str, np.ndarray] = {}
    structurally_zero = []
    for name, terms in family_terms(max_order).items():
        columns[name] = sum(
            grid.delta**power * cone(direction, quantity)
            for direction, quantity, power in terms
        )
        if grid.is_spherical and all(parse_quantity(q)[2] > 0 for _, q, _ in terms):
            structurally_zero.append(name)

    columns["phi_Linf_S"] = _sphere_lp(state, state.values, np.inf)
    columns["L_phi_L4_S"] = _sphere_lp(state, state.derivative(1, 0, 0), 4)
    columns["Omega_phi_L4_S"] = _sphere_lp(state, state.derivative(0, 0, 1), 4)
    columns["Lbar_phi_L4_S"] = _sphere_lp(state, state.derivative(0, 1, 0), 4)
    if grid.is_spherical:
        structurally_zero.append("Omega_phi_L4_S")
    columns["M"] = sum(columns[name] for name in family_terms(max_order))

    u, u_bar = np.meshgrid(grid.u, grid.u_bar, indexing="ij")
    table = pd.DataFrame(
        {
            "delta": np.full(u.size, grid.delta),
            "u": u.ravel(),
            "u_bar": u_bar.ravel(),
            **{name: values.ravel() for name, values in columns.items()},
        }
    )[norm_columns(max_order)]

    logging.debug(
        f"norm report at delta={grid.delta}: max M={table['M'].max():.4e}, "
        f"structurally zero: {structurally_zero}"
    )
    return NormReport(grid.delta, max_order, table, structurally_zero)


@dataclass
class SobolevAudit:
    lemma: str
    worst_ratio: float
    u: Optional[float] = None
    u_bar: Optional[float] = None
    violated: bool = False


def _ratios(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """lhs / rhs with values below ZERO_FLOOR x series max read as zero."""
    lhs_floor = ZERO_FLOOR * max(float(np.max(lhs)), np.finfo(float).tiny)
    rhs_floor = ZERO_FLOOR * max(float(np.max(rhs)), np.finfo(float).tiny)
    lhs_zero = lhs <= lhs_floor
    rhs_zero = rhs <= rhs_floor
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(rhs_zero, np.inf, lhs / np.where(rhs_zero, 1.0, rhs))
    return np.where(lhs_zero, 0.0, ratios)


def sobolev_check(state: FieldState, lemma: str, quantity: str = "phi") -> SobolevAudit:
    """Worst LHS/RHS ratio of a cone or circle Sobolev inequality.

    A finite ratio that is stable under refinement certifies the inequality
    with that constant. A zero right-hand side with a non-zero left-hand side
    gives an infinite ratio and a violation.

    Args:
        state: Field the inequality is applied to
        lemma: One of "2.4", "2.5" (dim 3) or "7.1", "7.2", "7.3" (dim 2)
        quantity: Function the inequality is applied to

    Returns:
        SobolevAudit
    """
    grid = state.grid
    if lemma not in LEMMAS:
        raise ValueError(f"Unknown lemma {lemma!r}, expected one of {sorted(LEMMAS)}")
    if LEMMAS[lemma] != grid.dim:
        raise ValueError(f"lemma {lemma} applies in dim {LEMMAS[lemma]}")

    n_l, n_lbar, n_omega = parse_quantity(quantity)
    f = state.derivative(n_l, n_lbar, n_omega)
    lf = state.derivative(n_l + 1, n_lbar, n_omega)
    lbar_f = state.derivative(n_l, n_lbar + 1, n_omega)
    nabla_f = state.derivative(n_l, n_lbar, n_omega + 1) / grid.radius[:, :, None]

    abs_u = np.abs(grid.u)[:, None]
    weights = grid.node_weights

    def squares(values, u_weight=1.0):
        return np.sum(weights * values**2, axis=2) * u_weight

    def out_full(values, u_weight=1.0):
        return np.sqrt(trapezoid(squares(values, u_weight), grid.u_bar, axis=1))

    def in_full(values, u_weight=1.0):
        return np.sqrt(trapezoid(squares(values, u_weight), grid.u, axis=0))

    l4 = _sphere_lp(state, f, 4)

    if lemma in ("2.4", "7.2"):
        u_abs = np.abs(grid.u)
        if lemma == "2.4":
            lhs = np.max(u_abs[:, None] ** 0.5 * l4, axis=1)
            rhs = np.sqrt(out_full(lf)) * np.sqrt(
                out_full(f) + u_abs * out_full(nabla_f)
            )
        else:
            lhs = np.max(u_abs[:, None] ** 0.25 * l4, axis=1)
            rhs = np.sqrt(out_full(lf)) * (
                np.sqrt(out_full(f)) + np.sqrt(u_abs) * np.sqrt(out_full(nabla_f))
            )
        ratios = _ratios(lhs, rhs)
        worst = int(np.argmax(ratios))
        location = (grid.u[worst], float(grid.u_bar[np.argmax(l4[worst])]))
    elif lemma in ("2.5", "7.3"):
        u0_abs = abs(grid.u0)
        if lemma == "2.5":
            lhs = np.max(abs_u**0.5 * l4, axis=0)
            rhs = u0_abs**0.5 * l4[0] + np.sqrt(in_full(lbar_f, abs_u)) * (
                in_full(f, 1 / abs_u) ** 2 + in_full(nabla_f, abs_u) ** 2
            ) ** 0.25
        else:
            lhs = np.max(abs_u**0.25 * l4, axis=0)
            rhs = u0_abs**0.25 * l4[0] + np.sqrt(in_full(lbar_f)) * (
                np.sqrt(in_full(f)) + np.sqrt(in_full(nabla_f, abs_u**2))
            )
        ratios = _ratios(lhs, rhs)
        worst = int(np.argmax(ratios))
        location = (float(grid.u[np.argmax(l4[:, worst])]), grid.u_bar[worst])
    else:
        sup = np.max(np.abs(f), axis=2)
        l2_f = np.sqrt(squares(f))
        l2_nabla = np.sqrt(squares(nabla_f))
        rhs = abs_u**0.5 * l2_nabla + abs_u**-0.5 * l2_f
        first = _ratios(sup, rhs)
        sixth = np.sum(weights * f**6, axis=2)
        fourth = np.sum(weights * f**4, axis=2)
        second = _ratios(sixth, fourth * (abs_u * l2_nabla**2 + l2_f**2 / abs_u))
        ratios = np.maximum(first, second)
        i, j = np.unravel_index(int(np.argmax(ratios)), ratios.shape)
        location = (grid.u[i], grid.u_bar[j])

    worst_ratio = float(np.max(ratios))
    audit = SobolevAudit(
        lemma=lemma,
        worst_ratio=worst_ratio,
        u=float(location[0]),
        u_bar=float(location[1]),
        violated=not np.isfinite(worst_ratio),
    )
    if audit.violated:
        logging.warning(
            f"lemma {lemma}: right-hand side vanishes at u={audit.u}, "
            f"u_bar={audit.u_bar} while the left-hand side does not"
        )
    return audit
