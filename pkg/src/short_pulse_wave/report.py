"""
Experiment results and the files written for them.

Every experiment produces an ExperimentResult: scaling fits, other verdict
rows, an optional norm table and extra tables. emit_report writes

    norms.csv         raw norms per (delta, u, u_bar)
    fits.csv          one row per scaling fit
    checks.csv        one row per non-fit verdict
    summary.json      verdicts and parameters
    scaling.dat       delta and one column per fitted quantity
    plot_scaling.gp   gnuplot script for scaling.dat
    <name>.csv        one file per extra table
    report.xlsx       fits and series workbook (optional)

Formatting is fixed so that identical results give byte-identical files.
"""

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from .models import Experiment, Verdict
from .spreadsheet_writer import write_report_spreadsheet

if TYPE_CHECKING:
    from .experiments import ScalingFit

FLOAT_FORMAT = "%.10e"

FIT_COLUMNS = [
    "quantity",
    "exponent",
    "kind",
    "slope",
    "ratio_min",
    "ratio_max",
    "verdict",
    "note",
]

CHECK_COLUMNS = ["check", "value", "target", "verdict", "note"]


@dataclass
class CheckRow:
    """A verdict that is not a scaling fit (orders, ledgers, contrast runs)."""

    name: str
    value: float
    target: Optional[float]
    verdict: Verdict
    note: str = ""

    def to_row(self) -> Dict[str, Any]:
        return {
            "check": self.name,
            "value": self.value,
            "target": self.target,
            "verdict": self.verdict.value,
            "note": self.note,
        }


@dataclass
class ExperimentResult:
    experiment: Experiment
    parameters: Dict[str, Any] = field(default_factory=dict)
    fits: List["ScalingFit"] = field(default_factory=list)
    checks: List[CheckRow] = field(default_factory=list)
    norms: Optional[pd.DataFrame] = None
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)

    @property
    def verdicts(self) -> List[Verdict]:
        return [fit.verdict for fit in self.fits] + [c.verdict for c in self.checks]

    @property
    def passed(self) -> bool:
        return all(verdict.passed for verdict in self.verdicts)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    @property
    def deltas(self) -> List[float]:
        return list(self.fits[0].deltas) if self.fits else []


def delta_label(delta: float) -> str:
    return f"{delta:g}"


def fit_table(result: ExperimentResult) -> pd.DataFrame:
    """Fit rows with the q@delta and ratio@delta columns in configured order."""
    deltas = result.deltas
    columns = (
        FIT_COLUMNS
        + [f"q@{delta_label(d)}" for d in deltas]
        + [f"ratio@{delta_label(d)}" for d in deltas]
    )
    return pd.DataFrame([fit.to_row() for fit in result.fits], columns=columns)


def check_table(result: ExperimentResult) -> pd.DataFrame:
    return pd.DataFrame([c.to_row() for c in result.checks], columns=CHECK_COLUMNS)


def plain_parameters(values: Any) -> Any:
    """Enums by value, dataclasses as dicts, numpy scalars as Python numbers."""
    if dataclasses.is_dataclass(values) and not isinstance(values, type):
        values = dataclasses.asdict(values)
    if isinstance(values, dict):
        return {key: plain_parameters(value) for key, value in values.items()}
    if isinstance(values, (list, tuple)):
        return [plain_parameters(value) for value in values]
    if isinstance(values, Enum):
        return values.value
    if isinstance(values, np.generic):
        return values.item()
    return values


def _finite_or_none(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite_or_none(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_finite_or_none(v) for v in value]
    return value


def summary(result: ExperimentResult) -> Dict[str, Any]:
    rows = [plain_parameters(fit.to_row()) for fit in result.fits]
    rows += [plain_parameters(check.to_row()) for check in result.checks]
    return _finite_or_none(
        {
            "experiment": result.experiment.value,
            "passed": result.passed,
            "row_count": len(rows),
            "rows": rows,
            "parameters": plain_parameters(result.parameters),
        }
    )


def scaling_table(result: ExperimentResult) -> pd.DataFrame:
    table = pd.DataFrame({"delta": result.deltas})
    for fit in result.fits:
        table[fit.quantity] = fit.values
    return table


def gnuplot_script(result: ExperimentResult, data_file: str = "scaling.dat") -> str:
    """Log-log plot of every fitted quantity with a reference line delta^p.

    Each reference line passes through the quantity's value at the widest
    pulse. Quantities without a non-zero sample are left out.
    """
    lines = [
        "# Scaling of measured norms against the pulse width",
        'set terminal pngcairo size 1000,700',
        'set output "scaling.png"',
        "set logscale xy",
        'set xlabel "delta"',
        'set ylabel "norm"',
        "set key outside right",
        "set grid",
    ]
    plots = []
    for column, fit in enumerate(result.fits, start=2):
        values = np.asarray(fit.values, dtype=float)
        anchor = np.flatnonzero(np.isfinite(values) & (np.abs(values) > 0))
        if anchor.size == 0:
            continue
        d0 = fit.deltas[anchor[0]]
        q0 = abs(values[anchor[0]])
        plots.append(
            f'"{data_file}" using 1:(abs(${column})) with linespoints '
            f'title "{fit.quantity}"'
        )
        plots.append(
            f"{q0:.10e}*(x/{d0:.10e})**({fit.exponent:g}) with lines dashtype 2 "
            f'title "{fit.quantity} ref p={fit.exponent:g}"'
        )
    if plots:
        lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def _write(path: Path, writer) -> Path:
    try:
        writer(path)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e
    logging.info(f"Wrote {path}")
    return path


def _write_text(path: Path, text: str) -> Path:
    def write(p):
        with open(p, "w", newline="\n") as f:
            f.write(text)

    return _write(path, write)


def _write_csv(path: Path, table: pd.DataFrame) -> Path:
    return _write(
        path,
        lambda p: table.to_csv(
            p, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
        ),
    )


def emit_report(
    result: ExperimentResult,
    out_dir: Union[str, Path],
    xlsx: bool = True,
) -> int:
    """Write every output file of a result.

    Args:
        result: Experiment result
        out_dir: Output directory, created if missing
        xlsx: Also write report.xlsx

    Returns:
        Exit code: 0 iff no verdict is violated or failed

    Raises:
        OSError: naming the path that could not be written
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create output directory {out_dir}: {e}") from e

    if result.norms is not None:
        _write_csv(out_dir / "norms.csv", result.norms)
    if result.fits:
        fits = fit_table(result)
        _write_csv(out_dir / "fits.csv", fits)
        scaling = scaling_table(result)
        _write(
            out_dir / "scaling.dat",
            lambda p: scaling.to_csv(
                p,
                sep=" ",
                index=False,
                header=False,
                na_rep="NaN",
                float_format=FLOAT_FORMAT,
                lineterminator="\n",
            ),
        )
        _write_text(out_dir / "plot_scaling.gp", gnuplot_script(result))
    if result.checks:
        _write_csv(out_dir / "checks.csv", check_table(result))
    for name, table in result.tables.items():
        _write_csv(out_dir / f"{name}.csv", table)
    _write_text(
        out_dir / "summary.json", json.dumps(summary(result), indent=2) + "\n"
    )
    if xlsx and (result.fits or result.checks):
        _write(
            out_dir / "report.xlsx",
            lambda p: write_report_spreadsheet(str(p), result),
        )

    failing = [v for v in result.verdicts if not v.passed]
    if failing:
        logging.warning(
            f"{result.experiment.value}: {len(failing)} of {len(result.verdicts)} "
            "verdicts violated or failed"
        )
    else:
        logging.info(
            f"{result.experiment.value}: all {len(result.verdicts)} verdicts passed"
        )
    return result.exit_code
