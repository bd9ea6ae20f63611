import datetime
from typing import TYPE_CHECKING, Dict

import xlsxwriter

from .models import Verdict

if TYPE_CHECKING:
    from .report import ExperimentResult

# Keys are names, values are widths
FIT_SHEET_COLUMNS = {
    "quantity": 18,
    "exponent": 9,
    "kind": 9,
    "slope": 10,
    "ratio_min": 12,
    "ratio_max": 12,
    "verdict": 17,
    "note": 40,
}

CHECK_SHEET_COLUMNS = {
    "check": 24,
    "value": 14,
    "target": 12,
    "verdict": 17,
    "note": 50,
}

SERIES_COLUMN_WIDTH = 14

VERDICT_COLOURS = {
    Verdict.BOUND_RESPECTED: "#d9ead3",
    Verdict.VIOLATED: "#f4cccc",
    Verdict.INCONCLUSIVE: "#fff2cc",
    Verdict.STRUCTURALLY_ZERO: "#e8e8e8",
    Verdict.FAILED: "#ea9999",
}

# Fixed so that reruns produce the same workbook
DOCUMENT_CREATED = datetime.datetime(2000, 1, 1)


def _write_header(worksheet, columns: Dict[str, int], title_format) -> None:
    for ind, key in enumerate(columns.keys()):
        worksheet.write(0, ind, key, title_format)
        worksheet.set_column(ind, ind, columns[key])
    worksheet.set_row(0, 30)
    worksheet.freeze_panes(1, 0)


def write_report_spreadsheet(
    output_filename: str, result: "ExperimentResult"
) -> None:
    """Write fits, checks and the measured series to a workbook.

    Args:
        output_filename: Path to save the spreadsheet file
        result: Experiment result to export
    """
    workbook = xlsxwriter.Workbook(output_filename, {"nan_inf_to_errors": True})
    workbook.set_properties(
        {
            "title": f"{result.experiment.value} report",
            "created": DOCUMENT_CREATED,
        }
    )

    title_format = workbook.add_format()
    title_format.set_bold()
    title_format.set_text_wrap()

    number_format = workbook.add_format({"num_format": "0.000E+00"})
    verdict_formats = {
        verdict: workbook.add_format({"bg_color": colour})
        for verdict, colour in VERDICT_COLOURS.items()
    }

    if result.fits:
        worksheet = workbook.add_worksheet("Fits")
        deltas = result.deltas
        columns = dict(FIT_SHEET_COLUMNS)
        for delta in deltas:
            columns[f"q@{delta:g}"] = SERIES_COLUMN_WIDTH
        for delta in deltas:
            columns[f"ratio@{delta:g}"] = SERIES_COLUMN_WIDTH
        _write_header(worksheet, columns, title_format)

        for row_ind, fit in enumerate(result.fits, start=1):
            row = fit.to_row()
            for col_ind, key in enumerate(columns.keys()):
                value = row[key]
                if key == "verdict":
                    worksheet.write(
                        row_ind, col_ind, value, verdict_formats[fit.verdict]
                    )
                elif isinstance(value, float):
                    worksheet.write_number(row_ind, col_ind, value, number_format)
                else:
                    worksheet.write(row_ind, col_ind, value)

        series = workbook.add_worksheet("Series")
        series_columns = {"delta": SERIES_COLUMN_WIDTH}
        for fit in result.fits:
            series_columns[fit.quantity] = SERIES_COLUMN_WIDTH
        _write_header(series, series_columns, title_format)
        for row_ind, delta in enumerate(deltas, start=1):
            series.write_number(row_ind, 0, delta, number_format)
            for col_ind, fit in enumerate(result.fits, start=1):
                series.write_number(
                    row_ind, col_ind, float(fit.values[row_ind - 1]), number_format
                )

    if result.checks:
        worksheet = workbook.add_worksheet("Checks")
        _write_header(worksheet, CHECK_SHEET_COLUMNS, title_format)
        for row_ind, check in enumerate(result.checks, start=1):
            row = check.to_row()
            for col_ind, key in enumerate(CHECK_SHEET_COLUMNS.keys()):
                value = row[key]
                if key == "verdict":
                    worksheet.write(
                        row_ind, col_ind, value, verdict_formats[check.verdict]
                    )
                elif value is None:
                    worksheet.write_blank(row_ind, col_ind, None)
                elif isinstance(value, float):
                    worksheet.write_number(row_ind, col_ind, value, number_format)
                else:
                    worksheet.write(row_ind, col_ind, value)

    workbook.close()
