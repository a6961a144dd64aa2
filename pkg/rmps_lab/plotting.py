"""Standalone gnuplot scripts for report sweeps."""

from pathlib import Path
from typing import Optional
import logging

from .experiments import ExperimentReport

logger = logging.getLogger(__name__)

PLOT_FILE = "plot.gp"
MISSING = "?"


def _cell(value: Optional[float]) -> str:
    return MISSING if value is None else repr(float(value))


def emit_plot_script(report: ExperimentReport, path: Optional[Path] = None) -> str:
    """
    Render the sweep as estimate +- 3 sigma against the exact and bound curves.

    The data is inlined, so the script runs without the report next to it.

    Raises:
        ValueError: If the report has no sweep rows
    """
    if not report.sweep:
        raise ValueError(f"Report of kind {report.kind!r} has no sweep rows to plot")

    rows = sorted(report.sweep, key=lambda r: r["x"])
    quantity = rows[0]["quantity"]
    config = report.config
    title = f"{report.kind}: d={config.get('d')}, D={config.get('D')}, seed={report.seed}"

    lines = [
        f"# {report.kind} sweep, {len(rows)} point(s)",
        f'set title "{title}"',
        'set xlabel "n"',
        f'set ylabel "{quantity}"',
        f'set datafile missing "{MISSING}"',
        "set key left top",
        "$data << EOD",
        "# x mean three_sigma exact bound",
    ]
    for row in rows:
        lines.append(" ".join([
            str(row["x"]),
            _cell(row["mean"]),
            _cell(3.0 * row["stderr"]),
            _cell(row.get("exact")),
            _cell(row.get("bound")),
        ]))
    lines.append("EOD")

    if len(rows) == 1:
        x = rows[0]["x"]
        lines.append(f"set xrange [{x - 1}:{x + 1}]")
        series = ['$data using 1:2:3 with yerrorbars title "Monte Carlo"']
        for key in ("exact", "bound"):
            value = rows[0].get(key)
            if value is not None:
                series.append(f'{float(value)!r} with lines dashtype 2 title "{key}"')
    else:
        series = [
            '$data using 1:2:3 with yerrorbars title "Monte Carlo"',
            '$data using 1:4 with linespoints title "exact"',
            '$data using 1:5 with lines dashtype 2 title "bound"',
        ]
    lines.append("plot " + ", \\\n     ".join(series))
    text = "\n".join(lines) + "\n"

    if path is not None:
        path = Path(path)
        path.write_text(text)
        logger.info("plot script written to %s", path)
    return text
