"""CSV series and a gnuplot script from experiment records (no rendering here)."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path

import numpy as np

from ..cube import normal_quantile

SERIES = {
    "N": ("error_vs_N.csv", lambda r: r["learn"]["N"]),
    "d": ("error_vs_d.csv", lambda r: r["learn"]["d"]),
    "sigma": ("error_vs_sigma.csv", lambda r: r["benchmark"]["sigma"]),
}
COLUMNS = ["x", "runs", "test_mean", "test_ci", "validation_mean", "train_mean", "benchmark_mean",
           "benchmark_ci"]


def _ci(values, level):
    if len(values) < 2:
        return 0.0
    return float(normal_quantile(level) * np.std(values, ddof=1) / math.sqrt(len(values)))


def series_rows(records, key: str, level: float = 0.95) -> list[dict]:
    """One row per distinct value of ``key``, averaging over the runs at that value."""
    groups = defaultdict(list)
    for r in records:
        groups[SERIES[key][1](r)].append(r)
    rows = []
    for x in sorted(groups):
        rs = groups[x]
        test = [r["errors"]["test"] for r in rs]
        bench = [r["benchmark"]["value"] for r in rs]
        rows.append({
            "x": x, "runs": len(rs),
            "test_mean": float(np.mean(test)), "test_ci": _ci(test, level),
            "validation_mean": float(np.mean([r["errors"]["validation"] for r in rs])),
            "train_mean": float(np.mean([r["errors"]["train"] for r in rs])),
            "benchmark_mean": float(np.mean(bench)), "benchmark_ci": _ci(bench, level),
        })
    return rows


GNUPLOT = """\
set datafile separator ','
set key autotitle columnhead
set terminal pngcairo size 800,500
{blocks}"""

BLOCK = """\
set output '{stem}.png'
set xlabel '{xlabel}'
set ylabel 'error'
plot '{csv}' using 1:3:4 with yerrorlines title 'test', \\
     '' using 1:7:8 with yerrorlines title 'smoothed benchmark'
"""


def emit_plots(records, outdir, level: float = 0.95) -> list[Path]:
    """Write ``error_vs_{N,d,sigma}.csv`` and ``plots.gp`` into ``outdir``."""
    records = [r for r in records if r.get("status", "ok") == "ok"]
    if not records:
        raise ValueError("emit_plots needs at least one successful record")
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written, blocks = [], []
    for key, (name, _) in SERIES.items():
        path = out / name
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=COLUMNS)
            w.writeheader()
            w.writerows(series_rows(records, key, level))
        written.append(path)
        blocks.append(BLOCK.format(stem=path.stem, xlabel=key, csv=name))
    script = out / "plots.gp"
    script.write_text(GNUPLOT.format(blocks="".join(blocks)))
    written.append(script)
    return written
