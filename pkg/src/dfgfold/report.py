"""Report writers: delimited rows plus rendered figures.

The CSV is the stable machine interface (fixed column set, trailing
newline, platform-independent line endings, integral floats printed as
integers) so repeated runs with the same inputs are byte-identical.
The JSON carries everything the CSV drops: breakdowns, requested slot
counts and run metadata.  Figures are rendered headless.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .explore import ExplorationRow

CSV_COLUMNS = [
    "config",
    "N",
    "mult_units",
    "lut_units",
    "reg_bits",
    "mux_inputs",
    "tmin_proxy_ns",
    "latency_proxy_ns",
    "equivalent",
    "pareto",
]


def _num(x: float | int) -> str:
    if isinstance(x, int):
        return str(x)
    if float(x).is_integer():
        return str(int(x))
    return repr(float(x))


def _yesno(flag: bool) -> str:
    return "yes" if flag else "no"


def write_report_csv(rows: list[ExplorationRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.config,
                    r.n,
                    r.cost.mult_units,
                    _num(r.cost.lut_units),
                    r.cost.reg_bits,
                    r.cost.mux_inputs,
                    _num(r.cost.tmin_proxy_ns),
                    _num(r.latency_proxy_ns),
                    _yesno(r.equivalent),
                    _yesno(r.pareto),
                ]
            )


def write_report_json(rows: list[ExplorationRow], path: str | Path, meta: dict | None = None) -> None:
    doc = {"meta": meta or {}, "rows": [r.as_dict() for r in rows]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def plot_tradeoff(rows: list[ExplorationRow], path: str | Path, title: str = "") -> None:
    """Latency against area, Pareto front drawn as a staircase."""
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    alts = [r for r in rows if r.config != "original"]
    base = [r for r in rows if r.config == "original"]
    ax.scatter(
        [r.latency_proxy_ns for r in alts],
        [r.cost.lut_units for r in alts],
        s=26, color="#777777", zorder=2, label="folded configuration",
    )
    if base:
        ax.scatter(
            [r.latency_proxy_ns for r in base],
            [r.cost.lut_units for r in base],
            s=60, color="#2b6fc0", marker="D", zorder=4, label="unfolded",
        )
    front = sorted(
        ((r.latency_proxy_ns, r.cost.lut_units) for r in rows if r.pareto)
    )
    if front:
        fx = [p[0] for p in front]
        fy = [p[1] for p in front]
        ax.step(fx, fy, where="post", color="#c0392b", zorder=3, label="pareto front")
        ax.scatter(fx, fy, s=34, color="#c0392b", zorder=4)
    for r in rows:
        ax.annotate(
            r.config,
            (r.latency_proxy_ns, r.cost.lut_units),
            textcoords="offset points",
            xytext=(4, 4),
            fontsize=7,
        )
    ax.set_xlabel("latency proxy [ns]")
    ax.set_ylabel("area [LUT units]")
    if title:
        ax.set_title(title)
    ax.grid(True, linewidth=0.4, alpha=0.5)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_resources(rows: list[ExplorationRow], path: str | Path, title: str = "") -> None:
    """Per-configuration resource bars: LUT units above, multipliers below."""
    labels = [r.config for r in rows]
    pos = range(len(rows))
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(max(7.0, 0.6 * len(rows)), 6.0), sharex=True)
    ax1.bar(pos, [r.cost.lut_units for r in rows], color="#5b7fa6")
    ax1.set_ylabel("LUT units")
    ax2.bar(pos, [r.cost.mult_units for r in rows], color="#a6755b")
    ax2.set_ylabel("multipliers")
    ax2.set_xticks(list(pos))
    ax2.set_xticklabels(labels, rotation=60, ha="right", fontsize=8)
    for ax in (ax1, ax2):
        ax.grid(True, axis="y", linewidth=0.4, alpha=0.5)
    if title:
        ax1.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_reports(
    rows: list[ExplorationRow],
    out_dir: str | Path,
    meta: dict | None = None,
    title: str = "",
) -> dict[str, Path]:
    """All four artifacts into a directory; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": out / "report.csv",
        "json": out / "report.json",
        "tradeoff": out / "tradeoff.png",
        "resources": out / "resources.png",
    }
    write_report_csv(rows, paths["csv"])
    write_report_json(rows, paths["json"], meta)
    plot_tradeoff(rows, paths["tradeoff"], title)
    plot_resources(rows, paths["resources"], title)
    return paths
