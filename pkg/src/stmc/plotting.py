"""Figures for experiment reports, written next to the JSON/CSV output."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import ExperimentReport  # noqa: E402


def _finite(v):
    return v is not None and isinstance(v, (int, float)) and math.isfinite(v)


def plot_series(report: ExperimentReport, path: Path) -> Path | None:
    rows = report.series
    if not rows:
        return None
    fig, ax = plt.subplots(figsize=(5, 3.5))
    xs = list(range(len(rows)))
    labels = [str(r["param"]) for r in rows]
    # oracle runs store the null-distance error as upper and the tau error as lower
    names = {"upper": "upper", "lower": "lower", "floor": "floor"}
    if report.kind == "oracle_regression":
        names = {"upper": "null distance", "lower": "cosmological time"}
    for key, style in (("upper", "o-"), ("lower", "s--"), ("floor", ":")):
        pts = [(x, r[key]) for x, r in zip(xs, rows) if _finite(r.get(key))]
        if pts and key in names:
            ax.plot(*zip(*pts), style, label=names[key])
    ax.set_xticks(xs, labels, rotation=45 if len(rows) > 6 else 0)
    if report.kind == "convergence":
        ax.set_xlabel("family parameter")
        ax.set_ylabel(f"{report.meta.get('op', 'distance')} bound")
    else:
        ax.set_xlabel("resolution")
        ax.set_ylabel("max error")
        ax.set_yscale("symlog", linthresh=1e-6)
        ax.set_ylim(bottom=0)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_sandwich(report: ExperimentReport, path: Path) -> Path | None:
    pts = [(c.got["gh"], c.got["kappa_gh"]) for c in report.cases if isinstance(c.got, dict) and "gh" in c.got]
    if not pts:
        return None
    fig, ax = plt.subplots(figsize=(4, 4))
    g, k = zip(*pts)
    top = max(max(g), 1e-9)
    ax.plot([0, top], [0, top], "k-", lw=0.8, label="kappa = gh")
    ax.plot([0, top], [0, 2 * top], "k--", lw=0.8, label="kappa = 2 gh")
    ax.scatter(g, k, s=12, c=["tab:blue" if c.passed else "tab:red" for c in report.cases])
    ax.set_xlabel("gh")
    ax.set_ylabel("kappa_gh")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_definiteness(report: ExperimentReport, path: Path) -> Path | None:
    vals = {True: [], False: []}
    for c in report.cases:
        got = c.got if isinstance(c.got, dict) else {}
        if "tau_h" in got and "isometry" in got:
            vals[bool(got["isometry"])].append(got["tau_h"]["upper"])
    if not vals[True] and not vals[False]:
        return None
    fig, ax = plt.subplots(figsize=(5, 3))
    for iso, color in ((True, "tab:green"), (False, "tab:orange")):
        if vals[iso]:
            ax.scatter(vals[iso], [int(iso)] * len(vals[iso]), s=12, c=color)
    ax.set_yticks([0, 1], ["no isometry", "isometry"])
    ax.set_xlabel("tau_h (exact)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render(report: ExperimentReport, outdir: Path) -> list[Path]:
    outdir = Path(outdir)
    made = []
    for fn, name in ((plot_series, "series.png"), (plot_sandwich, "sandwich.png"), (plot_definiteness, "definiteness.png")):
        p = fn(report, outdir / name)
        if p is not None:
            made.append(p)
    return made
