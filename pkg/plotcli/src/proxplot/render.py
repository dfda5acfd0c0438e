"""Render convergence figures from benchmark CSV traces.

Input CSVs follow the harness schema (one block of rows per solver, columns
including solver_id, a_calls and gap).  Each CSV becomes one panel plotting
the optimality gap against cumulative operator calls on a log scale, one
curve per solver; by default the best-so-far envelope of the gap is drawn,
raw gaps on request.  Rendering is read-only over the CSVs and deterministic:
identical inputs give identical figure dimensions and legend ordering.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["PlotSpec", "RenderResult", "load_blocks", "render"]

REQUIRED_COLUMNS = ("solver_id", "a_calls", "gap")


@dataclass
class PlotSpec:
    csv_paths: list
    out_path: str
    raw: bool = False  # plot raw gaps instead of the best-so-far envelope
    styles: dict = field(default_factory=dict)  # solver_id -> matplotlib kwargs


@dataclass
class RenderResult:
    out_path: str
    legends: list  # per panel, the solver ids in draw order


def load_blocks(path):
    """Read one CSV into an ordered mapping solver_id -> (a_calls, gaps)."""
    blocks = {}
    with open(path, "r", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        for row in reader:
            sid = row["solver_id"]
            calls, gaps = blocks.setdefault(sid, ([], []))
            calls.append(float(row["a_calls"]))
            gaps.append(float(row["gap"]) if row["gap"] != "" else float("nan"))
    if not blocks:
        raise ValueError(f"{path}: no data rows")
    return blocks


def _envelope(gaps):
    best = float("inf")
    out = []
    for g in gaps:
        if g == g and g < best:  # skip NaN
            best = g
        out.append(best)
    return out


def render(spec):
    """Render the figure described by ``spec``; returns the drawn legends."""
    if not spec.csv_paths:
        raise ValueError("at least one CSV path is required")
    panels = [(Path(p), load_blocks(p)) for p in spec.csv_paths]
    known = {sid for _, blocks in panels for sid in blocks}
    unknown = set(spec.styles) - known
    if unknown:
        raise ValueError(f"styles refer to unknown solver ids: {sorted(unknown)}")

    n = len(panels)
    ncols = min(n, 2)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(6.0 * ncols, 4.5 * nrows), squeeze=False
    )
    legends = []
    for i, (path, blocks) in enumerate(panels):
        ax = axes[i // ncols][i % ncols]
        drawn = []
        for sid, (calls, gaps) in blocks.items():
            ys = gaps if spec.raw else _envelope(gaps)
            pts = [(c, y) for c, y in zip(calls, ys) if y == y and y > 0.0]
            if not pts:
                continue
            ax.plot([c for c, _ in pts], [y for _, y in pts],
                    label=sid, **spec.styles.get(sid, {}))
            drawn.append(sid)
        if not drawn:
            raise ValueError(f"{path}: no positive gap values to draw")
        ax.set_yscale("log")
        ax.set_xlabel("operator calls")
        ax.set_ylabel("optimality gap" if spec.raw else "best optimality gap")
        ax.set_title(path.stem)
        ax.legend()
        ax.grid(True, which="both", alpha=0.3)
        legends.append(drawn)
    for j in range(n, nrows * ncols):
        axes[j // ncols][j % ncols].set_axis_off()
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)
    return RenderResult(out_path=str(spec.out_path), legends=legends)
