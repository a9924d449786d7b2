"""Tabulation and rendering of the efficiency/robustness tradeoff curves.

Produces the cutoff table, the per-dimension tradeoff grid (efficiencies and
sensitivity indices as functions of the breakdown point), a companion summary
with the minimizers of the sensitivity indices, and optional matplotlib
figures rendered to files alongside the delimited output.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
from scipy import optimize

from .asymptotics import biweight_scalars, cutoff_for_breakdown
from .errors import InvalidArgumentError
from .influence import ges_indices

__all__ = [
    "cutoff_table",
    "tradeoff_rows",
    "tradeoff_summary",
    "write_tradeoff_csv",
    "write_tradeoff_summary",
    "render_tradeoff_figures",
]

TRADEOFF_COLUMNS = (
    "k",
    "breakdown",
    "c",
    "are_regression",
    "are_shape_direction",
    "are_scale",
    "g1",
    "g2",
    "g3",
)

DEFAULT_DIMS = (1, 2, 5, 10)
DEFAULT_BREAKDOWNS = tuple(round(0.05 * i, 2) for i in range(1, 11))


def cutoff_table(
    dims=DEFAULT_DIMS, breakdowns=DEFAULT_BREAKDOWNS
) -> list[dict[str, float]]:
    """Rows (k, breakdown, cutoff) over the requested grids."""
    rows = []
    for k in dims:
        for eps in breakdowns:
            rows.append(
                {"k": int(k), "breakdown": float(eps), "cutoff": cutoff_for_breakdown(k, eps)}
            )
    return rows


def tradeoff_rows(dims, breakdowns) -> list[dict[str, float]]:
    """Efficiencies and sensitivity indices on a breakdown grid, one row per
    (k, breakdown)."""
    rows = []
    for k in dims:
        for eps in breakdowns:
            s = biweight_scalars(k, breakdown=eps)
            g = ges_indices(k, cutoff=s.cutoff)
            rows.append(
                {
                    "k": int(k),
                    "breakdown": float(eps),
                    "c": s.cutoff,
                    "are_regression": s.are_regression,
                    "are_shape_direction": s.are_shape,
                    "are_scale": s.are_scale,
                    "g1": g.g1,
                    "g2": g.g2,
                    "g3": g.g3,
                }
            )
    return rows


def _argmin_index(k: int, which: str, lo: float = 0.02, hi: float = 0.5) -> dict[str, float]:
    f = lambda eps: getattr(ges_indices(k, breakdown=eps), which)
    res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
    eps = float(res.x)
    # an interior optimum can still be a boundary minimum; compare the endpoints
    candidates = [(f(lo), lo), (float(res.fun), eps), (f(hi), hi)]
    val, eps = min(candidates)
    g = ges_indices(k, breakdown=eps)
    s = biweight_scalars(k, breakdown=eps)
    return {
        "index": which,
        "k": int(k),
        "value": float(val),
        "breakdown": float(eps),
        "cutoff": g.cutoff,
        "are_regression": s.are_regression,
        "are_shape_direction": s.are_shape,
        "are_scale": s.are_scale,
        "g1": g.g1,
        "g2": g.g2,
        "g3": g.g3,
    }


def tradeoff_summary(dims) -> dict:
    """Minimizers of g1, g2, g3 over the breakdown point, per dimension."""
    return {
        "schema_id": "structcov.tradeoff-summary.v1",
        "minima": [
            _argmin_index(k, which) for k in dims for which in ("g1", "g2", "g3")
        ],
    }


def write_tradeoff_csv(rows, path: str | Path, decimals: int | None = 3) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRADEOFF_COLUMNS)
        for row in rows:
            out = []
            for col in TRADEOFF_COLUMNS:
                val = row[col]
                if col == "k":
                    out.append(str(int(val)))
                elif decimals is None:
                    out.append(repr(float(val)))
                else:
                    out.append(f"{val:.{decimals}f}")
            writer.writerow(out)


def write_tradeoff_summary(summary: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")


def render_tradeoff_figures(rows, base_path: str | Path) -> list[Path]:
    """Render one efficiency/sensitivity figure per dimension next to the CSV.

    Returns the written file paths (``<base>_k<k>.png``).
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = list(rows)
    if not rows:
        raise InvalidArgumentError("no tradeoff rows to render")
    base = Path(base_path)
    stem = base.with_suffix("")
    paths = []
    for k in sorted({int(r["k"]) for r in rows}):
        sub = sorted((r for r in rows if int(r["k"]) == k), key=lambda r: r["breakdown"])
        eps = np.array([r["breakdown"] for r in sub])
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
        for col, label in [
            ("are_regression", "regression"),
            ("are_shape_direction", "shape/direction"),
            ("are_scale", "scale"),
        ]:
            ax1.plot(eps, [r[col] for r in sub], label=label)
        ax1.set_xlabel("breakdown point")
        ax1.set_ylabel("asymptotic relative efficiency")
        ax1.legend(fontsize="small")
        for col in ("g1", "g2", "g3"):
            ax2.plot(eps, [r[col] for r in sub], label=col)
        ax2.set_xlabel("breakdown point")
        ax2.set_ylabel("gross error sensitivity")
        ax2.legend(fontsize="small")
        fig.suptitle(f"biweight S-family, k = {k}")
        fig.tight_layout()
        out = Path(f"{stem}_k{k}.png")
        fig.savefig(out, dpi=120)
        plt.close(fig)
        paths.append(out)
    return paths
