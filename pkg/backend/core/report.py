"""
Report emission: CSV tables, contour point files and the markdown summary.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .models import RunSummary, TableRow
from .utils import FLOAT_FORMAT


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Comma-separated, 17 significant digits, no index column."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def write_contour_csv(x: Sequence[float], y: Sequence[float], path: Path) -> Path:
    """`x,y` point file of one polyline."""
    return write_csv(pd.DataFrame({"x": np.asarray(x, dtype=float),
                                   "y": np.asarray(y, dtype=float)}), path)


def read_contour_csv(path: Path):
    frame = read_csv(path)
    return frame["x"].to_numpy(), frame["y"].to_numpy()


def contour_filename(scheme: str, dt: float) -> str:
    return f"contour_{scheme}_dt{float(dt)!r}.csv"


def table_frame(rows: Sequence[TableRow]) -> pd.DataFrame:
    """
    Maximum-Δt table with the SI/EX ratio per (mesh, Ca). Rows without
    both schemes get a NaN ratio.
    """
    frame = pd.DataFrame([{
        "mesh": r.mesh, "Ca": r.capillary, "scheme": r.scheme.value,
        "max_dt": r.max_dt, "reference_dt": r.reference_dt,
    } for r in rows], columns=["mesh", "Ca", "scheme", "max_dt", "reference_dt"])
    if frame.empty:
        frame["ratio"] = []
        return frame
    pivot = frame.pivot_table(index=["mesh", "Ca"], columns="scheme", values="max_dt",
                              aggfunc="first")
    ratios = {}
    for key, row in pivot.iterrows():
        ex, si = row.get("Explicit", np.nan), row.get("SemiImplicit", np.nan)
        ratios[key] = si / ex if np.isfinite(ex) and ex > 0 and np.isfinite(si) else np.nan
    frame["ratio"] = [ratios.get((m, c), np.nan) for m, c in zip(frame["mesh"], frame["Ca"])]
    return frame


class ReportGenerator:
    """Generate formatted summaries from run outcomes."""

    @staticmethod
    def generate_markdown(runs: Sequence[RunSummary], table: Optional[pd.DataFrame] = None,
                          title: str = "Shear-flow run summary") -> str:
        lines = [f"# {title}\n", "\n## Runs\n",
                 "\n| Scheme | Δt | Steps | t | Completed | Area drift | Max speed | Z range |\n",
                 "|--------|----|-------|---|-----------|------------|--------|---------|\n"]
        for run in runs:
            lines.append(
                f"| {run.scheme.value} | {run.dt:.4g} | {run.steps} | {run.t:.4g} | "
                f"{'yes' if run.completed else 'no'} | {run.area_drift:.3%} | "
                f"{run.max_speed:.4g} | {run.min_z:.4f}–{run.max_z:.4f} |\n"
            )
        failed = [r for r in runs if not r.completed and r.message]
        if failed:
            lines.append("\n## Failures\n")
            for run in failed:
                lines.append(f"- {run.scheme.value} Δt={run.dt:.4g}: {run.message}\n")
        speeds = [r for r in runs if r.tangential_speed is not None]
        if speeds:
            lines.append("\n## Tangential membrane speed\n")
            for run in speeds:
                lines.append(f"- {run.scheme.value} Δt={run.dt:.4g}: {run.tangential_speed:.4g}\n")
        if table is not None and not table.empty:
            lines.extend(["\n## Maximum stable Δt\n",
                          "\n| Mesh | Ca | Scheme | max Δt | reference | SI/EX |\n",
                          "|------|----|--------|--------|-----------|-------|\n"])
            for _, row in table.iterrows():
                ref = "" if pd.isna(row["reference_dt"]) else f"{row['reference_dt']:.3g}"
                ratio = "" if pd.isna(row["ratio"]) else f"{row['ratio']:.3g}"
                lines.append(f"| {row['mesh']} | {row['Ca']:g} | {row['scheme']} | "
                             f"{row['max_dt']:.3g} | {ref} | {ratio} |\n")
        return "".join(lines)

    @staticmethod
    def generate_json(runs: Sequence[RunSummary]) -> List[Dict[str, Any]]:
        return [run.model_dump(mode="json") for run in runs]

    @staticmethod
    def write_summary(runs: Sequence[RunSummary], out_dir: Path,
                      table: Optional[pd.DataFrame] = None) -> Path:
        path = Path(out_dir) / "summary.md"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(ReportGenerator.generate_markdown(runs, table))
        return path
