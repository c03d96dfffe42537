"""
Shear-flow membrane benchmark: case setup, the time loop with its
artifacts, maximum-stable-Δt search and the contour comparison sets.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .config import load_preset, load_presets, reference_dt
from .contour import (
    ContourPolyline,
    contour_tangential_speed,
    extract_contour,
    hausdorff_distance,
)
from .exceptions import ConfigurationError, NumericalFailure
from .grid import FaceVectorField, Location, storage_slice, write_snapshot
from .kinematics import BackwardMap, CircleLevelSet, level_set_from
from .models import CaseConfig, RunSummary, SchemeMode, TableRow
from .ns_solver import SolverState, make_flow_state, step
from .report import ReportGenerator, contour_filename, table_frame, write_contour_csv, write_csv

logger = logging.getLogger(__name__)


@dataclass
class RunReport:
    state: SolverState
    summary: RunSummary
    initial_contour: ContourPolyline
    final_contour: Optional[ContourPolyline]
    areas: pd.DataFrame
    diagnostics: pd.DataFrame
    files: Dict[str, Path] = field(default_factory=dict)


def init_shear_case(config: CaseConfig) -> SolverState:
    """
    u = (γ̇y, 0), φ = distance to the circle of radius a, Y = identity,
    p = 0, blended ρ and μ.
    """
    grid = config.grid
    boundary = config.boundary
    phi0 = CircleLevelSet(config.radius)
    ls = level_set_from(grid, phi0, config.epsilon)
    vel = FaceVectorField.from_functions(grid, lambda x, y: config.gamma_dot * y, lambda x, y: 0.0 * x)
    flow = make_flow_state(grid, vel, ls, config, boundary)
    logger.info("shear case %dx%d Ca=%g K=%.6g mu=%.6g dt=%g scheme=%s", config.nx, config.ny,
                config.capillary, config.K, config.mu_outer, config.dt, config.scheme.value)
    return SolverState(flow, ls, BackwardMap.identity(grid), phi0=phi0)


def _write_snapshots(state: SolverState, out_dir: Path, index: int) -> None:
    grid = state.flow.grid
    t = state.flow.t
    cell = storage_slice(grid, Location.CELL)
    fields = {
        "phi": state.ls.phi.data[cell], "y1": state.ymap.y1.data[cell], "y2": state.ymap.y2.data[cell],
        "p": state.flow.p.data[cell], "u": state.flow.vel.u_interior, "v": state.flow.vel.v_interior,
    }
    for name, values in fields.items():
        write_snapshot(values, grid, t, out_dir / "snapshots" / f"{name}_{index:04d}.txt")


def _tag(config: CaseConfig, dt: float) -> str:
    return f"{config.scheme.value}_dt{float(dt)!r}"


def run(config: CaseConfig, out_dir: Optional[Path] = None, state: Optional[SolverState] = None,
        snapshots: bool = True) -> RunReport:
    """
    March to t_final. Raises BlowUpError, SolverError or
    DegenerateDeformationError from the step; the final contour is
    extracted and written when out_dir is given.
    """
    state = state or init_shear_case(config)
    dt = config.dt
    out_dir = Path(out_dir) if out_dir is not None else None
    initial = extract_contour(state.ls)
    area0 = initial.enclosed_area
    times, areas = [state.flow.t], [area0]
    files: Dict[str, Path] = {}
    next_snapshot = 0.0
    snap_index = 0
    if out_dir is not None:
        files["initial_contour"] = write_contour_csv(initial.x, initial.y, out_dir / "contour_initial.csv")

    while state.flow.t < config.t_final - 1e-12 * config.t_final:
        if out_dir is not None and snapshots and config.snapshot_every > 0 \
                and state.flow.t >= next_snapshot - 1e-12:
            _write_snapshots(state, out_dir, snap_index)
            snap_index += 1
            next_snapshot += config.snapshot_every
        h = min(dt, config.t_final - state.flow.t)
        state = step(state, config, dt=h)
        times.append(state.flow.t)
        areas.append(extract_contour(state.ls).enclosed_area)

    final = extract_contour(state.ls)
    history = pd.DataFrame([d.__dict__ for d in state.history])
    area_frame = pd.DataFrame({"t": times, "area": areas})
    z_min = float(history["min_z"].min()) if not history.empty else 1.0
    z_max = float(history["max_z"].max()) if not history.empty else 1.0
    max_speed = float(history["max_u"].max()) if not history.empty else state.flow.vel.max_speed()
    summary = RunSummary(
        scheme=config.scheme, dt=dt, steps=state.flow.step_index, t=state.flow.t, completed=True,
        initial_area=area0, final_area=final.enclosed_area,
        area_drift=abs(final.enclosed_area - area0) / area0,
        max_speed=max_speed, min_z=z_min, max_z=z_max,
        final_contour=final.to_model(),
        tangential_speed=contour_tangential_speed(final, state.flow.vel),
    )
    if out_dir is not None:
        tag = _tag(config, dt)
        if snapshots and config.snapshot_every > 0:
            _write_snapshots(state, out_dir, snap_index)
        files["contour"] = write_contour_csv(final.x, final.y,
                                             out_dir / contour_filename(config.scheme.value, dt))
        files["area"] = write_csv(area_frame, out_dir / f"area_{tag}.csv")
        files["diagnostics"] = write_csv(history, out_dir / f"diagnostics_{tag}.csv")
    logger.info("run finished: t=%.6g steps=%d area drift=%.3e", state.flow.t,
                state.flow.step_index, summary.area_drift)
    return RunReport(state, summary, initial, final, area_frame, history, files)


def try_run(config: CaseConfig, out_dir: Optional[Path] = None) -> RunSummary:
    """run() with numerical failures folded into an incomplete summary."""
    try:
        return run(config, out_dir).summary
    except NumericalFailure as exc:
        logger.info("run with dt=%g failed: %s", config.dt, exc)
        return RunSummary(scheme=config.scheme, dt=config.dt, steps=0, t=0.0, completed=False,
                          initial_area=math.nan, final_area=math.nan, area_drift=math.nan,
                          max_speed=math.nan, min_z=math.nan, max_z=math.nan, message=str(exc))


def passes(config: CaseConfig, dt: float, scheme: SchemeMode) -> bool:
    """Completes to t_final with a single closed final contour."""
    trial = config.model_copy(update={"dt": dt, "scheme": scheme})
    return try_run(trial).completed


def max_stable_dt_search(config: CaseConfig, scheme: SchemeMode, dt_lo: float, dt_hi: float,
                         rel_tol: float = 0.1) -> float:
    """Bisection on `passes` down to (hi − lo)/lo ≤ rel_tol."""
    scheme = SchemeMode(scheme)
    if not 0 < dt_lo < dt_hi:
        raise ConfigurationError(f"invalid bracket [{dt_lo}, {dt_hi}]")
    if not passes(config, dt_lo, scheme):
        raise ConfigurationError(f"lower bracket dt={dt_lo:g} does not pass for {scheme.value}")
    if passes(config, dt_hi, scheme):
        raise ConfigurationError(f"upper bracket dt={dt_hi:g} already passes for {scheme.value}")
    lo, hi = dt_lo, dt_hi
    while (hi - lo) / lo > rel_tol:
        mid = 0.5 * (lo + hi)
        if passes(config, mid, scheme):
            lo = mid
        else:
            hi = mid
        logger.info("%s bracket [%.6g, %.6g]", scheme.value, lo, hi)
    return lo


def table_sweep(cases: Sequence[str], meshes: Sequence[str] = ("coarse",),
                rel_tol: float = 0.1, out_dir: Optional[Path] = None) -> pd.DataFrame:
    """
    Maximum stable Δt per preset, mesh and scheme, bracketed around the
    published value by [0.25, 4]×.
    """
    rows: List[TableRow] = []
    for name in cases:
        for mesh in meshes:
            config = load_preset(name, mesh)
            for scheme in (SchemeMode.Explicit, SchemeMode.SemiImplicit):
                ref = reference_dt(name, mesh, scheme.value)
                guess = ref or config.dt
                found = max_stable_dt_search(config, scheme, 0.25 * guess, 4.0 * guess, rel_tol)
                rows.append(TableRow(mesh=mesh, capillary=config.capillary, scheme=scheme,
                                     max_dt=found, reference_dt=ref))
    frame = table_frame(rows)
    if out_dir is not None:
        write_csv(frame, Path(out_dir) / "max_dt_table.csv")
    return frame


def figure_contour_sets(name: str, mesh: str, out_dir: Path,
                        dts: Optional[Dict[str, Sequence[float]]] = None) -> Dict[str, Path]:
    """
    Final contours of the explicit run at its limit and of semi-implicit
    runs at larger Δt, plus the pairwise Hausdorff distances to the
    explicit contour.
    """
    out_dir = Path(out_dir)
    dts = dts or load_presets()["figure_dts"][name]
    base = load_preset(name, mesh)
    files: Dict[str, Path] = {}
    contours: Dict[str, ContourPolyline] = {}
    summaries: List[RunSummary] = []
    for scheme_name, values in dts.items():
        for dt in values:
            config = base.model_copy(update={"scheme": SchemeMode(scheme_name), "dt": dt})
            report = run(config, out_dir, snapshots=False)
            tag = _tag(config, dt)
            files[tag] = report.files["contour"]
            contours[tag] = report.final_contour
            summaries.append(report.summary)
    reference = [tag for tag in contours if tag.startswith(SchemeMode.Explicit.value)]
    if reference:
        ref = contours[reference[0]]
        rows = [{"run": tag, "hausdorff": hausdorff_distance(ref, c),
                 "hausdorff_dx": hausdorff_distance(ref, c) / base.grid.dx}
                for tag, c in contours.items()]
        files["hausdorff"] = write_csv(pd.DataFrame(rows), out_dir / "hausdorff.csv")
    files["summary"] = ReportGenerator.write_summary(summaries, out_dir)
    return files


def summarize_runs(summaries: Sequence[RunSummary], out_dir: Path,
                   table: Optional[pd.DataFrame] = None) -> Path:
    return ReportGenerator.write_summary(summaries, out_dir, table)


def shape_is_stationary(previous: ContourPolyline, current: ContourPolyline, dx: float) -> bool:
    return hausdorff_distance(previous, current) <= dx


def area_drift(areas: Sequence[float]) -> float:
    a = np.asarray(areas, dtype=float)
    return float(np.abs(a - a[0]).max() / a[0])
