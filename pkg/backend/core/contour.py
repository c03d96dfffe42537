"""
Zero-isoline extraction by marching squares over cell centers, polyline
geometry and contour comparison.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .exceptions import ContourError
from .grid import FaceVectorField, Location, interp_face_to_cell, storage_slice
from .kinematics import LevelSet, cell_centers
from .models import ContourModel, GridSpec

logger = logging.getLogger(__name__)

# Corner order per square: 0 (i, j), 1 (i+1, j), 2 (i+1, j+1), 3 (i, j+1).
# Entries: (ambiguous, segments) with segments as pairs of corner-pair edges;
# ambiguous squares carry two alternatives chosen by the center sign.
MARCHING_SQUARES_TABLE = [
    (False, []),
    (False, [((0, 3), (2, 3))]),
    (False, [((1, 2), (2, 3))]),
    (False, [((0, 3), (1, 2))]),
    (False, [((0, 1), (1, 2))]),
    (True, ([((0, 1), (1, 2)), ((0, 3), (2, 3))], [((0, 1), (0, 3)), ((1, 2), (2, 3))])),
    (False, [((0, 1), (2, 3))]),
    (False, [((0, 1), (0, 3))]),
    (False, [((0, 1), (0, 3))]),
    (False, [((0, 1), (2, 3))]),
    (True, ([((0, 1), (0, 3)), ((1, 2), (2, 3))], [((0, 1), (1, 2)), ((0, 3), (2, 3))])),
    (False, [((0, 1), (1, 2))]),
    (False, [((0, 3), (1, 2))]),
    (False, [((1, 2), (2, 3))]),
    (False, [((0, 3), (2, 3))]),
    (False, []),
]


@dataclass
class ContourPolyline:
    """Ordered vertices of one isoline; closed polylines are counterclockwise."""
    x: np.ndarray
    y: np.ndarray
    closed: bool = True

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    @property
    def signed_area(self) -> float:
        """Shoelace formula."""
        x, y = self.x, self.y
        return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def enclosed_area(self) -> float:
        return abs(self.signed_area)

    @property
    def equivalent_radius(self) -> float:
        return float(np.sqrt(self.enclosed_area / np.pi))

    def segments(self) -> np.ndarray:
        """(n, 2, 2) segment endpoints, including the closing segment."""
        pts = self.points
        ends = np.roll(pts, -1, axis=0) if self.closed else pts[1:]
        starts = pts if self.closed else pts[:-1]
        return np.stack([starts, ends], axis=1)

    def to_model(self) -> ContourModel:
        return ContourModel(x=self.x.tolist(), y=self.y.tolist(), closed=self.closed,
                            area=self.enclosed_area)

    @classmethod
    def from_model(cls, model: ContourModel) -> "ContourPolyline":
        return cls(np.asarray(model.x, dtype=float), np.asarray(model.y, dtype=float), model.closed)


def _case_index(values) -> int:
    n = 0
    for v in values:
        if v > 0:
            n += 1
        n = n << 1
    return n >> 1


def _lerp(p0, p1, v0, v1):
    t = v0 / (v0 - v1)
    t = min(max(t, 0.0), 1.0)
    return (1.0 - t) * p0 + t * p1


def _edge_key(j: int, i: int, pair: Tuple[int, int]) -> Tuple[str, int, int]:
    a, b = sorted(pair)
    if (a, b) == (0, 1):
        return ("h", j, i)
    if (a, b) == (2, 3):
        return ("h", j + 1, i)
    if (a, b) == (0, 3):
        return ("v", j, i)
    return ("v", j, i + 1)


def _segments(values: np.ndarray, xc: np.ndarray, yc: np.ndarray):
    """Marching-squares segments keyed by the grid edges they end on."""
    positive = values > 0
    corners = (positive[:-1, :-1].astype(int) + positive[:-1, 1:] + positive[1:, 1:] + positive[1:, :-1])
    cut_j, cut_i = np.nonzero((corners > 0) & (corners < 4))
    points: Dict[Tuple[str, int, int], np.ndarray] = {}
    segments: List[Tuple[Tuple, Tuple]] = []
    for j, i in zip(cut_j, cut_i):
        pos = [np.array((xc[i], yc[j])), np.array((xc[i + 1], yc[j])),
               np.array((xc[i + 1], yc[j + 1])), np.array((xc[i], yc[j + 1]))]
        vals = [values[j, i], values[j, i + 1], values[j + 1, i + 1], values[j + 1, i]]
        ambiguous, edges = MARCHING_SQUARES_TABLE[_case_index(vals)]
        if ambiguous:
            edges = edges[int(np.mean(vals) > 0)]
        for e0, e1 in edges:
            keys = []
            for a, b in (e0, e1):
                key = _edge_key(j, i, (a, b))
                if key not in points:
                    points[key] = _lerp(pos[a], pos[b], vals[a], vals[b])
                keys.append(key)
            segments.append((keys[0], keys[1]))
    return points, segments


def _chain(segments) -> List[Tuple[List, bool]]:
    """Join segments sharing edge keys into polylines."""
    adjacency: Dict[Tuple, List[int]] = {}
    for k, (a, b) in enumerate(segments):
        adjacency.setdefault(a, []).append(k)
        adjacency.setdefault(b, []).append(k)
    used = np.zeros(len(segments), dtype=bool)
    chains = []
    # start open chains at their free ends
    order = sorted(range(len(segments)),
                   key=lambda k: min(len(adjacency[segments[k][0]]), len(adjacency[segments[k][1]])))
    for start in order:
        if used[start]:
            continue
        a, b = segments[start]
        if len(adjacency[b]) == 1 and len(adjacency[a]) > 1:
            a, b = b, a
        keys = [a, b]
        used[start] = True
        current = b
        closed = False
        while True:
            nxt = [k for k in adjacency[current] if not used[k]]
            if not nxt:
                closed = current == keys[0]
                break
            k = nxt[0]
            used[k] = True
            s0, s1 = segments[k]
            current = s1 if s0 == current else s0
            if current == keys[0]:
                closed = True
                break
            keys.append(current)
        chains.append((keys, closed))
    return chains


def contour_from_array(values: np.ndarray, grid: GridSpec) -> List[ContourPolyline]:
    """All zero isolines of a cell-centered storage array."""
    xc = grid.x_min + (np.arange(grid.nx) + 0.5) * grid.dx
    yc = grid.y_min + (np.arange(grid.ny) + 0.5) * grid.dy
    points, segments = _segments(np.asarray(values, dtype=float), xc, yc)
    polylines = []
    for keys, closed in _chain(segments):
        pts = np.array([points[k] for k in keys])
        line = ContourPolyline(pts[:, 0].copy(), pts[:, 1].copy(), closed)
        if closed and line.signed_area < 0:
            line = ContourPolyline(line.x[::-1].copy(), line.y[::-1].copy(), True)
        polylines.append(line)
    return polylines


def extract_contour(ls: LevelSet) -> ContourPolyline:
    """The single closed membrane contour; ContourError otherwise."""
    lines = contour_from_array(ls.phi.interior, ls.grid)
    if len(lines) != 1 or not lines[0].closed:
        closed = all(line.closed for line in lines)
        logger.error("contour extraction found %d component(s), closed=%s", len(lines), closed)
        raise ContourError(len(lines), closed)
    return lines[0]


def _point_segment_distances(points: np.ndarray, segments: np.ndarray) -> np.ndarray:
    """min over segments of the distance from each point."""
    a = segments[:, 0, :][None, :, :]
    b = segments[:, 1, :][None, :, :]
    p = points[:, None, :]
    ab = b - a
    denom = np.sum(ab * ab, axis=-1)
    t = np.where(denom > 0, np.sum((p - a) * ab, axis=-1) / np.where(denom > 0, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * ab
    return np.sqrt(np.sum((p - closest) ** 2, axis=-1)).min(axis=1)


def hausdorff_distance(first: ContourPolyline, second: ContourPolyline) -> float:
    """Symmetric Hausdorff distance from vertices to the other polyline's segments."""
    d12 = _point_segment_distances(first.points, second.segments()).max()
    d21 = _point_segment_distances(second.points, first.segments()).max()
    return float(max(d12, d21))


def tangential_velocity(contour: ContourPolyline, vel: FaceVectorField) -> np.ndarray:
    """u·t at the contour vertices, with cell-averaged velocity interpolated bilinearly."""
    grid = vel.grid
    uc, vc = interp_face_to_cell(vel)
    sl = storage_slice(grid, Location.CELL)
    xc, yc = cell_centers(grid)
    axes = (yc[:, 0], xc[0, :])
    fu = RegularGridInterpolator(axes, uc[sl], bounds_error=False, fill_value=None)
    fv = RegularGridInterpolator(axes, vc[sl], bounds_error=False, fill_value=None)
    query = np.column_stack([contour.y, contour.x])
    tx = np.roll(contour.x, -1) - np.roll(contour.x, 1)
    ty = np.roll(contour.y, -1) - np.roll(contour.y, 1)
    norm = np.hypot(tx, ty)
    norm = np.where(norm > 0, norm, 1.0)
    return (fu(query) * tx + fv(query) * ty) / norm


def contour_tangential_speed(contour: ContourPolyline, vel: FaceVectorField) -> float:
    """Length-weighted mean of |u·t| along a closed contour."""
    speed = np.abs(tangential_velocity(contour, vel))
    seg = contour.segments()
    lengths = np.hypot(*(seg[:, 1, :] - seg[:, 0, :]).T)
    weights = 0.5 * (lengths + np.roll(lengths, 1))
    total = weights.sum()
    return float(np.sum(speed * weights) / total) if total > 0 else 0.0
