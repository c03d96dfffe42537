"""
Uniform staggered (MAC) grid: field containers, ghost cells, interpolation
between staggering locations and the discrete operators shared by the
transport, elasticity and Navier-Stokes modules.

Arrays are indexed [j, i] (row = y, column = x, x fastest) and always carry
GHOST layers on every side. Storage regions:

    cell     (ny,   nx)      centers
    u face   (ny,   nx + 1)  vertical faces, boundary faces included
    v face   (ny + 1, nx)    horizontal faces, boundary faces included
    corner   (ny + 1, nx + 1)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .exceptions import ConfigurationError
from .models import BoundaryKind, BoundarySpec, GridSpec, SideCondition, SideSet

logger = logging.getLogger(__name__)

GHOST = 3


class Location(Enum):
    """Staggering locations; the flags tell which axes sit on faces."""
    CELL = (False, False)
    UFACE = (True, False)
    VFACE = (False, True)
    CORNER = (True, True)

    @property
    def x_face(self) -> bool:
        return self.value[0]

    @property
    def y_face(self) -> bool:
        return self.value[1]

    def shifted(self, axis: str) -> "Location":
        """Location reached by a half-cell shift along `axis`."""
        flags = (not self.x_face, self.y_face) if axis == "x" else (self.x_face, not self.y_face)
        return Location(flags)


def full_shape(grid: GridSpec, loc: Location) -> Tuple[int, int]:
    """Array shape of a location including ghosts."""
    return (grid.ny + 2 * GHOST + int(loc.y_face), grid.nx + 2 * GHOST + int(loc.x_face))


def storage_shape(grid: GridSpec, loc: Location) -> Tuple[int, int]:
    return (grid.ny + int(loc.y_face), grid.nx + int(loc.x_face))


def storage_slice(grid: GridSpec, loc: Location) -> Tuple[slice, slice]:
    ny, nx = storage_shape(grid, loc)
    return (slice(GHOST, GHOST + ny), slice(GHOST, GHOST + nx))


def coordinates(grid: GridSpec, loc: Location) -> Tuple[np.ndarray, np.ndarray]:
    """Physical (X, Y) of every entry of a full (ghosted) array."""
    ny, nx = full_shape(grid, loc)
    ox = 0.0 if loc.x_face else 0.5
    oy = 0.0 if loc.y_face else 0.5
    x = grid.x_min + (np.arange(nx) - GHOST + ox) * grid.dx
    y = grid.y_min + (np.arange(ny) - GHOST + oy) * grid.dy
    return np.meshgrid(x, y)


@dataclass
class CellField:
    """Cell-centered scalar with ghost layers."""
    grid: GridSpec
    data: np.ndarray

    @classmethod
    def zeros(cls, grid: GridSpec) -> "CellField":
        return cls(grid, np.zeros(full_shape(grid, Location.CELL)))

    @classmethod
    def full(cls, grid: GridSpec, value: float) -> "CellField":
        return cls(grid, np.full(full_shape(grid, Location.CELL), float(value)))

    @classmethod
    def from_function(cls, grid: GridSpec, func: Callable) -> "CellField":
        """Sample func(x, y) on centers, ghosts included."""
        X, Y = coordinates(grid, Location.CELL)
        return cls(grid, np.asarray(func(X, Y), dtype=float) * np.ones_like(X))

    @property
    def interior(self) -> np.ndarray:
        return self.data[storage_slice(self.grid, Location.CELL)]

    @interior.setter
    def interior(self, values: np.ndarray) -> None:
        self.data[storage_slice(self.grid, Location.CELL)] = values

    def copy(self) -> "CellField":
        return CellField(self.grid, self.data.copy())


@dataclass
class FaceVectorField:
    """Face-centered velocity: u on vertical faces, v on horizontal faces."""
    grid: GridSpec
    u: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, grid: GridSpec) -> "FaceVectorField":
        return cls(grid, np.zeros(full_shape(grid, Location.UFACE)),
                   np.zeros(full_shape(grid, Location.VFACE)))

    @classmethod
    def from_functions(cls, grid: GridSpec, fu: Callable, fv: Callable) -> "FaceVectorField":
        """Sample fu on u faces and fv on v faces, ghosts included."""
        Xu, Yu = coordinates(grid, Location.UFACE)
        Xv, Yv = coordinates(grid, Location.VFACE)
        u = np.asarray(fu(Xu, Yu), dtype=float) * np.ones_like(Xu)
        v = np.asarray(fv(Xv, Yv), dtype=float) * np.ones_like(Xv)
        return cls(grid, u, v)

    @property
    def u_interior(self) -> np.ndarray:
        return self.u[storage_slice(self.grid, Location.UFACE)]

    @property
    def v_interior(self) -> np.ndarray:
        return self.v[storage_slice(self.grid, Location.VFACE)]

    def stacked(self) -> np.ndarray:
        """Storage values, u faces then v faces (momentum unknown ordering)."""
        return np.concatenate([self.u_interior.ravel(), self.v_interior.ravel()])

    def set_stacked(self, values: np.ndarray) -> None:
        nu = self.u_interior.size
        self.u[storage_slice(self.grid, Location.UFACE)] = values[:nu].reshape(
            self.u_interior.shape)
        self.v[storage_slice(self.grid, Location.VFACE)] = values[nu:].reshape(
            self.v_interior.shape)

    def extended(self) -> np.ndarray:
        """Full arrays, u then v, ghosts included."""
        return np.concatenate([self.u.ravel(), self.v.ravel()])

    def max_speed(self) -> float:
        return float(max(np.abs(self.u_interior).max(), np.abs(self.v_interior).max()))

    def copy(self) -> "FaceVectorField":
        return FaceVectorField(self.grid, self.u.copy(), self.v.copy())


@dataclass
class Tensor2:
    """Per-cell 2x2 tensor t[a][b], a = row, b = column."""
    xx: np.ndarray
    xy: np.ndarray
    yx: np.ndarray
    yy: np.ndarray

    def transpose(self) -> "Tensor2":
        return Tensor2(self.xx, self.yx, self.xy, self.yy)

    def det(self) -> np.ndarray:
        return self.xx * self.yy - self.xy * self.yx

    def trace(self) -> np.ndarray:
        return self.xx + self.yy

    def component(self, a: int, b: int) -> np.ndarray:
        return ((self.xx, self.xy), (self.yx, self.yy))[a][b]


@dataclass
class SymTensor2:
    """Per-cell symmetric 2x2 tensor."""
    xx: np.ndarray
    xy: np.ndarray
    yy: np.ndarray

    @property
    def yx(self) -> np.ndarray:
        return self.xy

    def det(self) -> np.ndarray:
        return self.xx * self.yy - self.xy * self.xy

    def trace(self) -> np.ndarray:
        return self.xx + self.yy

    def apply(self, n1: np.ndarray, n2: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Matrix-vector product per cell."""
        return self.xx * n1 + self.xy * n2, self.xy * n1 + self.yy * n2

    def component(self, a: int, b: int) -> np.ndarray:
        return ((self.xx, self.xy), (self.xy, self.yy))[a][b]

    @classmethod
    def zeros_like(cls, ref: np.ndarray) -> "SymTensor2":
        return cls(np.zeros_like(ref), np.zeros_like(ref), np.zeros_like(ref))

    def copy(self) -> "SymTensor2":
        return SymTensor2(self.xx.copy(), self.xy.copy(), self.yy.copy())


# ---------------------------------------------------------------------------
# Ghost cells
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GhostMap:
    """
    Affine map from storage values to the full ghosted array:
    full = matrix @ storage + offset.
    """
    matrix: sp.csr_matrix
    offset: np.ndarray
    shape: Tuple[int, int]

    def apply(self, storage_values: np.ndarray) -> np.ndarray:
        return (self.matrix @ storage_values.ravel() + self.offset).reshape(self.shape)


def _axis_rule(side: SideCondition, index: int, n: int, face_type: bool, low: bool,
               tangential_value: float) -> Tuple[list, float]:
    """
    Express one out-of-range index along an axis through in-range indices.
    Returns ([(coef, index)], constant).
    """
    kind = side.kind
    if kind == BoundaryKind.periodic:
        period = n - 1 if face_type else n
        return [(1.0, index + period if low else index - period)], 0.0
    if kind == BoundaryKind.neumann:
        return [(1.0, 0 if low else n - 1)], 0.0
    if kind in (BoundaryKind.dirichlet, BoundaryKind.moving_wall):
        if face_type:
            # boundary face itself is stored; mirror about it
            if low:
                return [(2.0, 0), (-1.0, -index)], 0.0
            return [(2.0, n - 1), (-1.0, 2 * (n - 1) - index)], 0.0
        mirror = -1 - index if low else 2 * n - 1 - index
        return [(-1.0, mirror)], 2.0 * tangential_value
    raise ConfigurationError(f"unknown boundary condition kind: {kind!r}")


@lru_cache(maxsize=64)
def ghost_map(grid: GridSpec, sides: SideSet, loc: Location) -> GhostMap:
    """Build (and cache) the ghost map of a location under a side set."""
    sy, sx = storage_shape(grid, loc)
    fy, fx = full_shape(grid, loc)

    memo: Dict[Tuple[int, int], Tuple[Dict[int, float], float]] = {}

    def resolve(j: int, i: int, depth: int = 0) -> Tuple[Dict[int, float], float]:
        if depth > 8:
            raise ConfigurationError("ghost resolution did not terminate; grid too small")
        if (j, i) in memo:
            return memo[(j, i)]
        if 0 <= i < sx and 0 <= j < sy:
            result = ({j * sx + i: 1.0}, 0.0)
        elif not (0 <= i < sx):
            low = i < 0
            side = sides.left if low else sides.right
            terms, const = _axis_rule(side, i, sx, loc.x_face, low, side.value)
            result = _combine([(c, (j, k)) for c, k in terms], const, resolve, depth)
        else:
            low = j < 0
            side = sides.bottom if low else sides.top
            terms, const = _axis_rule(side, j, sy, loc.y_face, low, side.value)
            result = _combine([(c, (k, i)) for c, k in terms], const, resolve, depth)
        memo[(j, i)] = result
        return result

    rows, cols, vals = [], [], []
    offset = np.zeros(fy * fx)
    for J in range(fy):
        for I in range(fx):
            coeffs, const = resolve(J - GHOST, I - GHOST)
            row = J * fx + I
            offset[row] = const
            for col, val in coeffs.items():
                if val != 0.0:
                    rows.append(row)
                    cols.append(col)
                    vals.append(val)
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(fy * fx, sy * sx))
    return GhostMap(matrix, offset, (fy, fx))


def _combine(terms, const, resolve, depth):
    coeffs: Dict[int, float] = {}
    total = const
    for coef, (j, i) in terms:
        sub, sub_const = resolve(j, i, depth + 1)
        total += coef * sub_const
        for col, val in sub.items():
            coeffs[col] = coeffs.get(col, 0.0) + coef * val
    return coeffs, total


def _set_normal_faces(vel: FaceVectorField, sides: SideSet) -> None:
    """Write prescribed normal velocities on Dirichlet / wall boundary faces."""
    wall = (BoundaryKind.dirichlet, BoundaryKind.moving_wall)
    su = storage_slice(vel.grid, Location.UFACE)
    sv = storage_slice(vel.grid, Location.VFACE)
    u = vel.u[su]
    v = vel.v[sv]
    if sides.left.kind in wall:
        u[:, 0] = sides.left.normal
    if sides.right.kind in wall:
        u[:, -1] = sides.right.normal
    if sides.bottom.kind in wall:
        v[0, :] = sides.bottom.normal
    if sides.top.kind in wall:
        v[-1, :] = sides.top.normal


def fill_ghosts(field_, spec: BoundarySpec, family: str = "scalar"):
    """
    Populate ghost layers in place and return the field.

    CellField uses the `family` side set ("scalar" or "pressure");
    FaceVectorField always uses the velocity side set and also writes
    the prescribed normal velocity on wall boundary faces.
    """
    grid = field_.grid
    if isinstance(field_, FaceVectorField):
        sides = spec.velocity
        _set_normal_faces(field_, sides)
        for name, loc in (("u", Location.UFACE), ("v", Location.VFACE)):
            arr = getattr(field_, name)
            gmap = ghost_map(grid, _velocity_sides(sides, loc), loc)
            arr[...] = gmap.apply(arr[storage_slice(grid, loc)])
        return field_
    if isinstance(field_, CellField):
        sides = getattr(spec, family, None)
        if sides is None:
            raise ConfigurationError(f"unknown field family '{family}'")
        gmap = ghost_map(grid, sides, Location.CELL)
        field_.data[...] = gmap.apply(field_.interior)
        return field_
    raise ConfigurationError(f"cannot fill ghosts of {type(field_).__name__}")


def fill_array_ghosts(arr: np.ndarray, grid: GridSpec, sides: SideSet) -> np.ndarray:
    """fill_ghosts for a bare cell-centered array (returns a new array)."""
    return ghost_map(grid, sides, Location.CELL).apply(arr[storage_slice(grid, Location.CELL)])


@lru_cache(maxsize=64)
def _velocity_sides(sides: SideSet, loc: Location) -> SideSet:
    """
    Tangential Neumann sides of a velocity component keep their kind;
    normal boundary faces use the `normal` value, tangential ones `value`.
    """
    def pick(side: SideCondition, normal_axis: bool) -> SideCondition:
        if normal_axis:
            return SideCondition(kind=side.kind, value=side.normal, normal=side.normal)
        return side
    if loc == Location.UFACE:
        return SideSet(left=pick(sides.left, True), right=pick(sides.right, True),
                       bottom=pick(sides.bottom, False), top=pick(sides.top, False))
    return SideSet(left=pick(sides.left, False), right=pick(sides.right, False),
                   bottom=pick(sides.bottom, True), top=pick(sides.top, True))


def velocity_ghost_maps(grid: GridSpec, spec: BoundarySpec) -> Tuple[GhostMap, GhostMap]:
    return (ghost_map(grid, _velocity_sides(spec.velocity, Location.UFACE), Location.UFACE),
            ghost_map(grid, _velocity_sides(spec.velocity, Location.VFACE), Location.VFACE))


# ---------------------------------------------------------------------------
# Staggered operator algebra (sparse, on full ghosted arrays)
# ---------------------------------------------------------------------------

class StaggeredOps:
    """
    Sparse half-cell difference / average operators between locations.

    All matrices act on flattened full arrays. Rows whose stencil would
    leave the array are empty; they only occur deep in the ghost layers.
    """

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.size = {loc: int(np.prod(full_shape(grid, loc))) for loc in Location}
        self.n_ext = self.size[Location.UFACE] + self.size[Location.VFACE]

    def _shift(self, src: Location, axis: str, w_minus: float, w_plus: float) -> sp.csr_matrix:
        dst = src.shifted(axis)
        sy, sx = full_shape(self.grid, src)
        dy_, dx_ = full_shape(self.grid, dst)
        J, I = np.meshgrid(np.arange(dy_), np.arange(dx_), indexing="ij")
        J, I = J.ravel(), I.ravel()
        src_face = src.x_face if axis == "x" else src.y_face
        k = I if axis == "x" else J
        if src_face:
            lo, hi = k, k + 1
            valid = np.ones_like(k, dtype=bool)
        else:
            lo, hi = k - 1, k
            n_src = sx if axis == "x" else sy
            valid = (lo >= 0) & (hi < n_src)
        rows = (J * dx_ + I)[valid]
        if axis == "x":
            c_lo = J[valid] * sx + lo[valid]
            c_hi = J[valid] * sx + hi[valid]
        else:
            c_lo = lo[valid] * sx + I[valid]
            c_hi = hi[valid] * sx + I[valid]
        data = np.concatenate([np.full(rows.size, w_minus), np.full(rows.size, w_plus)])
        return sp.csr_matrix(
            (data, (np.concatenate([rows, rows]), np.concatenate([c_lo, c_hi]))),
            shape=(self.size[dst], self.size[src]),
        )

    @lru_cache(maxsize=None)
    def diff(self, src: Location, axis: str) -> sp.csr_matrix:
        h = self.grid.dx if axis == "x" else self.grid.dy
        return self._shift(src, axis, -1.0 / h, 1.0 / h)

    @lru_cache(maxsize=None)
    def avg(self, src: Location, axis: str) -> sp.csr_matrix:
        return self._shift(src, axis, 0.5, 0.5)

    @lru_cache(maxsize=None)
    def interp(self, src: Location, dst: Location) -> sp.csr_matrix:
        """Average along every axis on which src and dst differ (x first)."""
        op = sp.identity(self.size[src], format="csr")
        loc = src
        for axis, differs in (("x", src.x_face != dst.x_face), ("y", src.y_face != dst.y_face)):
            if differs:
                op = self.avg(loc, axis) @ op
                loc = loc.shifted(axis)
        return op.tocsr()

    @lru_cache(maxsize=None)
    def select(self, component: str) -> sp.csr_matrix:
        """Extended velocity vector -> one component's full array."""
        nu, nv = self.size[Location.UFACE], self.size[Location.VFACE]
        if component == "u":
            return sp.hstack([sp.identity(nu), sp.csr_matrix((nu, nv))]).tocsr()
        if component == "v":
            return sp.hstack([sp.csr_matrix((nv, nu)), sp.identity(nv)]).tocsr()
        raise ConfigurationError(f"unknown velocity component '{component}'")

    @lru_cache(maxsize=None)
    def interior_rows(self, component: str, periodic: bool = False) -> np.ndarray:
        """
        Mask of storage faces that carry a full equation (full-array flat).
        Boundary faces are excluded; on a periodic axis the low boundary
        face is a genuine unknown and is kept.
        """
        loc = Location.UFACE if component == "u" else Location.VFACE
        mask = np.zeros(full_shape(self.grid, loc), dtype=bool)
        g, nx, ny = GHOST, self.grid.nx, self.grid.ny
        first = g if periodic else g + 1
        if component == "u":
            mask[g:g + ny, first:g + nx] = True
        else:
            mask[first:g + ny, g:g + nx] = True
        return mask.ravel()

    def embed_rows(self, component: str, block: sp.spmatrix, periodic: bool = False) -> sp.csr_matrix:
        """Place component rows (masked to equation faces) into the extended space."""
        mask = sp.diags(self.interior_rows(component, periodic).astype(float))
        return (self.select(component).T @ (mask @ block)).tocsr()

    @lru_cache(maxsize=None)
    def restriction(self, loc: Location) -> sp.csr_matrix:
        """Full array -> storage entries of a location."""
        fy, fx = full_shape(self.grid, loc)
        sy, sx = storage_shape(self.grid, loc)
        J, I = np.meshgrid(np.arange(sy) + GHOST, np.arange(sx) + GHOST, indexing="ij")
        cols = (J * fx + I).ravel()
        return sp.csr_matrix((np.ones(cols.size), (np.arange(cols.size), cols)),
                             shape=(sy * sx, fy * fx))

    @lru_cache(maxsize=None)
    def velocity_restriction(self) -> sp.csr_matrix:
        """Extended velocity -> stored unknowns (u faces then v faces)."""
        return sp.block_diag([self.restriction(Location.UFACE),
                              self.restriction(Location.VFACE)], format="csr")


@lru_cache(maxsize=16)
def staggered_ops(grid: GridSpec) -> StaggeredOps:
    return StaggeredOps(grid)


@lru_cache(maxsize=16)
def velocity_prolongation(grid: GridSpec, spec: BoundarySpec) -> Tuple[sp.csr_matrix, np.ndarray]:
    """
    (P, c) with extended = P @ unknowns + c, unknowns being stored u then v
    faces. Used to fold ghost references out of assembled operators.
    """
    gu, gv = velocity_ghost_maps(grid, spec)
    P = sp.block_diag([gu.matrix, gv.matrix], format="csr")
    c = np.concatenate([gu.offset, gv.offset])
    return P, c


# ---------------------------------------------------------------------------
# Pointwise interpolation and differential operators
# ---------------------------------------------------------------------------

def interp_cell_to_corner(m: CellField, i: int, j: int) -> float:
    """
    Mean of the four cells around corner (i, j); corner (i, j) sits at
    (x_min + i dx, y_min + j dy), i in 0..nx, j in 0..ny.
    """
    J, I = j + GHOST, i + GHOST
    d = m.data
    return 0.25 * (d[J - 1, I - 1] + d[J - 1, I] + d[J, I - 1] + d[J, I])


def cell_to_corners(values: np.ndarray) -> np.ndarray:
    """4-point corner means of a full cell array (full corner shape, edges padded)."""
    inner = 0.25 * (values[:-1, :-1] + values[:-1, 1:] + values[1:, :-1] + values[1:, 1:])
    return np.pad(inner, 1, mode="edge")


def interp_face_to_cell(vel: FaceVectorField) -> Tuple[np.ndarray, np.ndarray]:
    """Two-point averages of u and v at cell centers (full cell arrays)."""
    return 0.5 * (vel.u[:, :-1] + vel.u[:, 1:]), 0.5 * (vel.v[:-1, :] + vel.v[1:, :])


def interp_face_to_other_face(vel: FaceVectorField) -> Tuple[np.ndarray, np.ndarray]:
    """
    4-point interpolations: v at u-face locations and u at v-face locations
    (full arrays, outermost ring padded).
    """
    v = vel.v
    v_at_u = 0.25 * (v[:-1, :-1] + v[:-1, 1:] + v[1:, :-1] + v[1:, 1:])
    v_at_u = np.pad(v_at_u, ((0, 0), (1, 1)), mode="edge")
    u = vel.u
    u_at_v = 0.25 * (u[:-1, :-1] + u[:-1, 1:] + u[1:, :-1] + u[1:, 1:])
    u_at_v = np.pad(u_at_v, ((1, 1), (0, 0)), mode="edge")
    return v_at_u, u_at_v


def divergence(vel: FaceVectorField) -> CellField:
    """MAC divergence on interior cells; ghosts left at zero."""
    grid = vel.grid
    g, nx, ny = GHOST, grid.nx, grid.ny
    out = CellField.zeros(grid)
    out.interior = ((vel.u[g:g + ny, g + 1:g + nx + 1] - vel.u[g:g + ny, g:g + nx]) / grid.dx
                    + (vel.v[g + 1:g + ny + 1, g:g + nx] - vel.v[g:g + ny, g:g + nx]) / grid.dy)
    return out


def gradient_at_faces(p: CellField) -> FaceVectorField:
    """Central differences of adjacent cells on every stored face."""
    grid = p.grid
    g, nx, ny = GHOST, grid.nx, grid.ny
    out = FaceVectorField.zeros(grid)
    d = p.data
    out.u[g:g + ny, g:g + nx + 1] = (d[g:g + ny, g:g + nx + 1] - d[g:g + ny, g - 1:g + nx]) / grid.dx
    out.v[g:g + ny + 1, g:g + nx] = (d[g:g + ny + 1, g:g + nx] - d[g - 1:g + ny, g:g + nx]) / grid.dy
    return out


def laplacian(p: CellField) -> CellField:
    """Five-point Laplacian in flux form on interior cells."""
    grid = p.grid
    g, nx, ny = GHOST, grid.nx, grid.ny
    d = p.data
    c = d[g:g + ny, g:g + nx]
    out = CellField.zeros(grid)
    out.interior = (((d[g:g + ny, g + 1:g + nx + 1] - c) / grid.dx
                     - (c - d[g:g + ny, g - 1:g + nx - 1]) / grid.dx) / grid.dx
                    + ((d[g + 1:g + ny + 1, g:g + nx] - c) / grid.dy
                       - (c - d[g - 1:g + ny - 1, g:g + nx]) / grid.dy) / grid.dy)
    return out


def velocity_gradient(vel: FaceVectorField) -> Tensor2:
    """
    [∇u]_ab = ∂u_a/∂x_b at cell centers (full cell arrays). Aligned
    derivatives use the adjacent faces, cross derivatives central
    differences of the cell-averaged component.
    """
    grid = vel.grid
    uc, vc = interp_face_to_cell(vel)
    du_dx = (vel.u[:, 1:] - vel.u[:, :-1]) / grid.dx
    dv_dy = (vel.v[1:, :] - vel.v[:-1, :]) / grid.dy
    du_dy = np.gradient(uc, grid.dy, axis=0)
    dv_dx = np.gradient(vc, grid.dx, axis=1)
    return Tensor2(du_dx, du_dy, dv_dx, dv_dy)


def central_gradient(values: np.ndarray, grid: GridSpec) -> Tuple[np.ndarray, np.ndarray]:
    """(∂x, ∂y) of a full cell array by central differences."""
    d_dy, d_dx = np.gradient(values, grid.dy, grid.dx)
    return d_dx, d_dy


# ---------------------------------------------------------------------------
# Snapshots
# ---------------------------------------------------------------------------

def write_snapshot(values: np.ndarray, grid: GridSpec, t: float, path: Path) -> Path:
    """
    Plain-text snapshot: header `# nx ny x_min x_max y_min y_max t` then
    the storage values row by row.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = " ".join("%.17g" % v for v in (grid.nx, grid.ny, grid.x_min, grid.x_max,
                                            grid.y_min, grid.y_max, t))
    np.savetxt(path, np.atleast_2d(values), fmt="%.17g", header=header, comments="# ")
    return path


def read_snapshot(path: Path) -> Tuple[GridSpec, float, np.ndarray]:
    """Inverse of write_snapshot."""
    path = Path(path)
    with open(path) as handle:
        header = handle.readline().lstrip("#").split()
    nx, ny = int(float(header[0])), int(float(header[1]))
    x_min, x_max, y_min, y_max, t = (float(v) for v in header[2:7])
    grid = GridSpec(nx=nx, ny=ny, x_min=x_min, x_max=x_max, y_min=y_min, y_max=y_max)
    values = np.loadtxt(path, comments="#", ndmin=2)
    return grid, t, values


def cell_field_from_storage(grid: GridSpec, values: np.ndarray,
                            sides: Optional[SideSet] = None) -> CellField:
    """Wrap storage values into a CellField with Neumann-filled ghosts."""
    out = CellField.zeros(grid)
    out.interior = values
    out.data[...] = fill_array_ghosts(out.data, grid, sides or SideSet())
    return out
