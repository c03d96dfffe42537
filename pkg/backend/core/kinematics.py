"""
Interface kinematics: level-set and backward-characteristics transport
(HJ-WENO5 + SSP-RK3), reinitialization toward a signed distance,
extrapolation of Y outside the membrane, normals and the smoothed
Heaviside / delta pair.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from .grid import (
    GHOST,
    CellField,
    FaceVectorField,
    Location,
    coordinates,
    fill_array_ghosts,
    interp_face_to_cell,
    storage_slice,
)
from .models import BoundaryKind, GridSpec, SideSet

logger = logging.getLogger(__name__)

WENO_EPS = 1e-6
NORMAL_FLOOR = 1e-8


# ---------------------------------------------------------------------------
# Cut-off functions
# ---------------------------------------------------------------------------

def smooth_cutoff(r):
    """ζ(r) = ½(1 + cos πr) on [−1, 1], zero outside."""
    r = np.asarray(r, dtype=float)
    return np.where(np.abs(r) <= 1.0, 0.5 * (1.0 + np.cos(np.pi * r)), 0.0)


def smooth_heaviside(r):
    """Antiderivative of ζ: 0 below −1, 1 above 1."""
    r = np.asarray(r, dtype=float)
    inner = 0.5 * (1.0 + r + np.sin(np.pi * r) / np.pi)
    return np.where(r <= -1.0, 0.0, np.where(r >= 1.0, 1.0, inner))


def smooth_delta(phi, epsilon: float):
    """δ_ε(φ) = ζ(φ/ε)/ε."""
    return smooth_cutoff(np.asarray(phi, dtype=float) / epsilon) / epsilon


# ---------------------------------------------------------------------------
# State containers and analytic level sets
# ---------------------------------------------------------------------------

@dataclass
class LevelSet:
    """φ > 0 outside the membrane, φ < 0 inside."""
    phi: CellField
    epsilon: float

    @property
    def grid(self) -> GridSpec:
        return self.phi.grid

    def heaviside(self) -> np.ndarray:
        return smooth_heaviside(self.phi.data / self.epsilon)

    def delta(self) -> np.ndarray:
        return smooth_delta(self.phi.data, self.epsilon)

    def band(self, width: float = 3.0) -> np.ndarray:
        """Interior mask |φ| ≤ width·ε."""
        return np.abs(self.phi.interior) <= width * self.epsilon

    def copy(self) -> "LevelSet":
        return LevelSet(self.phi.copy(), self.epsilon)


@dataclass
class BackwardMap:
    """Backward characteristics Y = (Y1, Y2)."""
    y1: CellField
    y2: CellField

    @classmethod
    def identity(cls, grid: GridSpec) -> "BackwardMap":
        return cls(CellField.from_function(grid, lambda x, y: x),
                   CellField.from_function(grid, lambda x, y: y))

    def copy(self) -> "BackwardMap":
        return BackwardMap(self.y1.copy(), self.y2.copy())


@dataclass(frozen=True)
class CircleLevelSet:
    """Signed distance to a circle."""
    radius: float
    cx: float = 0.0
    cy: float = 0.0

    def __call__(self, x, y):
        return np.hypot(x - self.cx, y - self.cy) - self.radius

    def gradient(self, x, y) -> Tuple[np.ndarray, np.ndarray]:
        r = np.maximum(np.hypot(x - self.cx, y - self.cy), 1e-300)
        return (x - self.cx) / r, (y - self.cy) / r


@dataclass(frozen=True)
class PlaneLevelSet:
    """φ = n·x − offset with a unit normal n."""
    nx: float
    ny: float
    offset: float = 0.0

    def __call__(self, x, y):
        return self.nx * x + self.ny * y - self.offset

    def gradient(self, x, y) -> Tuple[np.ndarray, np.ndarray]:
        return np.full_like(np.asarray(x, float), self.nx), np.full_like(np.asarray(y, float), self.ny)


def level_set_from(grid: GridSpec, func, epsilon: Optional[float] = None) -> LevelSet:
    """Sample an analytic level set (ghosts included); ε defaults to 2·dx."""
    return LevelSet(CellField.from_function(grid, func), epsilon or 2.0 * grid.dx)


# ---------------------------------------------------------------------------
# HJ-WENO5
# ---------------------------------------------------------------------------

def _weno_combine(v1, v2, v3, v4, v5):
    p1 = v1 / 3.0 - 7.0 * v2 / 6.0 + 11.0 * v3 / 6.0
    p2 = -v2 / 6.0 + 5.0 * v3 / 6.0 + v4 / 3.0
    p3 = v3 / 3.0 + 5.0 * v4 / 6.0 - v5 / 6.0
    s1 = 13.0 / 12.0 * (v1 - 2.0 * v2 + v3) ** 2 + 0.25 * (v1 - 4.0 * v2 + 3.0 * v3) ** 2
    s2 = 13.0 / 12.0 * (v2 - 2.0 * v3 + v4) ** 2 + 0.25 * (v2 - v4) ** 2
    s3 = 13.0 / 12.0 * (v3 - 2.0 * v4 + v5) ** 2 + 0.25 * (3.0 * v3 - 4.0 * v4 + v5) ** 2
    a1 = 0.1 / (WENO_EPS + s1) ** 2
    a2 = 0.6 / (WENO_EPS + s2) ** 2
    a3 = 0.3 / (WENO_EPS + s3) ** 2
    return (a1 * p1 + a2 * p2 + a3 * p3) / (a1 + a2 + a3)


def _take(d: np.ndarray, axis: int, start: int, n: int, other: slice) -> np.ndarray:
    if axis == 1:
        return d[other, start:start + n]
    return d[start:start + n, other]


def weno5_derivatives(q: np.ndarray, grid: GridSpec, axis: str,
                      sides: Optional[SideSet] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Left- and right-biased WENO5 derivatives of a full cell array on the
    interior cells. Cells next to a Neumann side fall back to first-order
    one-sided differences.
    """
    ax = 1 if axis == "x" else 0
    h = grid.dx if axis == "x" else grid.dy
    n = grid.nx if axis == "x" else grid.ny
    other = slice(GHOST, GHOST + (grid.ny if axis == "x" else grid.nx))
    d = np.diff(q, axis=ax) / h
    # d[k] = (q[k+1] - q[k]) / h; interior cell k runs over GHOST..GHOST+n-1
    k0 = GHOST
    dm = [_take(d, ax, k0 + s, n, other) for s in (-3, -2, -1, 0, 1)]
    minus = _weno_combine(*dm)
    plus = _weno_combine(_take(d, ax, k0 + 2, n, other), dm[4], dm[3], dm[2], dm[1])
    if sides is not None:
        low, high = (sides.left, sides.right) if axis == "x" else (sides.bottom, sides.top)
        for side, idx in ((low, 0), (high, n - 1)):
            if side.kind == BoundaryKind.neumann:
                sl = (slice(None), idx) if ax == 1 else (idx, slice(None))
                minus[sl] = dm[2][sl]
                plus[sl] = dm[3][sl]
    return minus, plus


def weno5_flux_derivative(q: CellField, vel_component: np.ndarray, axis: str,
                          sides: Optional[SideSet] = None) -> CellField:
    """
    Upwinded vel·∂q/∂axis on interior cells. `vel_component` is a
    cell-centered velocity, either full or interior shaped.
    """
    grid = q.grid
    if vel_component.shape != (grid.ny, grid.nx):
        vel_component = vel_component[storage_slice(grid, Location.CELL)]
    minus, plus = weno5_derivatives(q.data, grid, axis, sides)
    out = CellField.zeros(grid)
    out.interior = np.where(vel_component > 0.0, vel_component * minus, vel_component * plus)
    return out


def _transport_rate(q: CellField, uc: np.ndarray, vc: np.ndarray,
                    sides: Optional[SideSet]) -> np.ndarray:
    fx = weno5_flux_derivative(q, uc, "x", sides).interior
    fy = weno5_flux_derivative(q, vc, "y", sides).interior
    return -(fx + fy)


def advect_rk3(q: CellField, vel: FaceVectorField, dt: float,
               sides: Optional[SideSet] = None) -> CellField:
    """
    One SSP-RK3 step of ∂t q + u·∇q = 0 with WENO5 spatial terms. Ghosts
    are refreshed from `sides` between stages (kept as given when None).
    """
    grid = q.grid
    uc, vc = interp_face_to_cell(vel)
    uc = uc[storage_slice(grid, Location.CELL)]
    vc = vc[storage_slice(grid, Location.CELL)]

    def stage(values: np.ndarray) -> CellField:
        f = q.copy()
        f.interior = values
        if sides is not None:
            f.data[...] = fill_array_ghosts(f.data, grid, sides)
        return f

    q0 = q.interior.copy()
    k1 = _transport_rate(q, uc, vc, sides)
    k2 = _transport_rate(stage(q0 + dt * k1), uc, vc, sides)
    k3 = _transport_rate(stage(q0 + 0.25 * dt * (k1 + k2)), uc, vc, sides)
    return stage(q0 + dt / 6.0 * (k1 + k2 + 4.0 * k3))


def advect_backward_map(ymap: BackwardMap, vel: FaceVectorField, dt: float,
                        sides: Optional[SideSet] = None) -> BackwardMap:
    return BackwardMap(advect_rk3(ymap.y1, vel, dt, sides), advect_rk3(ymap.y2, vel, dt, sides))


# ---------------------------------------------------------------------------
# Reinitialization
# ---------------------------------------------------------------------------

def _godunov_norm(sign: np.ndarray, a, b, c, d) -> np.ndarray:
    pos = (np.maximum(np.maximum(a, 0.0) ** 2, np.minimum(b, 0.0) ** 2)
           + np.maximum(np.maximum(c, 0.0) ** 2, np.minimum(d, 0.0) ** 2))
    neg = (np.maximum(np.minimum(a, 0.0) ** 2, np.maximum(b, 0.0) ** 2)
           + np.maximum(np.minimum(c, 0.0) ** 2, np.maximum(d, 0.0) ** 2))
    return np.sqrt(np.where(sign >= 0.0, pos, neg))


def reinitialize(ls: LevelSet, n_pseudo_steps: int = 5, dtau: Optional[float] = None,
                 sides: Optional[SideSet] = None) -> LevelSet:
    """
    March ∂τφ + S(φ0)(|∇φ| − 1) = 0 with WENO5 one-sided derivatives, a
    Godunov Hamiltonian and S(φ0) = φ0/√(φ0² + dx²).
    """
    grid = ls.grid
    dtau = 0.3 * grid.dx if dtau is None else dtau
    if dtau > 0.5 * grid.dx + 1e-15:
        logger.warning("reinitialization dtau %.3g exceeds 0.5 dx", dtau)
    sides = sides if sides is not None else SideSet()
    out = ls.copy()
    phi0 = ls.phi.interior.copy()
    sign = phi0 / np.sqrt(phi0 ** 2 + grid.dx ** 2)
    for _ in range(n_pseudo_steps):
        out.phi.data[...] = fill_array_ghosts(out.phi.data, grid, sides)
        a, b = weno5_derivatives(out.phi.data, grid, "x", sides)
        c, d = weno5_derivatives(out.phi.data, grid, "y", sides)
        grad = _godunov_norm(sign, a, b, c, d)
        out.phi.interior = out.phi.interior - dtau * sign * (grad - 1.0)
    out.phi.data[...] = fill_array_ghosts(out.phi.data, grid, sides)
    return out


# ---------------------------------------------------------------------------
# Normals
# ---------------------------------------------------------------------------

@dataclass
class NormalField:
    n1: CellField
    n2: CellField
    substituted: int


def normal_field(ls: LevelSet) -> NormalField:
    """
    n = ∇φ/|∇φ| by central differences on the full array. Cells with
    |∇φ| below the floor take the normal of the nearest valid cell.
    """
    grid = ls.grid
    gy, gx = np.gradient(ls.phi.data, grid.dy, grid.dx)
    mag = np.hypot(gx, gy)
    invalid = ~(mag >= NORMAL_FLOOR)
    substituted = int(invalid[storage_slice(grid, Location.CELL)].sum())
    if invalid.all():
        logger.debug("level set is flat everywhere; normals default to (1, 0)")
        return NormalField(CellField.full(grid, 1.0), CellField.zeros(grid), substituted)
    if invalid.any():
        _, (jj, ii) = ndimage.distance_transform_edt(invalid, return_indices=True)
        gx, gy, mag = gx[jj, ii], gy[jj, ii], mag[jj, ii]
        logger.debug("substituted %d degenerate normals", substituted)
    return NormalField(CellField(grid, gx / mag), CellField(grid, gy / mag), substituted)


def compute_normals(ls: LevelSet) -> Tuple[CellField, CellField]:
    nf = normal_field(ls)
    return nf.n1, nf.n2


def gradient_magnitude(ls: LevelSet) -> np.ndarray:
    """|∇φ| (full array, central differences)."""
    gy, gx = np.gradient(ls.phi.data, ls.grid.dy, ls.grid.dx)
    return np.hypot(gx, gy)


# ---------------------------------------------------------------------------
# Extrapolation of Y
# ---------------------------------------------------------------------------

def _upwind_normal_derivative(q: np.ndarray, n1: np.ndarray, n2: np.ndarray,
                              grid: GridSpec) -> np.ndarray:
    """n·∇q on interior cells, first-order upwind along n."""
    g, nx, ny = GHOST, grid.nx, grid.ny
    c = q[g:g + ny, g:g + nx]
    back_x = (c - q[g:g + ny, g - 1:g + nx - 1]) / grid.dx
    fwd_x = (q[g:g + ny, g + 1:g + nx + 1] - c) / grid.dx
    back_y = (c - q[g - 1:g + ny - 1, g:g + nx]) / grid.dy
    fwd_y = (q[g + 1:g + ny + 1, g:g + nx] - c) / grid.dy
    return (np.where(n1 > 0.0, n1 * back_x, n1 * fwd_x)
            + np.where(n2 > 0.0, n2 * back_y, n2 * fwd_y))


def _central_normal_derivative(q: np.ndarray, n1: np.ndarray, n2: np.ndarray,
                               grid: GridSpec) -> np.ndarray:
    gy, gx = np.gradient(q, grid.dy, grid.dx)
    sl = storage_slice(grid, Location.CELL)
    return n1 * gx[sl] + n2 * gy[sl]


def extrapolation_mask(ls: LevelSet) -> np.ndarray:
    """H(φ/ε) where φ > 0, zero elsewhere (interior cells)."""
    phi = ls.phi.interior
    return np.where(phi > 0.0, smooth_heaviside(phi / ls.epsilon), 0.0)


def extrapolate_component(q: CellField, ls: LevelSet, n_pseudo_steps: int,
                          dtau: float, sides: Optional[SideSet] = None,
                          normals: Optional[NormalField] = None) -> CellField:
    """Two-pass linear extrapolation of one scalar into φ > 0."""
    grid = q.grid
    sides = sides if sides is not None else SideSet()
    nf = normals or normal_field(ls)
    sl = storage_slice(grid, Location.CELL)
    n1, n2 = nf.n1.data[sl], nf.n2.data[sl]
    mask = extrapolation_mask(ls)

    qn = CellField.zeros(grid)
    qn.interior = _central_normal_derivative(q.data, n1, n2, grid)
    qn.data[...] = fill_array_ghosts(qn.data, grid, sides)
    for _ in range(n_pseudo_steps):
        qn.interior = qn.interior - dtau * mask * _upwind_normal_derivative(qn.data, n1, n2, grid)
        qn.data[...] = fill_array_ghosts(qn.data, grid, sides)

    out = q.copy()
    for _ in range(n_pseudo_steps):
        rate = _upwind_normal_derivative(out.data, n1, n2, grid) - qn.interior
        out.interior = out.interior - dtau * mask * rate
        out.data[...] = fill_array_ghosts(out.data, grid, sides)
    return out


def extrapolate_backward_map(ymap: BackwardMap, ls: LevelSet, n_pseudo_steps: int = 10,
                             dtau: Optional[float] = None,
                             sides: Optional[SideSet] = None) -> BackwardMap:
    """Replace Y outside the membrane by its linear extension along n."""
    dtau = 0.3 * ls.grid.dx if dtau is None else dtau
    nf = normal_field(ls)
    return BackwardMap(
        extrapolate_component(ymap.y1, ls, n_pseudo_steps, dtau, sides, nf),
        extrapolate_component(ymap.y2, ls, n_pseudo_steps, dtau, sides, nf),
    )


def enclosed_area(ls: LevelSet) -> float:
    """Area of {φ < 0} by the smoothed Heaviside (cheap per-step diagnostic)."""
    phi = ls.phi.interior
    return float(np.sum(1.0 - smooth_heaviside(phi / ls.epsilon)) * ls.grid.cell_area)


def circle_level_set(grid: GridSpec, radius: float, cx: float = 0.0, cy: float = 0.0) -> LevelSet:
    return level_set_from(grid, CircleLevelSet(radius, cx, cy))


def cell_centers(grid: GridSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Interior cell-center coordinates."""
    X, Y = coordinates(grid, Location.CELL)
    sl = storage_slice(grid, Location.CELL)
    return X[sl], Y[sl]
