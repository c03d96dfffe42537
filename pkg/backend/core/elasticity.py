"""
Membrane elasticity: deformation tensors from the backward
characteristics, area variation Z, Evan-Skalak stress, the elastic force
at velocity faces and the stress evolution right-hand side with its
semi-implicit splitting.

All tensor fields are cell-centered full arrays (ghosts included).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .grid import (
    CellField,
    FaceVectorField,
    Location,
    SymTensor2,
    Tensor2,
    cell_to_corners,
    central_gradient,
    full_shape,
    interp_face_to_cell,
    storage_slice,
    velocity_gradient,
)
from .kinematics import BackwardMap, LevelSet, gradient_magnitude, smooth_delta
from .models import GridSpec

logger = logging.getLogger(__name__)

DET_FLOOR = 1e-10
PROJECTION_FLOOR = 1e-12

Law = Callable[[np.ndarray, float], Tuple[np.ndarray, np.ndarray]]


def evan_skalak(z, K: float):
    """f(Z) = E′(Z)Z = K(Z − 1)Z and its derivative K(2Z − 1)."""
    z = np.asarray(z, dtype=float)
    return K * (z - 1.0) * z, K * (2.0 * z - 1.0)


@dataclass
class DeformationState:
    grad_y: Tensor2
    b_tensor: SymTensor2
    a_tensor: SymTensor2
    z: CellField
    jacobian: np.ndarray
    degenerate: np.ndarray

    def degenerate_in(self, mask: np.ndarray) -> int:
        """Degenerate interior cells inside a mask of interior shape."""
        sl = storage_slice(self.z.grid, Location.CELL)
        return int(np.count_nonzero(self.degenerate[sl] & mask))


def compute_grad_y(ymap: BackwardMap) -> Tensor2:
    """(∇Y)_ab = ∂Y_a/∂x_b by central differences."""
    grid = ymap.y1.grid
    d1x, d1y = central_gradient(ymap.y1.data, grid)
    d2x, d2y = central_gradient(ymap.y2.data, grid)
    return Tensor2(d1x, d1y, d2x, d2y)


def degenerate_cells(grad_y: Tensor2) -> np.ndarray:
    det = grad_y.det()
    return ~(np.abs(det) >= DET_FLOOR)


def compute_b(grad_y: Tensor2, previous: Optional[SymTensor2] = None) -> SymTensor2:
    """
    B = [∇Y]⁻¹[∇Y]⁻ᵀ by the explicit 2x2 inverse. Near-singular cells
    reuse `previous` (identity when absent).
    """
    det = grad_y.det()
    bad = degenerate_cells(grad_y)
    safe = np.where(bad, 1.0, det)
    i_xx = grad_y.yy / safe
    i_xy = -grad_y.xy / safe
    i_yx = -grad_y.yx / safe
    i_yy = grad_y.xx / safe
    b = SymTensor2(i_xx * i_xx + i_xy * i_xy,
                   i_xx * i_yx + i_xy * i_yy,
                   i_yx * i_yx + i_yy * i_yy)
    if bad.any():
        fallback = previous or SymTensor2(np.ones_like(det), np.zeros_like(det), np.ones_like(det))
        b = SymTensor2(np.where(bad, fallback.xx, b.xx), np.where(bad, fallback.xy, b.xy),
                       np.where(bad, fallback.yy, b.yy))
    return b


def _bn_dot_n(b: SymTensor2, n1, n2):
    bn1, bn2 = b.apply(n1, n2)
    return bn1, bn2, bn1 * n1 + bn2 * n2


def compute_a(b: SymTensor2, n1, n2, previous: Optional[SymTensor2] = None) -> SymTensor2:
    """𝒜 = B − (Bn)⊗(Bn)/((Bn)·n)."""
    bn1, bn2, s = _bn_dot_n(b, n1, n2)
    bad = ~(s >= PROJECTION_FLOOR)
    safe = np.where(bad, 1.0, s)
    a = SymTensor2(b.xx - bn1 * bn1 / safe, b.xy - bn1 * bn2 / safe, b.yy - bn2 * bn2 / safe)
    if bad.any():
        fallback = previous or SymTensor2(1.0 - n1 * n1, -n1 * n2, 1.0 - n2 * n2)
        a = SymTensor2(np.where(bad, fallback.xx, a.xx), np.where(bad, fallback.xy, a.xy),
                       np.where(bad, fallback.yy, a.yy))
    return a


def trace_a_cayley_hamilton(b: SymTensor2, n1, n2) -> np.ndarray:
    """Tr 𝒜 = det B / ((Bn)·n)."""
    _, _, s = _bn_dot_n(b, n1, n2)
    return b.det() / s


def compute_z(a: SymTensor2, grid: GridSpec) -> CellField:
    """Z = √Tr 𝒜, round-off negatives clamped to zero."""
    return CellField(grid, np.sqrt(np.maximum(a.trace(), 0.0)) * np.ones(full_shape(grid, Location.CELL)))


def compute_z_alt(ls: LevelSet, ymap: BackwardMap, phi0) -> CellField:
    """
    Z = J|∇φ|/|∇φ0(Y)| with J = 1/det ∇Y; `phi0` is the analytic initial
    level set and must provide `gradient(x, y)`.
    """
    grad_y = compute_grad_y(ymap)
    det = grad_y.det()
    jac = 1.0 / np.where(np.abs(det) >= DET_FLOOR, det, 1.0)
    g1, g2 = phi0.gradient(ymap.y1.data, ymap.y2.data)
    ref = np.maximum(np.hypot(g1, g2), 1e-300)
    return CellField(ls.grid, jac * gradient_magnitude(ls) / ref)


def deformation_state(ymap: BackwardMap, n1: np.ndarray, n2: np.ndarray,
                      previous: Optional[DeformationState] = None,
                      ls: Optional[LevelSet] = None, phi0=None) -> DeformationState:
    """
    Full deformation pipeline ∇Y → B → 𝒜 → Z. When `ls` and `phi0` are
    given Z uses the level-set formula instead of the trace.
    """
    grid = ymap.y1.grid
    grad_y = compute_grad_y(ymap)
    det = grad_y.det()
    bad_det = degenerate_cells(grad_y)
    b = compute_b(grad_y, previous.b_tensor if previous else None)
    _, _, s = _bn_dot_n(b, n1, n2)
    a = compute_a(b, n1, n2, previous.a_tensor if previous else None)
    degenerate = bad_det | ~(s >= PROJECTION_FLOOR)
    if ls is not None and phi0 is not None:
        z = compute_z_alt(ls, ymap, phi0)
    else:
        z = compute_z(a, grid)
    if previous is not None and degenerate.any():
        z.data[...] = np.where(degenerate, previous.z.data, z.data)
    jacobian = 1.0 / np.where(bad_det, 1.0, det)
    count = int(degenerate[storage_slice(grid, Location.CELL)].sum())
    if count:
        logger.debug("%d degenerate deformation cells substituted", count)
    return DeformationState(grad_y, b, a, z, jacobian, degenerate)


def compute_stress(z, n1, n2, K: float, law: Law = evan_skalak) -> SymTensor2:
    """σ = f(Z)(I − n⊗n)."""
    z = z.data if isinstance(z, CellField) else np.asarray(z, dtype=float)
    f, _ = law(z, K)
    return SymTensor2(f * (1.0 - n1 * n1), -f * n1 * n2, f * (1.0 - n2 * n2))


def stress_divergence_at_faces(sigma: SymTensor2, grid: GridSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    div σ on u faces and v faces (full arrays). Aligned derivatives use the
    two adjacent cells, cross derivatives the corner means of σ_xy.
    """
    corner = cell_to_corners(sigma.xy)
    fx = np.zeros(full_shape(grid, Location.UFACE))
    fx[:, 1:-1] = (sigma.xx[:, 1:] - sigma.xx[:, :-1]) / grid.dx
    fx += (corner[1:, :] - corner[:-1, :]) / grid.dy
    fy = np.zeros(full_shape(grid, Location.VFACE))
    fy[1:-1, :] = (sigma.yy[1:, :] - sigma.yy[:-1, :]) / grid.dy
    fy += (corner[:, 1:] - corner[:, :-1]) / grid.dx
    return fx, fy


def face_delta(ls: LevelSet) -> Tuple[np.ndarray, np.ndarray]:
    """δ_ε of the two-point face average of φ, on u and v faces."""
    phi = ls.phi.data
    pu = np.pad(0.5 * (phi[:, 1:] + phi[:, :-1]), ((0, 0), (1, 1)), mode="edge")
    pv = np.pad(0.5 * (phi[1:, :] + phi[:-1, :]), ((1, 1), (0, 0)), mode="edge")
    return smooth_delta(pu, ls.epsilon), smooth_delta(pv, ls.epsilon)


def elastic_force(sigma: SymTensor2, ls: LevelSet) -> FaceVectorField:
    """F = δ_ε(φ) div σ on every stored face; ghost faces left at zero."""
    grid = ls.grid
    fx, fy = stress_divergence_at_faces(sigma, grid)
    du, dv = face_delta(ls)
    out = FaceVectorField.zeros(grid)
    su = storage_slice(grid, Location.UFACE)
    sv = storage_slice(grid, Location.VFACE)
    out.u[su] = (du * fx)[su]
    out.v[sv] = (dv * fy)[sv]
    return out


def _double_dot(g: Tensor2, t: SymTensor2) -> np.ndarray:
    return g.xx * t.xx + (g.xy + g.yx) * t.xy + g.yy * t.yy


def _grad(grad_u) -> Tensor2:
    return velocity_gradient(grad_u) if isinstance(grad_u, FaceVectorField) else grad_u


def t_operator(z, n1, n2, grad_u, K: float, law: Law = evan_skalak) -> SymTensor2:
    """𝒯 = f′(Z)Z([∇u]:𝒞)𝒞 − 2f(Z)([∇u]n·n)(n⊗n), 𝒞 = I − n⊗n."""
    z = z.data if isinstance(z, CellField) else np.asarray(z, dtype=float)
    g = _grad(grad_u)
    f, fp = law(z, K)
    proj = SymTensor2(1.0 - n1 * n1, -n1 * n2, 1.0 - n2 * n2)
    nn = SymTensor2(n1 * n1, n1 * n2, n2 * n2)
    c1 = fp * z * _double_dot(g, proj)
    c2 = -2.0 * f * _double_dot(g, nn)
    return SymTensor2(c1 * proj.xx + c2 * nn.xx, c1 * proj.xy + c2 * nn.xy,
                      c1 * proj.yy + c2 * nn.yy)


def stress_evolution_rhs(z, n1, n2, grad_u, K: float, law: Law = evan_skalak) -> SymTensor2:
    """
    Right-hand side of the σ transport equation (advection excluded):
    𝒯 + f(Z)([∇u]ᵀ(n⊗n) + (n⊗n)[∇u]).
    """
    z = z.data if isinstance(z, CellField) else np.asarray(z, dtype=float)
    g = _grad(grad_u)
    f, _ = law(z, K)
    t = t_operator(z, n1, n2, g, K, law)
    # (GᵀN)_ab = n_b Σ_c G_ca n_c, symmetrized with NG
    gtn1 = g.xx * n1 + g.yx * n2
    gtn2 = g.xy * n1 + g.yy * n2
    return SymTensor2(t.xx + f * 2.0 * gtn1 * n1,
                      t.xy + f * (gtn1 * n2 + gtn2 * n1),
                      t.yy + f * 2.0 * gtn2 * n2)


def _advective(values: np.ndarray, uc: np.ndarray, vc: np.ndarray, grid: GridSpec) -> np.ndarray:
    dx_, dy_ = central_gradient(values, grid)
    return uc * dx_ + vc * dy_


def verify_z_evolution(z_old: CellField, z_new: CellField, dt: float,
                       n1: np.ndarray, n2: np.ndarray, vel: FaceVectorField) -> np.ndarray:
    """
    Residual of ∂t Z + u·∇Z = Z[∇u]:𝒞 between two states (midpoint in
    time, central differences in space); interior cells.
    """
    grid = z_old.grid
    zm = 0.5 * (z_old.data + z_new.data)
    uc, vc = interp_face_to_cell(vel)
    g = velocity_gradient(vel)
    proj = SymTensor2(1.0 - n1 * n1, -n1 * n2, 1.0 - n2 * n2)
    res = ((z_new.data - z_old.data) / dt + _advective(zm, uc, vc, grid)
           - zm * _double_dot(g, proj))
    return res[storage_slice(grid, Location.CELL)]


def verify_normal_evolution(n_old: Tuple[np.ndarray, np.ndarray],
                            n_new: Tuple[np.ndarray, np.ndarray], dt: float,
                            vel: FaceVectorField) -> Tuple[np.ndarray, np.ndarray]:
    """
    Residual of ∂t n + u·∇n = −[∇u]ᵀn + ([∇u]n·n)n; interior cells.
    """
    grid = vel.grid
    m1 = 0.5 * (n_old[0] + n_new[0])
    m2 = 0.5 * (n_old[1] + n_new[1])
    uc, vc = interp_face_to_cell(vel)
    g = velocity_gradient(vel)
    gtn1 = g.xx * m1 + g.yx * m2
    gtn2 = g.xy * m1 + g.yy * m2
    gnn = m1 * (g.xx * m1 + g.xy * m2) + m2 * (g.yx * m1 + g.yy * m2)
    r1 = (n_new[0] - n_old[0]) / dt + _advective(m1, uc, vc, grid) + gtn1 - gnn * m1
    r2 = (n_new[1] - n_old[1]) / dt + _advective(m2, uc, vc, grid) + gtn2 - gnn * m2
    sl = storage_slice(grid, Location.CELL)
    return r1[sl], r2[sl]


def verify_stress_evolution(sigma_old: SymTensor2, sigma_new: SymTensor2, dt: float,
                            z_mid, n1: np.ndarray, n2: np.ndarray, vel: FaceVectorField,
                            K: float) -> SymTensor2:
    """
    Residual of ∂t σ + (u·∇)σ = stress_evolution_rhs at the midpoint;
    interior cells.
    """
    grid = vel.grid
    uc, vc = interp_face_to_cell(vel)
    rhs = stress_evolution_rhs(z_mid, n1, n2, velocity_gradient(vel), K)
    sl = storage_slice(grid, Location.CELL)
    parts = []
    for comp in ("xx", "xy", "yy"):
        old, new = getattr(sigma_old, comp), getattr(sigma_new, comp)
        mid = 0.5 * (old + new)
        r = (new - old) / dt + _advective(mid, uc, vc, grid) - getattr(rhs, comp)
        parts.append(r[sl])
    return SymTensor2(*parts)
