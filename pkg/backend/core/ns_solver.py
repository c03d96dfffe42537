"""
Incompressible Navier-Stokes projection solver with an explicit or a
semi-implicit elastic coupling.

Operators are assembled as sparse matrices acting on the extended
velocity vector (full ghosted u array, then full v array). Ghost
references are folded back onto the stored unknowns with the affine
ghost map of the boundary conditions, and boundary faces get their own
rows. The pressure increment is solved on cells with the same folding.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .elasticity import (
    DeformationState,
    Law,
    compute_stress,
    deformation_state,
    elastic_force,
    evan_skalak,
    face_delta,
)
from .exceptions import BlowUpError, ConfigurationError, DegenerateDeformationError
from .grid import (
    CellField,
    FaceVectorField,
    Location,
    SymTensor2,
    central_gradient,
    divergence,
    fill_ghosts,
    ghost_map,
    gradient_at_faces,
    staggered_ops,
    storage_slice,
    velocity_prolongation,
)
from .kinematics import (
    BackwardMap,
    LevelSet,
    advect_rk3,
    enclosed_area,
    extrapolate_backward_map,
    normal_field,
    reinitialize,
)
from .linalg import KrylovResult, SparseSystem, krylov_solve
from .models import (
    BoundaryKind,
    BoundarySpec,
    CaseConfig,
    GridSpec,
    KrylovMethod,
    Preconditioner,
    SchemeMode,
    SideSet,
    ZFormula,
)
from .utils import format_kv

logger = logging.getLogger(__name__)

CELL, UFACE, VFACE, CORNER = Location.CELL, Location.UFACE, Location.VFACE, Location.CORNER
AXES = "xy"
COMPONENTS = "uv"


@dataclass
class FlowState:
    vel: FaceVectorField
    p: CellField
    rho: CellField
    mu: CellField
    t: float = 0.0
    step_index: int = 0

    @property
    def grid(self) -> GridSpec:
        return self.vel.grid

    def copy(self) -> "FlowState":
        return FlowState(self.vel.copy(), self.p.copy(), self.rho.copy(), self.mu.copy(),
                         self.t, self.step_index)


@dataclass
class StepDiagnostics:
    step: int
    t: float
    momentum_iters: int = 0
    momentum_residual: float = 0.0
    poisson_iters: int = 0
    poisson_residual: float = 0.0
    max_u: float = 0.0
    min_z: float = 1.0
    max_z: float = 1.0
    divergence: float = 0.0
    area: float = 0.0
    degenerate: int = 0

    def line(self) -> str:
        fields = {k: v for k, v in self.__dict__.items() if k != "step"}
        return format_kv("step", self.step, **fields)


@dataclass
class SolverState:
    """Everything one step needs at time level n."""
    flow: FlowState
    ls: LevelSet
    ymap: BackwardMap
    deformation: Optional[DeformationState] = None
    phi0: Optional[object] = None
    diagnostics: Optional[StepDiagnostics] = None
    history: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Material properties
# ---------------------------------------------------------------------------

def update_material_properties(ls: LevelSet, rho1: float, rho2: float,
                               mu1: float, mu2: float) -> Tuple[CellField, CellField]:
    """Heaviside blends; phase 1 is outside (φ > 0), phase 2 inside."""
    h = ls.heaviside()
    rho = CellField(ls.grid, h * rho1 + (1.0 - h) * rho2)
    mu = CellField(ls.grid, h * mu1 + (1.0 - h) * mu2)
    return rho, mu


def face_density(rho: CellField) -> Tuple[np.ndarray, np.ndarray]:
    """Two-point face averages of ρ (flat full u and v arrays)."""
    ops = staggered_ops(rho.grid)
    r = rho.data.ravel()
    return ops.avg(CELL, "x") @ r, ops.avg(CELL, "y") @ r


def _periodic_flags(sides: SideSet) -> Tuple[bool, bool]:
    return (sides.left.kind == BoundaryKind.periodic, sides.bottom.kind == BoundaryKind.periodic)


# ---------------------------------------------------------------------------
# Staggered stencils
# ---------------------------------------------------------------------------

def variable_coefficient_stencil(term_id: str, m, unknown: str, row: str,
                                 grid: Optional[GridSpec] = None, periodic: bool = False) -> sp.csr_matrix:
    """
    Sparse operator of ∂_outer(m ∂_inner w) for term_id = outer+inner
    ("xx", "xy", "yx", "yy"), acting on the extended velocity vector and
    contributing to the rows of component `row`.

    The inner derivative of w is taken at its natural half-shifted
    location, averaged over four points when the outer difference needs
    it elsewhere; m is carried from cells to corners by the 4-point mean.
    """
    if isinstance(m, CellField):
        grid, values = m.grid, m.data
    else:
        values = np.asarray(m, dtype=float)
        if grid is None:
            raise ConfigurationError("a grid is required when m is a bare array")
    if (len(term_id) != 2 or any(ch not in AXES for ch in term_id)
            or unknown not in COMPONENTS or row not in COMPONENTS):
        raise ConfigurationError(
            f"unknown stencil term '{term_id}' for unknown '{unknown}' in row '{row}'"
        )
    outer, inner = term_id
    ops = staggered_ops(grid)
    w_loc = UFACE if unknown == "u" else VFACE
    row_loc = UFACE if row == "u" else VFACE
    l1 = w_loc.shifted(inner)
    l2 = row_loc.shifted(outer)
    inner_op = ops.diff(w_loc, inner) @ ops.select(unknown)
    if l1 != l2:
        inner_op = ops.interp(l1, l2) @ inner_op
    m_l2 = values.ravel() if l2 == CELL else ops.interp(CELL, l2) @ values.ravel()
    block = ops.diff(l2, outer) @ sp.diags(m_l2) @ inner_op
    return ops.embed_rows(row, block, periodic)


def _explicit_operator(flow: FlowState, dt: float, periodic: Tuple[bool, bool]) -> sp.csr_matrix:
    grid = flow.grid
    ops = staggered_ops(grid)
    ru, rv = face_density(flow.rho)
    su, sv = ops.select("u"), ops.select("v")
    u_n, v_n = flow.vel.u.ravel(), flow.vel.v.ravel()
    u_cell = ops.avg(UFACE, "x") @ u_n
    v_cell = ops.avg(VFACE, "y") @ v_n
    u_corner = ops.avg(UFACE, "y") @ u_n
    v_corner = ops.avg(VFACE, "x") @ v_n

    conv_u = (ops.diff(CELL, "x") @ sp.diags(u_cell) @ ops.avg(UFACE, "x")
              + ops.diff(CORNER, "y") @ sp.diags(v_corner) @ ops.avg(UFACE, "y")) @ su
    conv_v = (ops.diff(CORNER, "x") @ sp.diags(u_corner) @ ops.avg(VFACE, "x")
              + ops.diff(CELL, "y") @ sp.diags(v_cell) @ ops.avg(VFACE, "y")) @ sv
    block_u = sp.diags(ru / dt) @ su + sp.diags(ru) @ conv_u
    block_v = sp.diags(rv / dt) @ sv + sp.diags(rv) @ conv_v
    L = ops.embed_rows("u", block_u, periodic[0]) + ops.embed_rows("v", block_v, periodic[1])

    mu = flow.mu.data
    L = L - (2.0 * variable_coefficient_stencil("xx", mu, "u", "u", grid, periodic[0])
             + variable_coefficient_stencil("yy", mu, "u", "u", grid, periodic[0])
             + variable_coefficient_stencil("yx", mu, "v", "u", grid, periodic[0]))
    L = L - (2.0 * variable_coefficient_stencil("yy", mu, "v", "v", grid, periodic[1])
             + variable_coefficient_stencil("xx", mu, "v", "v", grid, periodic[1])
             + variable_coefficient_stencil("xy", mu, "u", "v", grid, periodic[1]))
    return L.tocsr()


def fold_velocity_system(L_ext: sp.spmatrix, rhs_ext: np.ndarray, grid: GridSpec,
                         boundary: BoundarySpec, ordering: str = "momentum") -> SparseSystem:
    """
    Restrict an extended-space operator to the stored unknowns, folding
    ghost references through the boundary ghost map, then install the
    boundary-face rows.
    """
    ops = staggered_ops(grid)
    P, c = velocity_prolongation(grid, boundary)
    R = ops.velocity_restriction()
    L_ext = sp.csr_matrix(L_ext)
    A = (R @ L_ext @ P).tocsr()
    b = R @ rhs_ext - R @ (L_ext @ c)
    A, b = apply_boundary_rows(A, b, grid, boundary.velocity)
    return SparseSystem(A, b, ordering)


def apply_boundary_rows(A: sp.spmatrix, b: np.ndarray, grid: GridSpec,
                        sides: SideSet) -> Tuple[sp.csr_matrix, np.ndarray]:
    """
    Rows of normal boundary faces: prescribed value on walls and Dirichlet
    sides, zero normal gradient on Neumann sides, equality with the
    opposite face on periodic axes.
    """
    nx, ny = grid.nx, grid.ny
    nu = ny * (nx + 1)
    b = b.copy()
    keep = np.ones(A.shape[0])
    rows, cols, vals = [], [], []

    def u_idx(j, i):
        return j * (nx + 1) + i

    def v_idx(j, i):
        return nu + j * nx + i

    j = np.arange(ny)
    i = np.arange(nx)
    plan = (
        (sides.left, u_idx(j, 0), u_idx(j, 1), None),
        (sides.right, u_idx(j, nx), u_idx(j, nx - 1), u_idx(j, 0)),
        (sides.bottom, v_idx(0, i), v_idx(1, i), None),
        (sides.top, v_idx(ny, i), v_idx(ny - 1, i), v_idx(0, i)),
    )
    for side, face, inner, partner in plan:
        if side.kind == BoundaryKind.periodic:
            if partner is None:
                continue
            keep[face] = 0.0
            rows += [face, face]
            cols += [face, partner]
            vals += [np.ones(face.size), -np.ones(face.size)]
            b[face] = 0.0
        elif side.kind == BoundaryKind.neumann:
            keep[face] = 0.0
            rows += [face, face]
            cols += [face, inner]
            vals += [np.ones(face.size), -np.ones(face.size)]
            b[face] = 0.0
        elif side.kind in (BoundaryKind.dirichlet, BoundaryKind.moving_wall):
            keep[face] = 0.0
            rows.append(face)
            cols.append(face)
            vals.append(np.ones(face.size))
            b[face] = side.normal
        else:
            raise ConfigurationError(f"unknown boundary condition kind: {side.kind!r}")
    extra = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=A.shape)
    return (sp.diags(keep) @ A + extra).tocsr(), b


def _explicit_rhs(flow: FlowState, force: FaceVectorField, dt: float) -> np.ndarray:
    ru, rv = face_density(flow.rho)
    gp = gradient_at_faces(flow.p)
    return np.concatenate([
        ru / dt * flow.vel.u.ravel() - gp.u.ravel() + force.u.ravel(),
        rv / dt * flow.vel.v.ravel() - gp.v.ravel() + force.v.ravel(),
    ])


def assemble_momentum_explicit(flow: FlowState, force: FaceVectorField, dt: float,
                               boundary: BoundarySpec) -> SparseSystem:
    """
    ρ(u⋆ − uⁿ)/Δt + ρ div(uⁿ⊗u⋆) − div(2μD(u⋆)) = −∇pⁿ + F, convection
    centered with the advecting field frozen at uⁿ.
    """
    if dt <= 0:
        raise ConfigurationError("dt must be positive")
    periodic = _periodic_flags(boundary.velocity)
    L = _explicit_operator(flow, dt, periodic)
    return fold_velocity_system(L, _explicit_rhs(flow, force, dt), flow.grid, boundary)


def tensorial_coefficients(z: np.ndarray, n1: np.ndarray, n2: np.ndarray, K: float,
                           law: Law = evan_skalak) -> dict:
    """
    m[a, b, c, d] such that the implicit elastic response of row a is
    Σ_b ∂_b(Σ_cd m[a,b,c,d] ∂_d u_c): the f(n⊗n) tensorial viscosity plus
    the 𝒯 operator.
    """
    f, fp = law(z, K)
    n = (n1, n2)
    nn = {(a, b): n[a] * n[b] for a in range(2) for b in range(2)}
    proj = {(a, b): (1.0 if a == b else 0.0) - nn[a, b] for a in range(2) for b in range(2)}
    coef = {}
    for a in range(2):
        for b in range(2):
            for c in range(2):
                for d in range(2):
                    m = fp * z * proj[c, d] * proj[a, b] - 2.0 * f * nn[c, d] * nn[a, b]
                    if d == b:
                        m = m + f * nn[a, c]
                    if d == a:
                        m = m + f * nn[c, b]
                    coef[a, b, c, d] = m
    return coef


def stress_advection_operator(sigma: SymTensor2, grid: GridSpec,
                              periodic: Tuple[bool, bool] = (False, False)) -> sp.csr_matrix:
    """
    Σ_b ∂_b[(u⋆·∇)σ_ab] as a linear operator in u⋆, with central
    differences of σ and two-point (four-point at corners) velocity means.
    """
    ops = staggered_ops(grid)
    su, sv = ops.select("u"), ops.select("v")
    u_cell = ops.avg(UFACE, "x") @ su
    v_cell = ops.avg(VFACE, "y") @ sv
    u_corner = ops.avg(UFACE, "y") @ su
    v_corner = ops.avg(VFACE, "x") @ sv
    to_corner = ops.interp(CELL, CORNER)

    def at_cell(values):
        gx, gy = central_gradient(values, grid)
        return sp.diags(gx.ravel()) @ u_cell + sp.diags(gy.ravel()) @ v_cell

    def at_corner(values):
        gx, gy = central_gradient(values, grid)
        return (sp.diags(to_corner @ gx.ravel()) @ u_corner
                + sp.diags(to_corner @ gy.ravel()) @ v_corner)

    w_xy = at_corner(sigma.xy)
    row_u = ops.diff(CELL, "x") @ at_cell(sigma.xx) + ops.diff(CORNER, "y") @ w_xy
    row_v = ops.diff(CORNER, "x") @ w_xy + ops.diff(CELL, "y") @ at_cell(sigma.yy)
    return (ops.embed_rows("u", row_u, periodic[0]) + ops.embed_rows("v", row_v, periodic[1])).tocsr()


def semi_implicit_operator(sigma: SymTensor2, z: np.ndarray, n1: np.ndarray, n2: np.ndarray,
                           ls: LevelSet, dt: float, K: float,
                           periodic: Tuple[bool, bool] = (False, False),
                           law: Law = evan_skalak) -> sp.csr_matrix:
    """
    Extended-space operator added to the explicit momentum matrix:
    δ_εΔt[div((u⋆·∇)σⁿ) − div(𝒯 + f((n⊗n)∇u⋆ + ∇u⋆ᵀ(n⊗n)))], with δ_ε
    evaluated at the face of each row.
    """
    grid = ls.grid
    coef = tensorial_coefficients(z, n1, n2, K, law)
    total = None
    for a in range(2):
        for b in range(2):
            for c in range(2):
                for d in range(2):
                    term = variable_coefficient_stencil(AXES[b] + AXES[d], coef[a, b, c, d],
                                                        COMPONENTS[c], COMPONENTS[a], grid, periodic[a])
                    total = term if total is None else total + term
    du, dv = face_delta(ls)
    scale = sp.diags(dt * np.concatenate([du.ravel(), dv.ravel()]))
    return (scale @ (stress_advection_operator(sigma, grid, periodic) - total)).tocsr()


def assemble_momentum_semi_implicit(flow: FlowState, force: FaceVectorField, sigma: SymTensor2,
                                    z, n1: np.ndarray, n2: np.ndarray, ls: LevelSet,
                                    dt: float, K: float, boundary: BoundarySpec,
                                    law: Law = evan_skalak) -> SparseSystem:
    """
    Explicit system plus the implicit tensorial viscosity, 𝒯 and stress
    advection terms; the right-hand side keeps δ_ε div σⁿ through `force`.
    """
    if dt <= 0:
        raise ConfigurationError("dt must be positive")
    z = z.data if isinstance(z, CellField) else np.asarray(z, dtype=float)
    periodic = _periodic_flags(boundary.velocity)
    L = _explicit_operator(flow, dt, periodic) + semi_implicit_operator(
        sigma, z, n1, n2, ls, dt, K, periodic, law)
    return fold_velocity_system(L, _explicit_rhs(flow, force, dt), flow.grid, boundary)


# ---------------------------------------------------------------------------
# Projection
# ---------------------------------------------------------------------------

def rebalance_outflow(vel: FaceVectorField, sides: SideSet) -> float:
    """
    Shift the normal velocity on Neumann boundary faces uniformly so the
    net boundary flux vanishes. Returns the applied shift.
    """
    grid = vel.grid
    u = vel.u[storage_slice(grid, UFACE)]
    v = vel.v[storage_slice(grid, VFACE)]
    outflow = ((u[:, -1].sum() - u[:, 0].sum()) * grid.dy
               + (v[-1, :].sum() - v[0, :].sum()) * grid.dx)
    length = 0.0
    for side, extent in ((sides.left, grid.y_max - grid.y_min), (sides.right, grid.y_max - grid.y_min),
                         (sides.bottom, grid.x_max - grid.x_min), (sides.top, grid.x_max - grid.x_min)):
        if side.kind == BoundaryKind.neumann:
            length += extent
    if length == 0.0:
        return 0.0
    shift = -outflow / length
    if sides.left.kind == BoundaryKind.neumann:
        u[:, 0] -= shift
    if sides.right.kind == BoundaryKind.neumann:
        u[:, -1] += shift
    if sides.bottom.kind == BoundaryKind.neumann:
        v[0, :] -= shift
    if sides.top.kind == BoundaryKind.neumann:
        v[-1, :] += shift
    logger.debug("outflow rebalanced by %.3e (net flux %.3e)", shift, outflow)
    return float(shift)


def assemble_poisson(rho: CellField, dt: float, sides: SideSet) -> Tuple[sp.csr_matrix, np.ndarray]:
    """
    Matrix of div((Δt/ρ)∇ψ) on stored cells and the constant produced by
    the ghost map (zero for homogeneous conditions).
    """
    grid = rho.grid
    ops = staggered_ops(grid)
    ru, rv = face_density(rho)
    beta_u = np.where(ru > 0.0, dt / np.where(ru > 0.0, ru, 1.0), 0.0)
    beta_v = np.where(rv > 0.0, dt / np.where(rv > 0.0, rv, 1.0), 0.0)
    L = (ops.diff(UFACE, "x") @ sp.diags(beta_u) @ ops.diff(CELL, "x")
         + ops.diff(VFACE, "y") @ sp.diags(beta_v) @ ops.diff(CELL, "y"))
    gmap = ghost_map(grid, sides, CELL)
    R = ops.restriction(CELL)
    return (R @ L @ gmap.matrix).tocsr(), R @ (L @ gmap.offset)


def _singular(sides: SideSet) -> bool:
    return all(s.kind in (BoundaryKind.neumann, BoundaryKind.periodic)
               for s in (sides.left, sides.right, sides.bottom, sides.top))


def solve_poisson(flow: FlowState, u_star: FaceVectorField, dt: float, boundary: BoundarySpec,
                  tol: float = 1e-10, max_iter: int = 2000) -> Tuple[CellField, KrylovResult]:
    """
    div((Δt/ρ)∇ψ) = div u⋆. All-Neumann problems get a mean-zero
    right-hand side and a mean-zero ψ.
    """
    grid = flow.grid
    sides = boundary.pressure
    A, shift = assemble_poisson(flow.rho, dt, sides)
    rhs = divergence(u_star).interior.ravel() - shift
    singular = _singular(sides)
    if singular:
        rhs = rhs - rhs.mean()
    result = krylov_solve(SparseSystem(-A, -rhs, "poisson"), tol=tol, max_iter=max_iter,
                          method=KrylovMethod.cg, preconditioner=Preconditioner.jacobi)
    x = result.x - result.x.mean() if singular else result.x
    psi = CellField.zeros(grid)
    psi.interior = x.reshape(grid.ny, grid.nx)
    fill_ghosts(psi, boundary, "pressure")
    return psi, result


def correct(flow: FlowState, u_star: FaceVectorField, psi: CellField, dt: float,
            boundary: BoundarySpec) -> FlowState:
    """u^{n+1} = u⋆ − (Δt/ρ)∇ψ on every stored face; p^{n+1} = pⁿ + ψ."""
    grid = flow.grid
    ru, rv = face_density(flow.rho)
    gp = gradient_at_faces(psi)
    vel = u_star.copy()
    su, sv = storage_slice(grid, UFACE), storage_slice(grid, VFACE)
    ru = ru.reshape(vel.u.shape)
    rv = rv.reshape(vel.v.shape)
    vel.u[su] = u_star.u[su] - dt / ru[su] * gp.u[su]
    vel.v[sv] = u_star.v[sv] - dt / rv[sv] * gp.v[sv]
    fill_ghosts(vel, boundary)
    p = flow.p.copy()
    p.data = p.data + psi.data
    fill_ghosts(p, boundary, "pressure")
    return FlowState(vel, p, flow.rho, flow.mu, flow.t, flow.step_index)


# ---------------------------------------------------------------------------
# Full step
# ---------------------------------------------------------------------------

def make_flow_state(grid: GridSpec, vel: FaceVectorField, ls: LevelSet, config: CaseConfig,
                    boundary: BoundarySpec) -> FlowState:
    fill_ghosts(vel, boundary)
    rho, mu = update_material_properties(ls, config.density, config.density,
                                         config.mu_outer, config.mu_inner)
    return FlowState(vel, CellField.zeros(grid), rho, mu)


def _check_blowup(flow: FlowState, config: CaseConfig) -> float:
    threshold = config.blowup_factor * config.reference_speed
    finite = np.all(np.isfinite(flow.vel.u)) and np.all(np.isfinite(flow.vel.v))
    speed = flow.vel.max_speed() if finite else float("inf")
    if not finite or speed > threshold:
        logger.error("blow-up at step %d: max|u|=%.6g threshold=%.6g", flow.step_index, speed, threshold)
        raise BlowUpError(flow.step_index, flow.t, speed, threshold)
    return speed


def step(state: SolverState, config: CaseConfig, mode: Optional[SchemeMode] = None,
         dt: Optional[float] = None) -> SolverState:
    """
    One full cycle: material properties, elastic pipeline, momentum,
    projection, transport of φ and Y with u^{n+1}, reinitialization and
    extrapolation. Raises BlowUpError, SolverError or
    DegenerateDeformationError.
    """
    mode = SchemeMode(mode or config.scheme)
    dt = dt or config.dt
    boundary = config.boundary
    flow, ls, ymap = state.flow, state.ls, state.ymap
    grid = flow.grid

    fill_ghosts(ls.phi, boundary)
    rho, mu = update_material_properties(ls, config.density, config.density,
                                         config.mu_outer, config.mu_inner)
    flow = FlowState(flow.vel, flow.p, rho, mu, flow.t, flow.step_index)

    normals = normal_field(ls)
    n1, n2 = normals.n1.data, normals.n2.data
    use_level_set = config.z_formula == ZFormula.level_set and state.phi0 is not None
    defo = deformation_state(ymap, n1, n2, state.deformation,
                             ls if use_level_set else None, state.phi0 if use_level_set else None)
    in_band = np.abs(ls.phi.interior) < ls.epsilon
    bad = defo.degenerate_in(in_band)
    if bad:
        logger.error("%d degenerate deformation cells inside the interface band", bad)
        raise DegenerateDeformationError(bad)
    K = config.K
    sigma = compute_stress(defo.z, n1, n2, K)
    force = elastic_force(sigma, ls)

    if mode == SchemeMode.SemiImplicit:
        system = assemble_momentum_semi_implicit(flow, force, sigma, defo.z, n1, n2, ls, dt, K, boundary)
    else:
        system = assemble_momentum_explicit(flow, force, dt, boundary)
    momentum = krylov_solve(system, guess=flow.vel.stacked(), tol=config.momentum_tol,
                            max_iter=config.max_iter, method=config.krylov_method,
                            preconditioner=config.preconditioner, restart=config.restart)
    u_star = flow.vel.copy()
    u_star.set_stacked(momentum.x)
    fill_ghosts(u_star, boundary)
    rebalance_outflow(u_star, boundary.velocity)

    psi, poisson = solve_poisson(flow, u_star, dt, boundary, config.poisson_tol, config.max_iter)
    flow = correct(flow, u_star, psi, dt, boundary)
    flow.t += dt
    flow.step_index += 1

    scalar_sides = boundary.scalar
    phi = advect_rk3(ls.phi, flow.vel, dt, scalar_sides)
    ls = LevelSet(phi, ls.epsilon)
    ymap = BackwardMap(advect_rk3(ymap.y1, flow.vel, dt, scalar_sides),
                       advect_rk3(ymap.y2, flow.vel, dt, scalar_sides))
    dtau = config.reinit_dtau_factor * grid.dx
    if config.reinit_every and flow.step_index % config.reinit_every == 0:
        ls = reinitialize(ls, config.reinit_steps, dtau, scalar_sides)
    if config.extrap_every and flow.step_index % config.extrap_every == 0:
        ymap = extrapolate_backward_map(ymap, ls, config.extrap_steps, dtau, scalar_sides)

    speed = _check_blowup(flow, config)
    z_band = defo.z.interior[in_band] if in_band.any() else np.ones(1)
    diag = StepDiagnostics(
        step=flow.step_index, t=flow.t,
        momentum_iters=momentum.iterations, momentum_residual=momentum.residual,
        poisson_iters=poisson.iterations, poisson_residual=poisson.residual,
        max_u=speed, min_z=float(z_band.min()), max_z=float(z_band.max()),
        divergence=float(np.abs(divergence(flow.vel).interior).max()),
        area=enclosed_area(ls), degenerate=defo.degenerate_in(np.ones_like(in_band)),
    )
    logger.info(diag.line())
    return SolverState(flow, ls, ymap, defo, state.phi0, diag, state.history + [diag])
