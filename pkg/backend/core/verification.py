"""
Manufactured-solution check of the staggered semi-implicit kernels.

The problem

    10u + div((u·∇)M − M[∇u] − [∇u]ᵀM − ([∇u]:M)M) = S

is assembled on the unit square with the same stencils the momentum
solver uses, with homogeneous Dirichlet velocity, and solved on nested
meshes. The source S comes from sympy and is cross-checked against
sixth-order finite differences of the analytic fields.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sp
import sympy as sym

from .exceptions import NumericalFailure
from .grid import (
    CellField,
    FaceVectorField,
    Location,
    SymTensor2,
    coordinates,
    staggered_ops,
    storage_slice,
)
from .linalg import SparseSystem, direct_solve
from .models import BoundarySpec, GridSpec
from .ns_solver import (
    AXES,
    COMPONENTS,
    fold_velocity_system,
    stress_advection_operator,
    variable_coefficient_stencil,
)
from .report import write_csv
from .utils import observed_orders

logger = logging.getLogger(__name__)

X, Y = sym.symbols("x y", real=True)
DEFAULT_MESHES = (20, 40, 80, 160, 320)
FD_WEIGHTS = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
ORACLE_TOL = 1e-8


def _default_u():
    return sym.sin(sym.pi * X) * sym.sin(sym.pi * Y)


def _default_m():
    return 1 + sym.sin(sym.pi * X * Y)


@dataclass(frozen=True)
class MsCase:
    """Analytic velocity (u1, u2) and symmetric tensor M of the manufactured problem."""
    u1: sym.Expr = field(default_factory=_default_u)
    u2: sym.Expr = field(default_factory=_default_u)
    m_xx: sym.Expr = field(default_factory=_default_m)
    m_xy: sym.Expr = field(default_factory=_default_m)
    m_yy: sym.Expr = field(default_factory=_default_m)
    mass: float = 10.0
    meshes: Tuple[int, ...] = DEFAULT_MESHES

    @property
    def u(self) -> Tuple[sym.Expr, sym.Expr]:
        return (self.u1, self.u2)

    @property
    def m(self) -> Tuple[Tuple[sym.Expr, sym.Expr], Tuple[sym.Expr, sym.Expr]]:
        return ((self.m_xx, self.m_xy), (self.m_xy, self.m_yy))


def _numeric(expr: sym.Expr) -> Callable:
    f = sym.lambdify((X, Y), expr, "numpy")

    def evaluate(x, y):
        x = np.asarray(x, dtype=float)
        return np.asarray(f(x, y), dtype=float) + np.zeros_like(x + np.asarray(y, dtype=float))
    return evaluate


# ---------------------------------------------------------------------------
# Source oracles
# ---------------------------------------------------------------------------

def source_expressions(case: MsCase) -> Tuple[sym.Expr, sym.Expr]:
    """Symbolic S by differentiation of the analytic fields."""
    u, m, xs = case.u, case.m, (X, Y)
    grad = [[sym.diff(u[c], xs[b]) for b in range(2)] for c in range(2)]
    contraction = sum(grad[c][d] * m[c][d] for c in range(2) for d in range(2))
    out = []
    for a in range(2):
        total = case.mass * u[a]
        for b in range(2):
            flux = (sum(u[k] * sym.diff(m[a][b], xs[k]) for k in range(2))
                    - sum(m[a][c] * grad[c][b] for c in range(2))
                    - sum(grad[c][a] * m[c][b] for c in range(2))
                    - contraction * m[a][b])
            total += sym.diff(flux, xs[b])
        out.append(total)
    return out[0], out[1]


def manufactured_source(point: Tuple[float, float], case: Optional[MsCase] = None) -> np.ndarray:
    case = case or MsCase()
    s1, s2 = _source_functions(case)
    x, y = point
    return np.array([float(s1(x, y)), float(s2(x, y))])


_SOURCE_CACHE: Dict[MsCase, Tuple[Callable, Callable]] = {}


def _source_functions(case: MsCase) -> Tuple[Callable, Callable]:
    if case not in _SOURCE_CACHE:
        s1, s2 = source_expressions(case)
        _SOURCE_CACHE[case] = (_numeric(s1), _numeric(s2))
    return _SOURCE_CACHE[case]


def _fd(f: Callable, axis: int, h: float) -> Callable:
    """Sixth-order central first derivative of a pointwise function."""
    def derivative(x, y):
        total = 0.0
        for k, w in zip(range(-3, 4), FD_WEIGHTS):
            if w == 0.0:
                continue
            total = total + w * (f(x + k * h, y) if axis == 0 else f(x, y + k * h))
        return total / h
    return derivative


def finite_difference_source(case: MsCase, h: float = 5e-3) -> Tuple[Callable, Callable]:
    """S from nested sixth-order differences of the analytic u and M only."""
    u = [_numeric(e) for e in case.u]
    m = [[_numeric(e) for e in row] for row in case.m]
    grad = [[_fd(u[c], b, h) for b in range(2)] for c in range(2)]
    dm = [[[_fd(m[a][b], k, h) for k in range(2)] for b in range(2)] for a in range(2)]

    def flux(a, b):
        def value(x, y):
            contraction = sum(grad[c][d](x, y) * m[c][d](x, y) for c in range(2) for d in range(2))
            return (sum(u[k](x, y) * dm[a][b][k](x, y) for k in range(2))
                    - sum(m[a][c](x, y) * grad[c][b](x, y) for c in range(2))
                    - sum(grad[c][a](x, y) * m[c][b](x, y) for c in range(2))
                    - contraction * m[a][b](x, y))
        return value

    def component(a):
        div = [_fd(flux(a, b), b, h) for b in range(2)]
        return lambda x, y: case.mass * u[a](x, y) + div[0](x, y) + div[1](x, y)

    return component(0), component(1)


def check_source_oracles(case: Optional[MsCase] = None, n_points: int = 7,
                         tol: float = ORACLE_TOL) -> float:
    """
    Maximum scaled disagreement of the symbolic and finite-difference
    sources on an n_points² lattice of the unit square.
    """
    case = case or MsCase()
    xs = np.linspace(0.0, 1.0, n_points)
    px, py = np.meshgrid(xs, xs, indexing="xy")
    sym_s = _source_functions(case)
    fd_s = finite_difference_source(case)
    worst = 0.0
    for exact, approx in zip(sym_s, fd_s):
        a, b = exact(px, py), approx(px, py)
        scale = max(1.0, float(np.abs(a).max()))
        worst = max(worst, float(np.abs(a - b).max()) / scale)
    if worst > tol:
        logger.error("manufactured source oracles disagree: %.3e", worst)
        raise NumericalFailure(f"manufactured source oracles disagree by {worst:.3e}")
    logger.debug("source oracles agree to %.3e", worst)
    return worst


# ---------------------------------------------------------------------------
# Discrete system
# ---------------------------------------------------------------------------

def unit_square(n: int) -> GridSpec:
    return GridSpec(nx=n, ny=n, x_min=0.0, x_max=1.0, y_min=0.0, y_max=1.0)


def _tensor_on_cells(grid: GridSpec, case: MsCase) -> SymTensor2:
    xx, xy, yy = (CellField.from_function(grid, _numeric(e)).data
                  for e in (case.m_xx, case.m_xy, case.m_yy))
    return SymTensor2(xx, xy, yy)


def ms_operator_parts(grid: GridSpec, case: MsCase) -> Dict[str, sp.csr_matrix]:
    """
    Extended-space pieces of the manufactured operator: `mass`,
    `advection` (div of (u·∇)M) and `elastic` (the three ∂(m∂u) families).
    """
    ops = staggered_ops(grid)
    tensor = _tensor_on_cells(grid, case)
    m = [[tensor.component(a, b) for b in range(2)] for a in range(2)]
    mass = case.mass * (ops.embed_rows("u", ops.select("u")) + ops.embed_rows("v", ops.select("v")))
    elastic = None
    for a in range(2):
        for b in range(2):
            for c in range(2):
                for d in range(2):
                    coef = m[a][b] * m[c][d]
                    if d == b:
                        coef = coef + m[a][c]
                    if d == a:
                        coef = coef + m[c][b]
                    term = variable_coefficient_stencil(AXES[b] + AXES[d], coef, COMPONENTS[c],
                                                        COMPONENTS[a], grid)
                    elastic = term if elastic is None else elastic + term
    return {
        "mass": mass.tocsr(),
        "advection": stress_advection_operator(tensor, grid),
        "elastic": elastic.tocsr(),
    }


def _source_extended(grid: GridSpec, case: MsCase) -> np.ndarray:
    s1, s2 = _source_functions(case)
    xu, yu = coordinates(grid, Location.UFACE)
    xv, yv = coordinates(grid, Location.VFACE)
    return np.concatenate([s1(xu, yu).ravel(), s2(xv, yv).ravel()])


def assemble_ms_system(n: int, case: Optional[MsCase] = None) -> SparseSystem:
    """Assembled manufactured system on the n×n unit square (meta holds the grid)."""
    case = case or MsCase()
    grid = unit_square(n)
    parts = ms_operator_parts(grid, case)
    L = parts["mass"] + parts["advection"] - parts["elastic"]
    system = fold_velocity_system(L, _source_extended(grid, case), grid, BoundarySpec(),
                                  ordering="manufactured")
    system.meta["grid"] = grid
    return system


def exact_velocity(grid: GridSpec, case: MsCase) -> FaceVectorField:
    return FaceVectorField.from_functions(grid, _numeric(case.u1), _numeric(case.u2))


def l2_error(u_h: FaceVectorField, exact: FaceVectorField) -> float:
    """Cell-area-weighted L2 norm of the face-sampled difference."""
    grid = u_h.grid
    su, sv = storage_slice(grid, Location.UFACE), storage_slice(grid, Location.VFACE)
    du = u_h.u[su] - exact.u[su]
    dv = u_h.v[sv] - exact.v[sv]
    return float(math.sqrt((np.sum(du ** 2) + np.sum(dv ** 2)) * grid.cell_area))


def convergence_orders(errors: Sequence[float], meshes: Sequence[int]) -> List[float]:
    """log(e_k/e_{k+1}) / log(n_{k+1}/n_k)."""
    if len(errors) != len(meshes) or len(meshes) < 2:
        raise ValueError("need matching error and mesh lists of length ≥ 2")
    orders = []
    for k in range(len(meshes) - 1):
        ratio = meshes[k + 1] / meshes[k]
        orders.extend(observed_orders(errors[k:k + 2], ratio))
    return orders


@dataclass
class MsResult:
    n: int
    velocity: FaceVectorField
    error: float
    iterations: int


def solve_ms(n: int, case: Optional[MsCase] = None, tol: float = 1e-9) -> MsResult:
    case = case or MsCase()
    system = assemble_ms_system(n, case)
    grid = system.meta["grid"]
    result = direct_solve(system, tol=tol)
    u_h = FaceVectorField.zeros(grid)
    u_h.set_stacked(result.x)
    error = l2_error(u_h, exact_velocity(grid, case))
    logger.info("manufactured n=%d error=%.6e iterations=%d", n, error, result.iterations)
    return MsResult(n, u_h, error, result.iterations)


def run_convergence(meshes: Optional[Sequence[int]] = None, case: Optional[MsCase] = None,
                    out_dir: Optional[Path] = None) -> pd.DataFrame:
    """
    Error sweep with guide lines 0.15·dx and dx². Writes
    grid_conv_validation.csv when out_dir is given.
    """
    case = case or MsCase()
    meshes = list(meshes or case.meshes)
    check_source_oracles(case)
    errors = [solve_ms(n, case).error for n in meshes]
    orders = [math.nan] + convergence_orders(errors, meshes)
    frame = pd.DataFrame({
        "elem": meshes,
        "error": errors,
        "first_order_guide": [0.15 / n for n in meshes],
        "second_order_guide": [1.0 / n ** 2 for n in meshes],
        "order": orders,
    })
    if out_dir is not None:
        write_csv(frame, Path(out_dir) / "grid_conv_validation.csv")
    return frame
