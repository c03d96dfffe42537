"""
Pydantic models for grids, boundary conditions, case configuration and
run results. Numerical field containers live next to their kernels
(grid.py, kinematics.py, elasticity.py); everything that crosses a file,
CLI or HTTP boundary is declared here.
"""

import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

VERSION = "1.0.0"


class SchemeMode(str, Enum):
    """Coupling of the elastic source in the momentum step."""
    Explicit = "Explicit"
    SemiImplicit = "SemiImplicit"


class Scheme1D(str, Enum):
    """Time discretizations of the linearized 1D model."""
    Explicit = "Explicit"
    Implicit = "Implicit"
    SemiImplicit = "SemiImplicit"


class StabilityVerdict(str, Enum):
    """Outcome of an empirical marching classification."""
    Stable = "Stable"
    Unstable = "Unstable"


class BoundaryKind(str, Enum):
    """Per-side boundary condition kinds."""
    neumann = "neumann"
    dirichlet = "dirichlet"
    moving_wall = "moving_wall"
    periodic = "periodic"


class KrylovMethod(str, Enum):
    """Iterative solvers available to krylov_solve."""
    gmres = "gmres"
    bicgstab = "bicgstab"
    cg = "cg"


class Preconditioner(str, Enum):
    """Preconditioners available to krylov_solve."""
    none = "none"
    jacobi = "jacobi"
    ilu = "ilu"


class ZFormula(str, Enum):
    """Which area-variation formula feeds the elastic force."""
    trace = "trace"
    level_set = "level_set"


class GridSpec(BaseModel):
    """
    Uniform Cartesian MAC grid.
    """
    model_config = ConfigDict(frozen=True)

    nx: int = Field(..., ge=2, description="Cell count along x")
    ny: int = Field(..., ge=2, description="Cell count along y")
    x_min: float = Field(default=0.0, description="Left bound")
    x_max: float = Field(default=1.0, description="Right bound")
    y_min: float = Field(default=0.0, description="Bottom bound")
    y_max: float = Field(default=1.0, description="Top bound")

    @model_validator(mode="after")
    def positive_extent(self) -> "GridSpec":
        """Domain bounds must be increasing."""
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("domain bounds must satisfy x_max > x_min and y_max > y_min")
        return self

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def h(self) -> float:
        """Smallest cell size."""
        return min(self.dx, self.dy)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def is_square(self, rtol: float = 1e-12) -> bool:
        return math.isclose(self.dx, self.dy, rel_tol=rtol)


class SideCondition(BaseModel):
    """
    Condition on one side for one field family.

    `value` is the prescribed scalar value or the tangential wall speed;
    `normal` is the prescribed normal velocity (velocity family only).
    """
    model_config = ConfigDict(frozen=True)

    kind: BoundaryKind = Field(default=BoundaryKind.neumann, description="Condition kind")
    value: float = Field(default=0.0, description="Prescribed value or tangential speed")
    normal: float = Field(default=0.0, description="Prescribed normal velocity")


class SideSet(BaseModel):
    """Conditions on the four sides of the domain."""
    model_config = ConfigDict(frozen=True)

    left: SideCondition = Field(default_factory=SideCondition)
    right: SideCondition = Field(default_factory=SideCondition)
    bottom: SideCondition = Field(default_factory=SideCondition)
    top: SideCondition = Field(default_factory=SideCondition)

    @model_validator(mode="after")
    def periodic_pairs(self) -> "SideSet":
        """Periodic sides come in opposite pairs."""
        for a, b in (("left", "right"), ("bottom", "top")):
            pa = getattr(self, a).kind == BoundaryKind.periodic
            pb = getattr(self, b).kind == BoundaryKind.periodic
            if pa != pb:
                raise ValueError(f"periodic condition on {a} requires periodic on {b}")
        return self

    @classmethod
    def uniform(cls, kind: BoundaryKind, value: float = 0.0) -> "SideSet":
        side = SideCondition(kind=kind, value=value)
        return cls(left=side, right=side, bottom=side, top=side)


class BoundarySpec(BaseModel):
    """
    Boundary conditions per field family: velocity, advected scalars (φ, Y)
    and the pressure increment.
    """
    model_config = ConfigDict(frozen=True)

    velocity: SideSet = Field(default_factory=lambda: SideSet.uniform(BoundaryKind.dirichlet))
    scalar: SideSet = Field(default_factory=SideSet)
    pressure: SideSet = Field(default_factory=SideSet)

    @classmethod
    def periodic(cls) -> "BoundarySpec":
        sides = SideSet.uniform(BoundaryKind.periodic)
        return cls(velocity=sides, scalar=sides, pressure=sides)


class Model1DParams(BaseModel):
    """
    Linearized 1D membrane model parameters (periodic grid).
    """
    mu: float = Field(..., gt=0, description="Viscosity")
    K: float = Field(..., gt=0, description="Elastic modulus")
    eps: float = Field(..., gt=0, description="Interface half-width")
    dx: float = Field(..., gt=0, description="Grid size")
    dt: float = Field(..., gt=0, description="Time step")
    n_cells: int = Field(default=64, ge=4, description="Periodic cell count")

    def with_dt(self, dt: float) -> "Model1DParams":
        return self.model_copy(update={"dt": dt})


class AmplificationResponse(BaseModel):
    """Von Neumann amplification data for one Fourier mode."""
    alpha_theta: float
    beta_theta: float
    a_matrix: List[List[float]]
    b_matrix: List[List[float]]
    eigenvalues: List[Tuple[float, float]] = Field(..., description="(real, imag) pairs")
    spectral_radius: float


class AmplificationRequest(BaseModel):
    """Request for /stability1d/amplification."""
    params: Model1DParams
    theta: float = Field(..., ge=0.0, lt=2 * math.pi)
    scheme: Scheme1D = Scheme1D.SemiImplicit


class ClassifyRequest(BaseModel):
    """Request for /stability1d/classify."""
    params: Model1DParams
    scheme: Scheme1D
    horizon_steps: int = Field(default=500, ge=500, le=20000)


class ClassifyResponse(BaseModel):
    verdict: StabilityVerdict
    explicit_dt_bound: float
    max_amplitude_ratio: float
    energy_ratio: float


class CaseConfig(BaseModel):
    """
    Full description of one shear-flow experiment.

    Physical parameters follow the nondimensional definitions
    Re = ρa²γ̇/μ and Ca = μaγ̇/K with reference speed a·γ̇.
    """
    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    # grid
    nx: int = Field(default=128, ge=8, description="Cells along x")
    ny: int = Field(default=64, ge=8, description="Cells along y")
    x_min: float = Field(default=-4.0)
    x_max: float = Field(default=4.0)
    y_min: float = Field(default=-2.0)
    y_max: float = Field(default=2.0)

    # physics
    radius: float = Field(default=0.5, gt=0, description="Membrane radius a")
    gamma_dot: float = Field(default=1.0, ge=0, description="Imposed shear rate")
    reynolds: float = Field(default=0.1, gt=0, description="Re = ρa²γ̇/μ")
    capillary: float = Field(default=0.01, gt=0, description="Ca = μaγ̇/K")
    viscosity_ratio: float = Field(default=1.0, gt=0, description="μ_inside/μ_outside")
    density: float = Field(default=1.0, gt=0, description="ρ in both phases")
    mu1: Optional[float] = Field(default=None, gt=0, description="Outer viscosity override")
    stiffness: Optional[float] = Field(default=None, ge=0, description="K override")

    # scheme
    scheme: SchemeMode = Field(default=SchemeMode.Explicit)
    dt: float = Field(default=3.0e-2, gt=0)
    t_final: float = Field(default=1.5, gt=0)
    krylov_method: KrylovMethod = Field(default=KrylovMethod.gmres)
    preconditioner: Preconditioner = Field(default=Preconditioner.jacobi)
    restart: int = Field(default=30, ge=1)
    max_iter: int = Field(default=2000, ge=1)
    momentum_tol: float = Field(default=1e-8, gt=0)
    poisson_tol: float = Field(default=1e-10, gt=0)
    z_formula: ZFormula = Field(default=ZFormula.trace)
    blowup_factor: float = Field(default=100.0, gt=0)

    # schedules
    reinit_every: int = Field(default=1, ge=0, description="0 disables reinitialization")
    reinit_steps: int = Field(default=5, ge=0)
    reinit_dtau_factor: float = Field(default=0.3, gt=0, le=0.5)
    extrap_every: int = Field(default=1, ge=0, description="0 disables extrapolation")
    extrap_steps: int = Field(default=10, ge=0)

    # outputs
    snapshot_every: float = Field(default=0.1, ge=0, description="0 disables snapshots")

    @field_validator("scheme", mode="before")
    @classmethod
    def scheme_aliases(cls, v):
        """Accept EX / SI shorthands."""
        if isinstance(v, str):
            alias = {"ex": "Explicit", "explicit": "Explicit",
                     "si": "SemiImplicit", "semiimplicit": "SemiImplicit",
                     "semi_implicit": "SemiImplicit"}
            return alias.get(v.strip().lower(), v)
        return v

    @model_validator(mode="after")
    def square_cells(self) -> "CaseConfig":
        """The benchmark discretization assumes dx = dy."""
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("domain bounds must be increasing")
        if not self.grid.is_square():
            raise ValueError(
                f"cells must be square: dx={self.grid.dx:.6g}, dy={self.grid.dy:.6g} "
                f"(nx/ny must match the domain aspect ratio)"
            )
        if self.gamma_dot == 0 and (self.mu1 is None or self.stiffness is None):
            raise ValueError("gamma_dot = 0 requires explicit mu1 and stiffness")
        return self

    @property
    def grid(self) -> GridSpec:
        return GridSpec(nx=self.nx, ny=self.ny, x_min=self.x_min, x_max=self.x_max,
                        y_min=self.y_min, y_max=self.y_max)

    @property
    def mu_outer(self) -> float:
        if self.mu1 is not None:
            return self.mu1
        return self.density * self.radius ** 2 * self.gamma_dot / self.reynolds

    @property
    def mu_inner(self) -> float:
        return self.viscosity_ratio * self.mu_outer

    @property
    def K(self) -> float:
        if self.stiffness is not None:
            return self.stiffness
        return self.mu_outer * self.radius * self.gamma_dot / self.capillary

    @property
    def epsilon(self) -> float:
        return 2.0 * self.grid.dx

    @property
    def reference_speed(self) -> float:
        """a·γ̇, or a alone for the quiescent case."""
        speed = self.radius * self.gamma_dot
        return speed if speed > 0 else self.radius

    @property
    def n_steps(self) -> int:
        return max(1, int(math.ceil(self.t_final / self.dt - 1e-9)))

    @property
    def boundary(self) -> BoundarySpec:
        """Neumann left/right, moving walls top/bottom at ±γ̇·y_wall."""
        neumann = SideCondition(kind=BoundaryKind.neumann)
        velocity = SideSet(
            left=neumann,
            right=neumann,
            bottom=SideCondition(kind=BoundaryKind.moving_wall, value=self.gamma_dot * self.y_min),
            top=SideCondition(kind=BoundaryKind.moving_wall, value=self.gamma_dot * self.y_max),
        )
        return BoundarySpec(velocity=velocity, scalar=SideSet(), pressure=SideSet())


class ContourModel(BaseModel):
    """Serializable zero-isoline polyline."""
    x: List[float]
    y: List[float]
    closed: bool = True
    area: Optional[float] = None


class HausdorffRequest(BaseModel):
    first: ContourModel
    second: ContourModel


class HausdorffResponse(BaseModel):
    distance: float
    first_area: float
    second_area: float


class ConvergenceRequest(BaseModel):
    """Request for a manufactured-solution sweep."""
    meshes: List[int] = Field(default_factory=lambda: [20, 40], min_length=2)

    @field_validator("meshes")
    def small_meshes(cls, v: List[int]) -> List[int]:
        """The service only runs desk-sized meshes."""
        if any(n < 4 or n > 80 for n in v):
            raise ValueError("service meshes must lie in [4, 80]")
        return v


class ConvergenceResponse(BaseModel):
    meshes: List[int]
    errors: List[float]
    orders: List[float]


class RunSummary(BaseModel):
    """Condensed outcome of one shear run."""
    scheme: SchemeMode
    dt: float
    steps: int
    t: float
    completed: bool
    initial_area: float
    final_area: float
    area_drift: float
    max_speed: float
    min_z: float
    max_z: float
    final_contour: Optional[ContourModel] = None
    tangential_speed: Optional[float] = None
    message: Optional[str] = None


class TableRow(BaseModel):
    """One entry of the maximum-stable-Δt table."""
    mesh: str
    capillary: float
    scheme: SchemeMode
    max_dt: float
    reference_dt: Optional[float] = None


class HealthResponse(BaseModel):
    """Health check response."""
    status: str = Field(..., description="Status (e.g., 'ok')")
    version: str = Field(..., description="API version")


SECTIONS: Dict[str, List[str]] = {
    "grid": ["nx", "ny", "x_min", "x_max", "y_min", "y_max"],
    "physics": ["radius", "gamma_dot", "reynolds", "capillary", "viscosity_ratio", "density",
                "mu1", "stiffness"],
    "scheme": ["scheme", "dt", "t_final", "krylov_method", "preconditioner", "restart",
               "max_iter", "momentum_tol", "poisson_tol", "z_formula", "blowup_factor"],
    "schedules": ["reinit_every", "reinit_steps", "reinit_dtau_factor", "extrap_every",
                  "extrap_steps"],
    "outputs": ["snapshot_every"],
}
