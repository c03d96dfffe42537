"""
Unit tests for the staggered grid, ghost maps and discrete operators.
"""

import numpy as np
import pytest

from backend.core.exceptions import ConfigurationError
from backend.core.grid import (
    GHOST,
    CellField,
    FaceVectorField,
    Location,
    cell_field_from_storage,
    coordinates,
    divergence,
    fill_ghosts,
    full_shape,
    gradient_at_faces,
    interp_cell_to_corner,
    laplacian,
    read_snapshot,
    staggered_ops,
    storage_slice,
    velocity_prolongation,
    write_snapshot,
)
from backend.core.models import (
    BoundaryKind,
    BoundarySpec,
    GridSpec,
    SideCondition,
    SideSet,
)


class TestGridLayout:
    """Shapes, spacings and coordinates."""

    @pytest.fixture
    def grid(self):
        """8x4 grid on [0,2]x[0,1]."""
        return GridSpec(nx=8, ny=4, x_min=0.0, x_max=2.0, y_min=0.0, y_max=1.0)

    def test_spacing(self, grid):
        """dx and dy follow the extents."""
        assert grid.dx == pytest.approx(0.25)
        assert grid.dy == pytest.approx(0.25)
        assert grid.is_square()

    def test_full_shapes(self, grid):
        """Face locations carry one extra entry along their normal axis."""
        assert full_shape(grid, Location.CELL) == (4 + 2 * GHOST, 8 + 2 * GHOST)
        assert full_shape(grid, Location.UFACE) == (4 + 2 * GHOST, 9 + 2 * GHOST)
        assert full_shape(grid, Location.VFACE) == (5 + 2 * GHOST, 8 + 2 * GHOST)
        assert full_shape(grid, Location.CORNER) == (5 + 2 * GHOST, 9 + 2 * GHOST)

    def test_coordinates(self, grid):
        """First stored cell center sits half a cell inside the domain."""
        X, Y = coordinates(grid, Location.CELL)
        sl = storage_slice(grid, Location.CELL)
        assert X[sl][0, 0] == pytest.approx(0.125)
        assert Y[sl][0, 0] == pytest.approx(0.125)
        Xu, _ = coordinates(grid, Location.UFACE)
        assert Xu[storage_slice(grid, Location.UFACE)][0, 0] == pytest.approx(0.0)

    def test_shifted_locations(self):
        """Half shifts move between the four staggering locations."""
        assert Location.CELL.shifted("x") == Location.UFACE
        assert Location.UFACE.shifted("y") == Location.CORNER
        assert Location.CORNER.shifted("x") == Location.VFACE

    def test_non_increasing_bounds_rejected(self):
        """Degenerate domains fail validation."""
        with pytest.raises(ValueError):
            GridSpec(nx=4, ny=4, x_min=1.0, x_max=0.0)


class TestGhostCells:
    """Ghost filling for each boundary kind."""

    @pytest.fixture
    def grid(self):
        """Small square grid."""
        return GridSpec(nx=6, ny=6)

    def test_periodic_wraps(self, grid):
        """Periodic ghosts copy the opposite interior cells."""
        f = CellField.zeros(grid)
        f.interior = np.arange(36.0).reshape(6, 6)
        fill_ghosts(f, BoundarySpec.periodic())
        g = GHOST
        assert np.array_equal(f.data[g:g + 6, g - 1], f.data[g:g + 6, g + 5])
        assert np.array_equal(f.data[g - 2, g:g + 6], f.data[g + 4, g:g + 6])

    def test_neumann_copies_boundary_value(self, grid):
        """Neumann ghosts repeat the nearest stored value."""
        f = CellField.zeros(grid)
        f.interior = np.arange(36.0).reshape(6, 6)
        fill_ghosts(f, BoundarySpec())
        g = GHOST
        for depth in range(1, GHOST + 1):
            assert np.array_equal(f.data[g:g + 6, g - depth], f.data[g:g + 6, g])

    def test_dirichlet_cell_mirror(self, grid):
        """Cell ghosts reflect about the prescribed boundary value."""
        sides = SideSet.uniform(BoundaryKind.dirichlet, value=1.0)
        f = CellField.zeros(grid)
        fill_ghosts(f, BoundarySpec(scalar=sides))
        g = GHOST
        assert np.allclose(f.data[g:g + 6, g - 1], 2.0)

    def test_wall_normal_faces_set(self, grid):
        """Wall sides write their normal velocity on the boundary faces."""
        sides = SideSet(
            left=SideCondition(kind=BoundaryKind.dirichlet, normal=0.5),
            right=SideCondition(kind=BoundaryKind.dirichlet, normal=0.5),
            bottom=SideCondition(kind=BoundaryKind.moving_wall, value=-1.0),
            top=SideCondition(kind=BoundaryKind.moving_wall, value=1.0),
        )
        vel = FaceVectorField.zeros(grid)
        fill_ghosts(vel, BoundarySpec(velocity=sides))
        assert np.allclose(vel.u_interior[:, 0], 0.5)
        assert np.allclose(vel.u_interior[:, -1], 0.5)
        assert np.allclose(vel.v_interior[0, :], 0.0)
        # tangential u ghost below the bottom wall mirrors about -1
        g = GHOST
        assert np.allclose(vel.u[g - 1, g:g + 7] + vel.u[g, g:g + 7], -2.0)

    def test_unknown_family_rejected(self, grid):
        """Only scalar and pressure families exist for cell fields."""
        with pytest.raises(ConfigurationError):
            fill_ghosts(CellField.zeros(grid), BoundarySpec(), family="temperature")

    def test_prolongation_matches_fill(self, grid):
        """Extended = P @ stored + c reproduces fill_ghosts."""
        spec = BoundarySpec(velocity=SideSet(
            left=SideCondition(kind=BoundaryKind.neumann),
            right=SideCondition(kind=BoundaryKind.neumann),
            bottom=SideCondition(kind=BoundaryKind.moving_wall, value=-2.0),
            top=SideCondition(kind=BoundaryKind.moving_wall, value=2.0),
        ))
        rng = np.random.default_rng(3)
        vel = FaceVectorField.zeros(grid)
        vel.set_stacked(rng.standard_normal(vel.stacked().size))
        fill_ghosts(vel, spec)
        P, c = velocity_prolongation(grid, spec)
        assert np.allclose(P @ vel.stacked() + c, vel.extended())


class TestOperators:
    """Discrete operators on smooth fields."""

    @pytest.fixture
    def grid(self):
        """16x16 unit square."""
        return GridSpec(nx=16, ny=16)

    def test_divergence_of_linear_field(self, grid):
        """div(x, y) = 2 exactly."""
        vel = FaceVectorField.from_functions(grid, lambda x, y: x, lambda x, y: y)
        assert np.allclose(divergence(vel).interior, 2.0)

    def test_laplacian_of_quadratic(self, grid):
        """Five-point Laplacian is exact on quadratics."""
        p = CellField.from_function(grid, lambda x, y: x ** 2 + y ** 2)
        assert np.allclose(laplacian(p).interior, 4.0)

    def test_laplacian_is_div_grad(self, grid):
        """Flux-form Laplacian equals the divergence of the face gradient."""
        rng = np.random.default_rng(0)
        p = CellField(grid, rng.standard_normal(full_shape(grid, Location.CELL)))
        assert np.allclose(laplacian(p).interior, divergence(gradient_at_faces(p)).interior)

    def test_sparse_diff_matches_linear_slope(self, grid):
        """Sparse x-difference of a linear cell field is its slope."""
        ops = staggered_ops(grid)
        p = CellField.from_function(grid, lambda x, y: 3.0 * x - y)
        du = (ops.diff(Location.CELL, "x") @ p.data.ravel()).reshape(full_shape(grid, Location.UFACE))
        assert np.allclose(du[storage_slice(grid, Location.UFACE)], 3.0)

    def test_interp_to_corner_exact_for_linear(self, grid):
        """Four-point corner mean reproduces bilinear data."""
        p = CellField.from_function(grid, lambda x, y: 1.0 + 2.0 * x + 5.0 * y)
        value = interp_cell_to_corner(p, 4, 7)
        assert value == pytest.approx(1.0 + 2.0 * 4 * grid.dx + 5.0 * 7 * grid.dy)
        ops = staggered_ops(grid)
        corners = (ops.interp(Location.CELL, Location.CORNER) @ p.data.ravel()).reshape(
            full_shape(grid, Location.CORNER))
        assert corners[GHOST + 7, GHOST + 4] == pytest.approx(value)


class TestSnapshots:
    """Plain-text field snapshots."""

    def test_round_trip(self, tmp_path):
        """Values, grid and time survive write/read bit-exactly."""
        grid = GridSpec(nx=5, ny=3, x_min=-1.0, x_max=1.5, y_min=0.0, y_max=1.5)
        values = np.random.default_rng(1).standard_normal((3, 5))
        path = write_snapshot(values, grid, 0.3, tmp_path / "phi.txt")
        grid2, t, values2 = read_snapshot(path)
        assert grid2 == grid
        assert t == 0.3
        assert np.array_equal(values2, values)

    def test_cell_field_from_storage(self):
        """Wrapped storage gets Neumann ghosts."""
        grid = GridSpec(nx=4, ny=4)
        f = cell_field_from_storage(grid, np.ones((4, 4)))
        assert np.allclose(f.data, 1.0)
