"""
Unit tests for level-set and backward-map kinematics.
"""

import numpy as np
import pytest
from scipy.integrate import trapezoid

from backend.core.grid import CellField, FaceVectorField
from backend.core.kinematics import (
    BackwardMap,
    CircleLevelSet,
    LevelSet,
    PlaneLevelSet,
    advect_backward_map,
    advect_rk3,
    cell_centers,
    circle_level_set,
    enclosed_area,
    extrapolate_backward_map,
    gradient_magnitude,
    level_set_from,
    normal_field,
    reinitialize,
    smooth_cutoff,
    smooth_delta,
    smooth_heaviside,
    weno5_flux_derivative,
)
from backend.core.models import BoundaryKind, GridSpec, SideSet


PERIODIC = SideSet.uniform(BoundaryKind.periodic)


def _flux_error(n, speed):
    """Max error of the upwinded speed·∂x sin(2πx) on an n×n periodic unit square."""
    grid = GridSpec(nx=n, ny=n)
    q = CellField.from_function(grid, lambda x, y: np.sin(2.0 * np.pi * x))
    X, _ = cell_centers(grid)
    u = speed(X)
    out = weno5_flux_derivative(q, u, "x", PERIODIC)
    return np.abs(out.interior - u * 2.0 * np.pi * np.cos(2.0 * np.pi * X)).max()


class TestWeno:
    """Left- and right-biased WENO5 derivatives."""

    @pytest.mark.parametrize("sign", [1.0, -1.0])
    def test_uniform_speed_converges(self, sign):
        """Both upwind directions converge at high order on a smooth profile."""
        errors = [_flux_error(n, lambda X: sign + 0.0 * X) for n in (32, 64, 128)]
        assert errors[0] > errors[1] > errors[2]
        assert errors[1] / errors[2] > 6.0
        assert errors[2] < 1e-3

    def test_directions_are_mirror_images(self):
        """sin(2πx) is odd about x = ½, so both biases give the same error."""
        for n in (32, 64):
            right = _flux_error(n, lambda X: 1.0 + 0.0 * X)
            left = _flux_error(n, lambda X: -1.0 + 0.0 * X)
            assert right == pytest.approx(left, rel=1e-3, abs=1e-12)

    def test_sign_changing_speed_converges(self):
        """u = cos(2πx) switches stencils across the domain without losing order."""
        errors = [_flux_error(n, lambda X: np.cos(2.0 * np.pi * X)) for n in (32, 64, 128)]
        assert errors[1] / errors[2] > 6.0
        assert errors[2] < 1e-3



class TestCutoffs:
    """Smoothed Heaviside / delta pair."""

    def test_cutoff_values(self):
        """ζ peaks at 0 and vanishes at and beyond ±1."""
        assert smooth_cutoff(0.0) == pytest.approx(1.0)
        assert smooth_cutoff(1.0) == pytest.approx(0.0, abs=1e-15)
        assert smooth_cutoff(-1.5) == 0.0

    def test_heaviside_values(self):
        """H goes from 0 to 1 through ½."""
        assert smooth_heaviside(-1.0) == 0.0
        assert smooth_heaviside(0.0) == pytest.approx(0.5)
        assert smooth_heaviside(2.0) == 1.0

    def test_delta_integrates_to_one(self):
        """∫δ_ε = 1."""
        eps = 0.1
        phi = np.linspace(-0.2, 0.2, 40001)
        assert trapezoid(smooth_delta(phi, eps), phi) == pytest.approx(1.0, rel=1e-6)


class TestTransport:
    """WENO5 + SSP-RK3 advection."""

    @pytest.fixture
    def grid(self):
        """64x64 unit square."""
        return GridSpec(nx=64, ny=64)

    def test_zero_velocity_leaves_map_unchanged(self, grid):
        """Y is frozen when u = 0."""
        ymap = BackwardMap.identity(grid)
        out = advect_backward_map(ymap, FaceVectorField.zeros(grid), 0.01)
        assert np.array_equal(out.y1.interior, ymap.y1.interior)
        assert np.array_equal(out.y2.interior, ymap.y2.interior)

    def test_uniform_translation_of_linear_field(self, grid):
        """Y1 = x under u = 1 becomes x − dt away from the boundary."""
        ymap = BackwardMap.identity(grid)
        vel = FaceVectorField.from_functions(grid, lambda x, y: 1.0 + 0.0 * x, lambda x, y: 0.0 * x)
        dt = 0.25 * grid.dx
        out = advect_backward_map(ymap, vel, dt)
        X, _ = cell_centers(grid)
        assert np.allclose(out.y1.interior[:, 8:-8], X[:, 8:-8] - dt, atol=1e-12)
        assert np.allclose(out.y2.interior[:, 8:-8], ymap.y2.interior[:, 8:-8], atol=1e-12)

    def test_periodic_sine_wave(self, grid):
        """A smooth periodic profile is transported to high accuracy."""
        sides = SideSet.uniform(BoundaryKind.periodic)
        q = CellField.from_function(grid, lambda x, y: np.sin(2.0 * np.pi * x))
        vel = FaceVectorField.from_functions(grid, lambda x, y: 1.0 + 0.0 * x, lambda x, y: 0.0 * x)
        dt = 0.5 * grid.dx
        out = advect_rk3(q, vel, dt, sides)
        X, _ = cell_centers(grid)
        assert np.abs(out.interior - np.sin(2.0 * np.pi * (X - dt))).max() < 1e-3


    def test_periodic_sine_wave_leftward(self, grid):
        """The same profile moved by u = −1 uses the right-biased stencil."""
        q = CellField.from_function(grid, lambda x, y: np.sin(2.0 * np.pi * x))
        vel = FaceVectorField.from_functions(grid, lambda x, y: -1.0 + 0.0 * x, lambda x, y: 0.0 * x)
        dt = 0.5 * grid.dx
        out = advect_rk3(q, vel, dt, PERIODIC)
        X, _ = cell_centers(grid)
        assert np.abs(out.interior - np.sin(2.0 * np.pi * (X + dt))).max() < 1e-3

    def test_rigid_rotation_conserves_area(self):
        """A quarter turn of u = (−y, x) keeps the disc area and rotates its centroid."""
        grid = GridSpec(nx=64, ny=64, x_min=-1.0, x_max=1.0, y_min=-1.0, y_max=1.0)
        ls = circle_level_set(grid, 0.3, cx=0.4)
        vel = FaceVectorField.from_functions(grid, lambda x, y: -y, lambda x, y: x)
        steps = 100
        dt = 0.5 * np.pi / steps
        area0 = enclosed_area(ls)
        phi = ls.phi
        for _ in range(steps):
            phi = advect_rk3(phi, vel, dt, SideSet())
        out = LevelSet(phi, ls.epsilon)
        assert enclosed_area(out) == pytest.approx(area0, rel=2e-2)
        X, Y = cell_centers(grid)
        inside = out.phi.interior < 0.0
        assert abs(X[inside].mean()) < 2.0 * grid.dx
        assert abs(Y[inside].mean() - 0.4) < 2.0 * grid.dx


class TestReinitialization:
    """Pseudo-time reinitialization toward a signed distance."""

    @pytest.fixture
    def grid(self):
        """64x64 grid on [-1,1]²."""
        return GridSpec(nx=64, ny=64, x_min=-1.0, x_max=1.0, y_min=-1.0, y_max=1.0)

    def test_signed_distance_nearly_fixed(self, grid):
        """An exact signed distance moves by a small fraction of dx."""
        ls = level_set_from(grid, CircleLevelSet(0.5))
        out = reinitialize(ls, n_pseudo_steps=5)
        band = np.abs(ls.phi.interior) < 3.0 * grid.dx
        assert np.abs(out.phi.interior - ls.phi.interior)[band].max() < 0.05 * grid.dx

    def test_restores_unit_gradient(self, grid):
        """A stretched level set regains |∇φ| ≈ 1 near its zero set without moving it."""
        circle = CircleLevelSet(0.5)
        ls = level_set_from(grid, lambda x, y: 2.0 * circle(x, y))
        out = reinitialize(ls, n_pseudo_steps=50)
        band = np.abs(circle(*cell_centers(grid))) < 3.0 * grid.dx
        grad = gradient_magnitude(out)[3:-3, 3:-3]
        assert np.abs(grad[band] - 1.0).max() < 0.1
        far = np.abs(ls.phi.interior) > 2.0 * grid.dx
        assert np.all(np.sign(out.phi.interior[far]) == np.sign(ls.phi.interior[far]))


    def test_quadratic_becomes_distance(self, grid):
        """φ0 = x² + y² − a² relaxes to r − a while its zero set stays put."""
        a = 0.5
        ls = level_set_from(grid, lambda x, y: x ** 2 + y ** 2 - a ** 2)
        out = reinitialize(ls, n_pseudo_steps=60)
        X, Y = cell_centers(grid)
        dist = np.hypot(X, Y) - a
        region = np.abs(dist) < 0.25
        assert np.abs(out.phi.interior - dist)[region].max() < 0.5 * grid.dx
        interface = np.abs(dist) < grid.dx
        assert np.abs(out.phi.interior - dist)[interface].max() < 0.25 * grid.dx
        grad = gradient_magnitude(out)[3:-3, 3:-3]
        assert np.abs(grad[np.abs(dist) < 0.2] - 1.0).max() < 0.1


class TestNormals:
    """Unit normals from the level set."""

    def test_circle_normals_radial(self):
        """Normals of a circle point away from its center."""
        grid = GridSpec(nx=64, ny=64, x_min=-1.0, x_max=1.0, y_min=-1.0, y_max=1.0)
        ls = level_set_from(grid, CircleLevelSet(0.5))
        nf = normal_field(ls)
        X, Y = cell_centers(grid)
        r = np.hypot(X, Y)
        band = np.abs(r - 0.5) < 2.0 * grid.dx
        assert np.allclose(nf.n1.interior[band], (X / r)[band], atol=1e-2)
        assert np.allclose(nf.n2.interior[band], (Y / r)[band], atol=1e-2)
        assert np.allclose(np.hypot(nf.n1.data, nf.n2.data), 1.0)

    def test_flat_level_set_defaults(self):
        """A constant φ has no gradient; normals default to (1, 0)."""
        grid = GridSpec(nx=8, ny=8)
        ls = level_set_from(grid, lambda x, y: 0.0 * x + 1.0)
        nf = normal_field(ls)
        assert nf.substituted == 64
        assert np.allclose(nf.n1.data, 1.0)
        assert np.allclose(nf.n2.data, 0.0)


class TestExtrapolation:
    """Linear extension of Y outside the membrane."""

    @pytest.fixture
    def grid(self):
        """32x32 unit square."""
        return GridSpec(nx=32, ny=32)

    def test_identity_map_is_preserved(self, grid):
        """A linear Y already satisfies the extension equations."""
        ls = level_set_from(grid, PlaneLevelSet(1.0, 0.0, 0.5))
        ymap = BackwardMap.identity(grid)
        out = extrapolate_backward_map(ymap, ls, n_pseudo_steps=10)
        assert np.allclose(out.y1.interior, ymap.y1.interior, atol=1e-10)
        assert np.allclose(out.y2.interior, ymap.y2.interior, atol=1e-10)

    def test_inside_values_untouched(self, grid):
        """Cells with φ < 0 keep their values exactly."""
        ls = level_set_from(grid, PlaneLevelSet(1.0, 0.0, 0.5))
        ymap = BackwardMap.identity(grid)
        inside = ls.phi.interior < 0.0
        noisy = ymap.y1.interior.copy()
        noisy[~inside] = 0.0
        ymap.y1.interior = noisy
        out = extrapolate_backward_map(ymap, ls, n_pseudo_steps=10)
        assert np.array_equal(out.y1.interior[inside], noisy[inside])


    def test_corrupted_exterior_rebuilt_linear(self, grid):
        """Random Y1 beyond the first exterior layer is replaced by Y1 = x."""
        ls = level_set_from(grid, PlaneLevelSet(1.0, 0.0, 0.5))
        ymap = BackwardMap.identity(grid)
        X, _ = cell_centers(grid)
        phi = ls.phi.interior
        corrupted = phi > 1.2 * grid.dx
        noisy = ymap.y1.interior.copy()
        noisy[corrupted] = np.random.default_rng(3).uniform(-1.0, 1.0, int(corrupted.sum()))
        ymap.y1.interior = noisy
        out = extrapolate_backward_map(ymap, ls, n_pseudo_steps=300)
        near = (phi > 0.0) & (phi < 6.0 * grid.dx)
        assert np.allclose(out.y1.interior[near], X[near], atol=1e-8)
        assert np.allclose(out.y2.interior, ymap.y2.interior, atol=1e-12)


class TestArea:
    """Heaviside-based enclosed area."""

    def test_circle_area(self):
        """Area of {φ < 0} approximates πR²."""
        grid = GridSpec(nx=128, ny=128, x_min=-1.0, x_max=1.0, y_min=-1.0, y_max=1.0)
        ls = level_set_from(grid, CircleLevelSet(0.5))
        assert enclosed_area(ls) == pytest.approx(np.pi * 0.25, rel=1e-2)
