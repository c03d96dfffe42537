"""
Unit tests for the shear-flow benchmark driver.
"""

import numpy as np
import pytest

from backend.core.bench import (
    area_drift,
    init_shear_case,
    max_stable_dt_search,
    run,
    shape_is_stationary,
    try_run,
)
from backend.core.exceptions import ConfigurationError
from backend.core.grid import divergence
from backend.core.models import CaseConfig, SchemeMode


def _quiescent(n=32, **updates):
    values = dict(nx=n, ny=n, x_min=-1.0, x_max=1.0, y_min=-1.0, y_max=1.0, gamma_dot=0.0,
                  mu1=1.0, stiffness=1.0, dt=0.01, t_final=0.03, snapshot_every=0.01)
    values.update(updates)
    return CaseConfig(**values)


class TestInitialState:
    """Shear case setup."""

    def test_parameters_from_capillary_number(self):
        """Ca = 0.02 gives μ₁ = 2.5 and K = 62.5."""
        config = CaseConfig(capillary=0.02)
        assert config.mu_outer == pytest.approx(2.5)
        assert config.K == pytest.approx(62.5)

    def test_initial_fields(self):
        """u = (γ̇y, 0) is divergence free; φ is the distance to the circle."""
        config = CaseConfig(nx=32, ny=16)
        state = init_shear_case(config)
        assert np.abs(divergence(state.flow.vel).interior).max() < 1e-12
        assert state.flow.vel.max_speed() == pytest.approx(2.0 - config.grid.dy / 2.0)
        X = config.grid.x_min + (np.arange(32) + 0.5) * config.grid.dx
        Y = config.grid.y_min + (np.arange(16) + 0.5) * config.grid.dy
        XX, YY = np.meshgrid(X, Y)
        assert np.allclose(state.ls.phi.interior, np.hypot(XX, YY) - 0.5)
        assert np.allclose(state.ymap.y1.interior, XX)
        assert np.all(state.flow.p.interior == 0.0)


class TestRun:
    """Time loop and its artifacts."""

    def test_quiescent_membrane_is_stationary(self, tmp_path):
        """With γ̇ = 0 the contour and area do not move."""
        config = _quiescent()
        report = run(config, tmp_path)
        summary = report.summary
        assert summary.completed
        assert summary.steps == 3
        assert summary.t == pytest.approx(0.03)
        assert summary.area_drift < 1e-3
        assert shape_is_stationary(report.initial_contour, report.final_contour, config.grid.dx)
        assert summary.max_speed < 1e-8
        assert len(report.diagnostics) == 3
        assert list(report.areas.columns) == ["t", "area"]
        for key in ("initial_contour", "contour", "area", "diagnostics"):
            assert report.files[key].exists()
        assert report.files["contour"].name == "contour_Explicit_dt0.01.csv"
        assert any((tmp_path / "snapshots").glob("phi_*.txt"))

    def test_repeat_runs_are_identical(self, tmp_path):
        """Two runs of one config write byte-identical CSVs."""
        config = _quiescent(gamma_dot=0.5, mu1=None, stiffness=None, scheme="SemiImplicit",
                            snapshot_every=0.0)
        first = run(config, tmp_path / "a")
        second = run(config, tmp_path / "b")
        for key in ("contour", "area", "diagnostics"):
            assert first.files[key].read_bytes() == second.files[key].read_bytes()

    def test_failure_folded_into_summary(self):
        """A blow-up run comes back incomplete with its message."""
        config = CaseConfig(nx=16, ny=16, x_min=-1.0, x_max=1.0, y_min=-1.0, y_max=1.0,
                            dt=0.01, t_final=0.03, blowup_factor=0.1, snapshot_every=0.0)
        summary = try_run(config)
        assert not summary.completed
        assert "blow-up" in summary.message

    def test_area_drift(self):
        """Largest relative departure from the first area."""
        assert area_drift([1.0, 1.01, 0.98]) == pytest.approx(0.02)


class TestMaxDtSearch:
    """Bracket validation of the maximum-Δt bisection."""

    def test_inverted_bracket(self):
        """The lower end must lie below the upper end."""
        with pytest.raises(ConfigurationError):
            max_stable_dt_search(_quiescent(16), SchemeMode.Explicit, 0.02, 0.01)

    def test_upper_end_must_fail(self):
        """A bracket whose upper end passes is rejected."""
        config = _quiescent(16, snapshot_every=0.0)
        with pytest.raises(ConfigurationError):
            max_stable_dt_search(config, SchemeMode.Explicit, 0.01, 0.015)
