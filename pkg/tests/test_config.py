"""
Unit tests for case configuration files, presets and settings.
"""

import pytest
import yaml

from backend.core.config import (
    build_config,
    dump_config,
    flatten_sections,
    load_config,
    load_preset,
    parse_override,
    reference_dt,
    to_sections,
    valid_keys,
)
from backend.core.exceptions import ConfigurationError
from backend.core.models import BoundaryKind, CaseConfig, KrylovMethod, Preconditioner, SchemeMode
from backend.core.settings import Settings


class TestCaseConfig:
    """Validation and derived quantities."""

    def test_defaults(self):
        """Benchmark domain, Ca = 0.01 and ε = 2dx."""
        config = CaseConfig()
        assert (config.nx, config.ny) == (128, 64)
        assert config.grid.dx == pytest.approx(1.0 / 16.0)
        assert config.epsilon == pytest.approx(2.0 * config.grid.dx)
        assert config.K == pytest.approx(2.5 * 0.5 / 0.01)
        assert config.reference_speed == pytest.approx(0.5)
        assert config.n_steps == 50

    def test_solver_defaults(self):
        """Jacobi-preconditioned GMRES(30) with a 2000-iteration cap."""
        config = CaseConfig()
        assert config.krylov_method == KrylovMethod.gmres
        assert config.preconditioner == Preconditioner.jacobi
        assert config.restart == 30
        assert config.max_iter == 2000

    def test_scheme_aliases(self):
        """EX and SI name the two couplings."""
        assert CaseConfig(scheme="SI").scheme == SchemeMode.SemiImplicit
        assert CaseConfig(scheme="ex").scheme == SchemeMode.Explicit

    def test_non_square_cells_rejected(self):
        """dx must equal dy."""
        with pytest.raises(ValueError):
            CaseConfig(nx=128, ny=128)

    def test_quiescent_needs_overrides(self):
        """γ̇ = 0 cannot derive μ and K from Re and Ca."""
        with pytest.raises(ValueError):
            CaseConfig(gamma_dot=0.0)
        config = CaseConfig(gamma_dot=0.0, mu1=2.0, stiffness=3.0)
        assert config.mu_outer == 2.0
        assert config.mu_inner == 2.0
        assert config.K == 3.0
        assert config.reference_speed == pytest.approx(0.5)

    def test_boundary(self):
        """Neumann sides and walls moving at ±γ̇·2."""
        boundary = CaseConfig().boundary
        assert boundary.velocity.left.kind == BoundaryKind.neumann
        assert boundary.velocity.top.kind == BoundaryKind.moving_wall
        assert boundary.velocity.top.value == pytest.approx(2.0)
        assert boundary.velocity.bottom.value == pytest.approx(-2.0)


class TestConfigFiles:
    """Sectioned YAML in, flat CaseConfig out."""

    def test_sections_flatten(self):
        """Section bodies merge; flat top-level keys are accepted."""
        flat = flatten_sections({"grid": {"nx": 64, "ny": 32}, "dt": 0.05})
        assert flat == {"nx": 64, "ny": 32, "dt": 0.05}

    def test_misplaced_key_rejected(self):
        """Keys must sit in their own section."""
        with pytest.raises(ConfigurationError):
            flatten_sections({"grid": {"dt": 0.1}})

    def test_unknown_key_rejected(self):
        """Unknown keys list the valid ones."""
        with pytest.raises(ConfigurationError) as exc:
            build_config({"physics": {"tension": 1.0}})
        assert "capillary" in str(exc.value)

    def test_seed_is_not_a_key(self):
        """The 2D solver has no random input, so `seed` is rejected."""
        with pytest.raises(ConfigurationError):
            build_config({"outputs": {"seed": 0}})

    def test_override_parsing(self):
        """Values follow YAML scalar rules; a section prefix is dropped."""
        assert parse_override("dt=0.05") == ("dt", 0.05)
        assert parse_override("scheme.scheme=SI") == ("scheme", "SI")
        with pytest.raises(ConfigurationError):
            parse_override("dt")

    def test_invalid_value_is_configuration_error(self):
        """Pydantic failures surface as ConfigurationError."""
        with pytest.raises(ConfigurationError):
            build_config({}, ["dt=-1"])

    def test_load_and_dump(self, tmp_path):
        """The effective config echo reloads to the same case."""
        source = tmp_path / "case.yaml"
        source.write_text(yaml.safe_dump({"physics": {"capillary": 0.02}, "scheme": {"scheme": "SI"}}))
        config = load_config(source, ["dt=0.05"])
        assert config.capillary == 0.02
        assert config.dt == 0.05
        echo = dump_config(config, tmp_path / "out" / "effective.yaml")
        assert load_config(echo) == config
        assert set(to_sections(config)) == {"grid", "physics", "scheme", "schedules", "outputs"}

    def test_missing_file(self, tmp_path):
        """A missing config file is a configuration error."""
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "absent.yaml")

    def test_every_key_is_a_field(self):
        """Section tables only name CaseConfig fields."""
        assert set(valid_keys()) <= set(CaseConfig.model_fields)


class TestPresets:
    """Named shear presets."""

    def test_preset_mesh(self):
        """Presets combine a case with a mesh."""
        config = load_preset("ca0001", "medium")
        assert (config.nx, config.ny) == (256, 128)
        assert config.viscosity_ratio == 10.0
        assert config.capillary == 0.001

    def test_reference_table(self):
        """Published limits per scheme."""
        assert reference_dt("ca001", "coarse", "SemiImplicit") == pytest.approx(0.1)
        assert reference_dt("ca001", "coarse", "Explicit") == pytest.approx(0.03)
        assert reference_dt("nope", "coarse", "Explicit") is None

    def test_unknown_preset(self):
        """Unknown names list what exists."""
        with pytest.raises(ConfigurationError):
            load_preset("ca5")
        with pytest.raises(ConfigurationError):
            load_preset("ca001", "huge")


class TestSettings:
    """Environment-driven runtime settings."""

    def test_env_prefix(self, monkeypatch):
        """FSI_ variables override the defaults."""
        monkeypatch.setenv("FSI_LOG_LEVEL", "DEBUG")
        monkeypatch.setenv("FSI_PORT", "9001")
        settings = Settings()
        assert settings.log_level == "DEBUG"
        assert settings.port == 9001
