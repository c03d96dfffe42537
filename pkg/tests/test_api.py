"""
Tests for the HTTP service.
"""

import math

import pytest
from fastapi.testclient import TestClient

from backend.api.routes import API_VERSION
from backend.main import app


@pytest.fixture
def client():
    """Service client."""
    return TestClient(app)


UNIT = {"mu": 1.0, "K": 1.0, "eps": 1.0, "dx": 1.0, "dt": 1.0}


class TestService:
    """Endpoints and error mapping."""

    def test_root_lists_endpoints(self, client):
        """The root names the service and its routes."""
        body = client.get("/").json()
        assert body["version"] == API_VERSION
        assert "hausdorff" in body["endpoints"]

    def test_health(self, client):
        """Health reports ok with the API version."""
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json() == {"status": "ok", "version": API_VERSION}

    def test_amplification(self, client):
        """Unit parameters at θ = π have spectral radius 1/3."""
        response = client.post("/stability1d/amplification",
                               json={"params": UNIT, "theta": math.pi})
        assert response.status_code == 200
        body = response.json()
        assert body["alpha_theta"] == pytest.approx(9.0)
        assert body["spectral_radius"] == pytest.approx(1.0 / 3.0, abs=1e-7)

    def test_amplification_rejects_theta(self, client):
        """θ outside [0, 2π) fails request validation."""
        response = client.post("/stability1d/amplification",
                               json={"params": UNIT, "theta": 7.0})
        assert response.status_code == 422

    def test_classify(self, client):
        """Semi-implicit marching at a large step is stable."""
        params = {"mu": 1.0, "K": 10.0, "eps": 0.1, "dx": 0.1, "dt": 0.2}
        response = client.post("/stability1d/classify",
                               json={"params": params, "scheme": "SemiImplicit"})
        assert response.status_code == 200
        body = response.json()
        assert body["verdict"] == "Stable"
        assert body["explicit_dt_bound"] == pytest.approx(0.02)

    def test_hausdorff(self, client):
        """Shifted unit squares are 0.1 apart."""
        square = {"x": [0.0, 1.0, 1.0, 0.0], "y": [0.0, 0.0, 1.0, 1.0]}
        moved = {"x": [0.1, 1.1, 1.1, 0.1], "y": [0.0, 0.0, 1.0, 1.0]}
        response = client.post("/contour/hausdorff", json={"first": square, "second": moved})
        assert response.status_code == 200
        body = response.json()
        assert body["distance"] == pytest.approx(0.1)
        assert body["first_area"] == pytest.approx(1.0)

    def test_hausdorff_needs_polygons(self, client):
        """Fewer than three vertices is a configuration error."""
        line = {"x": [0.0, 1.0], "y": [0.0, 0.0]}
        response = client.post("/contour/hausdorff", json={"first": line, "second": line})
        assert response.status_code == 400
        assert "Configuration error" in response.json()["detail"]

    def test_convergence_mesh_limit(self, client):
        """Large meshes are refused by the service."""
        response = client.post("/verification/convergence", json={"meshes": [20, 640]})
        assert response.status_code == 422

    def test_shear_blowup_is_numerical_failure(self, client):
        """A detector trip maps to 422 with the failure message."""
        config = {"nx": 16, "ny": 16, "x_min": -1.0, "x_max": 1.0, "y_min": -1.0, "y_max": 1.0,
                  "dt": 0.01, "t_final": 0.02, "blowup_factor": 0.1}
        response = client.post("/shear/run", json=config)
        assert response.status_code == 422
        assert "Numerical failure" in response.json()["detail"]
