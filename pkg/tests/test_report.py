"""
Unit tests for report emission.
"""

import math

import numpy as np
import pytest

from backend.core.models import RunSummary, SchemeMode, TableRow
from backend.core.report import (
    ReportGenerator,
    contour_filename,
    read_contour_csv,
    table_frame,
    write_contour_csv,
)


def _summary(**updates):
    values = dict(scheme=SchemeMode.SemiImplicit, dt=0.1, steps=15, t=1.5, completed=True,
                  initial_area=0.785, final_area=0.784, area_drift=1.3e-3, max_speed=2.0,
                  min_z=0.98, max_z=1.21)
    values.update(updates)
    return RunSummary(**values)


class TestFiles:
    """Contour point files."""

    def test_contour_filename(self):
        """The time step is written with its shortest exact repr."""
        assert contour_filename("SemiImplicit", 0.1) == "contour_SemiImplicit_dt0.1.csv"
        assert contour_filename("Explicit", 3e-2) == "contour_Explicit_dt0.03.csv"

    def test_contour_points_exact(self, tmp_path):
        """17 significant digits keep every coordinate."""
        rng = np.random.default_rng(8)
        x, y = rng.standard_normal(50), rng.standard_normal(50)
        path = write_contour_csv(x, y, tmp_path / "sub" / "c.csv")
        assert path.read_text().splitlines()[0] == "x,y"
        x2, y2 = read_contour_csv(path)
        assert np.array_equal(x2, x)
        assert np.array_equal(y2, y)


class TestTable:
    """Maximum-Δt table."""

    def test_ratio_per_mesh_and_capillary(self):
        """SI/EX ratio is shared by both rows of a (mesh, Ca) pair."""
        rows = [
            TableRow(mesh="coarse", capillary=0.01, scheme=SchemeMode.Explicit, max_dt=0.03,
                     reference_dt=0.03),
            TableRow(mesh="coarse", capillary=0.01, scheme=SchemeMode.SemiImplicit, max_dt=0.1,
                     reference_dt=0.1),
        ]
        frame = table_frame(rows)
        assert list(frame.columns) == ["mesh", "Ca", "scheme", "max_dt", "reference_dt", "ratio"]
        assert frame["ratio"].tolist() == pytest.approx([0.1 / 0.03, 0.1 / 0.03])

    def test_single_scheme_has_no_ratio(self):
        """A lone scheme gets NaN."""
        frame = table_frame([TableRow(mesh="fine", capillary=0.02, scheme=SchemeMode.Explicit,
                                      max_dt=0.01)])
        assert math.isnan(frame["ratio"].iloc[0])

    def test_empty_table(self):
        """No rows still yields the ratio column."""
        assert "ratio" in table_frame([]).columns


class TestMarkdown:
    """Markdown summary."""

    def test_runs_and_failures(self, tmp_path):
        """Completed runs are tabulated and failures listed with their message."""
        runs = [_summary(tangential_speed=0.21),
                _summary(scheme=SchemeMode.Explicit, dt=0.1, completed=False, steps=0, t=0.0,
                         message="blow-up at step 3")]
        text = ReportGenerator.generate_markdown(runs)
        assert "| SemiImplicit | 0.1 | 15 |" in text
        assert "## Failures" in text
        assert "blow-up at step 3" in text
        assert "## Tangential membrane speed" in text
        path = ReportGenerator.write_summary(runs, tmp_path)
        assert path.name == "summary.md"
        assert path.read_text() == text

    def test_json(self):
        """JSON rows carry the enum values."""
        rows = ReportGenerator.generate_json([_summary()])
        assert rows[0]["scheme"] == "SemiImplicit"
        assert rows[0]["completed"] is True
