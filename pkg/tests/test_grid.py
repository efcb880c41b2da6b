"""Tests for georep.grid."""

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from georep.errors import ConfigError, DomainError
from georep.grid import CellId, GridConfig, build_grid

from conftest import EARTH_SPHERE_AREA, grid_with_cells

_GRID500 = grid_with_cells(500)


class TestBuildGrid:
    def test_unit_sphere_exact_division(self):
        # total area 4π, target 4π/100 → exactly 100 cells
        config = GridConfig(sphere_radius_km=1.0, target_cell_area_km2=4 * math.pi / 100)
        grid = build_grid(config)
        assert grid.total_cells == 100

    def test_default_config_cell_count(self):
        # oracle: 4πR²/A evaluated directly
        grid = build_grid(GridConfig())
        expected = 4 * math.pi * 6371.0072**2 / 96.0
        assert abs(grid.total_cells - expected) < 1.0
        assert 5.30e6 < grid.total_cells < 5.33e6

    def test_deterministic_band_tables(self):
        a = build_grid(GridConfig())
        b = build_grid(GridConfig())
        assert a.bands == b.bands
        assert a.total_cells == b.total_cells

    def test_target_exceeding_sphere_area_rejected(self):
        with pytest.raises(ConfigError):
            build_grid(GridConfig(sphere_radius_km=1.0, target_cell_area_km2=100.0))

    def test_nonpositive_parameters_rejected(self):
        with pytest.raises(ConfigError):
            build_grid(GridConfig(sphere_radius_km=0.0))
        with pytest.raises(ConfigError):
            build_grid(GridConfig(target_cell_area_km2=-1.0))

    def test_bands_partition_sin_latitude(self, grid100):
        assert grid100.bands[0].sin_lo == -1.0
        assert grid100.bands[-1].sin_hi == 1.0
        for prev, nxt in zip(grid100.bands, grid100.bands[1:]):
            assert prev.sin_hi == nxt.sin_lo
        assert all(b.cell_count >= 1 for b in grid100.bands)


class TestPointToCell:
    def test_origin_containment_round_trip(self, grid100):
        cell = grid100.point_to_cell(0.0, 0.0)
        assert grid100.cell_polygon(cell).contains(0.0, 0.0)

    def test_pole_degeneracy_single_cell_band(self):
        # a whole-sphere single cell: the top band trivially has one cell
        grid = grid_with_cells(1)
        assert grid.total_cells == 1
        assert grid.point_to_cell(90.0, 0.0) == grid.point_to_cell(90.0, -179.9)

    def test_deterministic(self, grid100):
        assert grid100.point_to_cell(12.3, 45.6) == grid100.point_to_cell(12.3, 45.6)

    def test_out_of_range_rejected(self, grid100):
        with pytest.raises(DomainError):
            grid100.point_to_cell(90.1, 0.0)
        with pytest.raises(DomainError):
            grid100.point_to_cell(0.0, 180.0)
        with pytest.raises(DomainError):
            grid100.point_to_cell(0.0, -180.1)

    def test_band_boundary_goes_to_lower_band(self, grid100):
        # band 2's upper edge sits exactly at the equator in the 100-cell grid
        boundary_band = next(
            b for b, band in enumerate(grid100.bands) if band.sin_hi == 0.0
        )
        cell = grid100.point_to_cell(0.0, 10.0)
        assert cell.band_index == boundary_band

    def test_column_boundary_goes_to_lower_column(self):
        grid = grid_with_cells(2)  # one band, two columns split at lon 0
        assert grid.bands[0].cell_count == 2
        assert grid.point_to_cell(0.0, 0.0).column_index == 0
        assert grid.point_to_cell(0.0, 1e-9).column_index == 1

    @settings(max_examples=300, deadline=None)
    @given(
        lat=st.floats(min_value=-90.0, max_value=90.0),
        lon=st.floats(min_value=-180.0, max_value=179.999999),
    )
    def test_partition_property(self, lat, lon):
        cell = _GRID500.point_to_cell(lat, lon)
        assert _GRID500.cell_polygon(cell).contains(lat, lon)


class TestCellArea:
    def test_default_grid_areas_within_one_percent(self):
        grid = build_grid(GridConfig())
        # all cells in a band share one area; one column per band covers everything
        for b, band in enumerate(grid.bands):
            area = grid.cell_area_km2(CellId(b, 0))
            assert 95.04 <= area <= 96.96

    def test_area_matches_spherical_rectangle_oracle(self, grid100):
        r = grid100.config.sphere_radius_km
        for b in (0, 3, 5):
            band = grid100.bands[b]
            expected = r**2 * (band.sin_hi - band.sin_lo) * (2 * math.pi / band.cell_count)
            assert grid100.cell_area_km2(CellId(b, 0)) == pytest.approx(expected, rel=1e-15)

    def test_unit_sphere_equal_areas(self):
        config = GridConfig(sphere_radius_km=1.0, target_cell_area_km2=4 * math.pi / 100)
        grid = build_grid(config)
        target = 4 * math.pi / 100
        for b, band in enumerate(grid.bands):
            assert grid.cell_area_km2(CellId(b, 0)) == pytest.approx(target, rel=0.01)

    def test_total_area_closure(self, grid100):
        total = sum(
            grid100.cell_area_km2(CellId(b, 0)) * band.cell_count
            for b, band in enumerate(grid100.bands)
        )
        assert total == pytest.approx(grid100.sphere_area_km2, rel=1e-3)

    def test_max_min_ratio(self, grid5000):
        areas = [grid5000.cell_area_km2(CellId(b, 0)) for b in range(grid5000.band_count)]
        assert max(areas) / min(areas) <= 1.02

    def test_invalid_cell_rejected(self, grid100):
        with pytest.raises(DomainError):
            grid100.cell_area_km2(CellId(999, 0))
        with pytest.raises(DomainError):
            grid100.cell_area_km2(CellId(0, 999))


class TestCellPolygon:
    def test_closed_ring_of_four_corners(self, grid100):
        poly = grid100.cell_polygon(CellId(3, 4))
        assert len(poly.vertices) == 5
        assert poly.vertices[0] == poly.vertices[-1]

    def test_latitudes_symmetric_about_band_midpoint(self, grid100):
        b = grid100.band_count // 2
        band = grid100.bands[b]
        poly = grid100.cell_polygon(CellId(b, 0))
        lats = sorted(set(v[0] for v in poly.vertices))
        mid = (band.lat_lo + band.lat_hi) / 2
        assert lats[0] + lats[1] == pytest.approx(2 * mid)

    def test_centroid_round_trip(self, grid5000):
        for b in range(0, grid5000.band_count, 7):
            cell = CellId(b, grid5000.bands[b].cell_count // 2)
            lat, lon = grid5000.cell_center(cell)
            assert grid5000.point_to_cell(lat, lon) == cell

    def test_adjacent_cells_share_meridian_edge(self, grid100):
        b = next(i for i, band in enumerate(grid100.bands) if band.cell_count >= 3)
        a = grid100.cell_polygon(CellId(b, 0))
        c = grid100.cell_polygon(CellId(b, 1))
        east_of_a = max(v[1] for v in a.vertices)
        west_of_c = min(v[1] for v in c.vertices)
        assert east_of_a == west_of_c

    def test_vertices_within_ranges(self, grid100):
        for cell in grid100.cells():
            for lat, lon in grid100.cell_polygon(cell).vertices:
                assert -90.0 <= lat <= 90.0
                assert -180.0 <= lon <= 180.0


class TestExport:
    def test_csv_one_row_per_cell(self, grid100):
        buf = io.StringIO()
        n = grid100.export_csv(buf)
        lines = buf.getvalue().strip().splitlines()
        assert n == grid100.total_cells
        assert lines[0] == "band,column,center_lat,center_lon,area_km2"
        assert len(lines) == grid100.total_cells + 1
        band, column, lat, lon, area = lines[1].split(",")
        assert (int(band), int(column)) == (0, 0)
        assert float(area) == pytest.approx(EARTH_SPHERE_AREA / 100, rel=0.01)


class TestFlatIndexing:
    def test_flat_round_trip(self, grid100):
        for cell in grid100.cells():
            assert grid100.flat_to_cell(grid100.flat_index(cell)) == cell

    def test_vectorised_matches_scalar(self, grid5000):
        rng = np.random.default_rng(4)
        lats = np.degrees(np.arcsin(rng.uniform(-1, 1, 200)))
        lons = rng.uniform(-180.0, 180.0, 200)
        lons[lons >= 180.0] = -180.0
        flat = grid5000.points_to_flat(lats, lons)
        for la, lo, f in zip(lats, lons, flat):
            assert grid5000.point_to_cell(la, lo) == grid5000.flat_to_cell(int(f))
