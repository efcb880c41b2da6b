"""Shared fixtures: small grids, synthetic layers, collections."""

import math

import numpy as np
import pytest

from georep.catalog import Catalog, VariableLayer
from georep.grid import GridConfig, build_grid
from georep.sites import Collection, Site

EARTH_SPHERE_AREA = 4.0 * math.pi * 6371.0072**2


def grid_with_cells(n: int):
    """A full-sphere grid with exactly n cells."""
    return build_grid(GridConfig(target_cell_area_km2=EARTH_SPHERE_AREA / n))


@pytest.fixture(scope="session")
def grid100():
    return grid_with_cells(100)


@pytest.fixture(scope="session")
def grid5000():
    return grid_with_cells(5000)


def uniform_layer(grid, seed=0, variable_id="uniform", lo=0.0, hi=1.0):
    """Continuous layer with one uniform draw per cell."""
    rng = np.random.default_rng(seed)
    cells = list(grid.cells())
    vals = rng.uniform(lo, hi, len(cells))
    return VariableLayer(
        variable_id=variable_id,
        kind="continuous",
        units="",
        values={c: float(v) for c, v in zip(cells, vals)},
    )


def collection_at_cells(grid, cells, collection_id="coll"):
    """One site at the center of each given cell, in order."""
    sites = tuple(
        Site(f"s{i}", *grid.cell_center(c)) for i, c in enumerate(cells)
    )
    return Collection(collection_id=collection_id, sites=sites)


@pytest.fixture()
def tmp_catalog(tmp_path):
    return Catalog(tmp_path / "catalog")
