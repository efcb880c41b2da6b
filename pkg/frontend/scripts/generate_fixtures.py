"""Produce the three golden analysis payloads the UI parity tests pin against.

Run from the repository root with the georep package importable:

    python3 frontend/scripts/generate_fixtures.py

Writes {allwell,decile,masked}.{result,map}.json into frontend/tests/fixtures.
"""

import json
import math
from pathlib import Path

import numpy as np

from georep.analysis import BinningSpec
from georep.catalog import Catalog, VariableLayer
from georep.grid import GridConfig, build_grid
from georep.pipeline import AnalysisParams, dump_json, map_document, result_document, run_analysis
from georep.sites import Collection, MaskSpec, Site

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"
SPHERE_AREA = 4.0 * math.pi * 6371.0072**2


def collection_at(grid, cells, collection_id):
    sites = tuple(Site(f"s{i}", *grid.cell_center(c)) for i, c in enumerate(cells))
    return Collection(collection_id=collection_id, sites=sites)


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    grid = build_grid(GridConfig(target_cell_area_km2=SPHERE_AREA / 500))
    cells = list(grid.cells())
    rng = np.random.default_rng(404)

    values = rng.uniform(0.0, 1.0, len(cells))
    inside = rng.random(len(cells)) < 0.3
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        catalog = Catalog(Path(tmp) / "catalog")
        catalog.register(VariableLayer(
            "tree_cover", "continuous", "percent",
            {c: float(v) for c, v in zip(cells, values)},
        ))
        catalog.register(VariableLayer(
            "tropics", "categorical", "",
            {c: float(m) for c, m in zip(cells, inside)},
        ))

        runs = {
            "allwell": (
                collection_at(grid, cells, "allwell"),
                AnalysisParams("allwell", "tree_cover", seed=1, replicates=200),
            ),
            "decile": (
                collection_at(
                    grid,
                    [c for c, v in zip(cells, values) if v >= 0.9][:50],
                    "decile",
                ),
                AnalysisParams("decile", "tree_cover", seed=2, replicates=200),
            ),
            "masked": (
                collection_at(
                    grid,
                    [c for c, m in zip(cells, inside) if m][:50],
                    "masked",
                ),
                AnalysisParams(
                    "masked", "tree_cover",
                    extent=MaskSpec("tropics", frozenset({1.0})),
                    seed=3, replicates=200,
                ),
            ),
        }
        for name, (collection, params) in runs.items():
            output = run_analysis(grid, catalog, collection, params)
            (FIXTURES / f"{name}.result.json").write_text(dump_json(result_document(output)))
            (FIXTURES / f"{name}.map.json").write_text(dump_json(map_document(output)))
            doc = result_document(output)
            print(f"{name}: indicator={doc['indicator']:.4f} biased={doc['biased']} "
                  f"features={len(map_document(output)['features'])}")


if __name__ == "__main__":
    main()
