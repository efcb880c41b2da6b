"""End-to-end analysis orchestration shared by the CLI and the HTTP service.

Both front ends funnel through run_analysis + the document builders here, so
an analysis with the same inputs and seed produces the same result document
byte for byte, whichever surface invoked it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np

from .analysis import (
    AreaSummary,
    BinningSpec,
    ClassThresholds,
    RepresentativenessResult,
    RepresentednessMap,
    area_summary,
    representativeness,
    representedness,
)
from .catalog import Catalog, VariableLayer
from .grid import Grid
from .sites import BboxSpec, Collection, Extent, MappedCollection, MaskSpec, build_extent, map_collection

SCHEMA_VERSION = 1

ExtentSpec = str | MaskSpec | BboxSpec


def generate_seed() -> int:
    """A fresh seed for callers that did not pin one; always echoed back."""
    return int(np.random.SeedSequence().entropy % (2**31))


@dataclass(frozen=True)
class AnalysisParams:
    collection_id: str
    variable_id: str
    extent: ExtentSpec = "global"
    binning: BinningSpec = BinningSpec()
    indicator_kind: str = "intersection"
    replicates: int = 1000
    effective_sample_size: int | None = None
    seed: int | None = None
    dedupe_cells: bool = False
    with_replacement: bool = False
    thresholds: ClassThresholds = ClassThresholds()

    def with_seed(self) -> "AnalysisParams":
        return self if self.seed is not None else replace(self, seed=generate_seed())


@dataclass(frozen=True, eq=False)
class AnalysisOutput:
    params: AnalysisParams
    grid: Grid
    extent: Extent
    layer: VariableLayer
    mapped: MappedCollection
    result: RepresentativenessResult
    rmap: RepresentednessMap
    areas: AreaSummary


def run_analysis(
    grid: Grid, catalog: Catalog, collection: Collection, params: AnalysisParams
) -> AnalysisOutput:
    """Resolve ids, build the extent, and run the full analysis chain."""
    params = params.with_seed()
    layer = catalog.load(params.variable_id)
    extent = build_extent(params.extent, grid, catalog)
    mapped = map_collection(
        collection,
        grid,
        dedupe_cells=params.dedupe_cells,
        effective_sample_size=params.effective_sample_size,
    )
    result = representativeness(
        mapped,
        layer,
        extent,
        binning=params.binning,
        kind=params.indicator_kind,
        m=params.replicates,
        seed=params.seed,
        with_replacement=params.with_replacement,
    )
    # reuse the resolved binning so every artifact shares one discretization
    rmap = representedness(
        mapped, layer, extent,
        binning=result.population_histogram.binning,
        thresholds=params.thresholds,
    )
    areas = area_summary(rmap, extent, grid)
    return AnalysisOutput(
        params=params, grid=grid, extent=extent, layer=layer, mapped=mapped,
        result=result, rmap=rmap, areas=areas,
    )


# -- documents ----------------------------------------------------------------


def extent_spec_doc(spec: ExtentSpec) -> dict[str, Any]:
    if spec == "global":
        return {"type": "global"}
    if isinstance(spec, MaskSpec):
        return {
            "type": "mask",
            "variable_id": spec.variable_id,
            "values": sorted(spec.included_values),
        }
    if isinstance(spec, BboxSpec):
        return {
            "type": "bbox",
            "south": spec.south, "west": spec.west,
            "north": spec.north, "east": spec.east,
        }
    raise ValueError(f"unknown extent spec {spec!r}")


def _binning_doc(output: AnalysisOutput) -> dict[str, Any]:
    binning = output.result.population_histogram.binning
    doc: dict[str, Any] = {"kind": binning.kind, "bin_count": int(binning.size)}
    if binning.kind == "categorical":
        doc["categories"] = [float(c) for c in binning.categories]
        doc["domain"] = None
    else:
        doc["categories"] = None
        doc["domain"] = [float(binning.domain[0]), float(binning.domain[1])]
    return doc


def _bins_rows(output: AnalysisOutput) -> list[dict[str, Any]]:
    binning = output.result.population_histogram.binning
    p = output.result.sample_histogram.proportions
    q = output.result.population_histogram.proportions
    r = output.rmap.bin_scores
    rows = []
    for i in range(binning.size):
        row: dict[str, Any] = {
            "index": i,
            "p_sample": float(p[i]),
            "p_population": float(q[i]),
            "score": float(r[i]),
        }
        if binning.kind == "categorical":
            row["category"] = float(binning.categories[i])
            row["lower"] = None
            row["upper"] = None
        else:
            row["category"] = None
            row["lower"] = float(binning.edges[i])
            row["upper"] = float(binning.edges[i + 1])
        rows.append(row)
    return rows


def _null_histogram(output: AnalysisOutput, bins: int = 20) -> dict[str, Any]:
    """Binned view of the null distribution for charting; counts sum to m."""
    null = output.result.null
    ind = float(output.result.indicator)
    lo = min(float(null.values.min()), ind)
    hi = max(float(null.values.max()), ind)
    if hi <= lo:
        lo, hi = max(0.0, lo - 0.01), min(1.0, hi + 0.01)
        if hi <= lo:
            lo, hi = 0.0, 1.0
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(null.values, bins=edges)
    return {
        "edges": [float(e) for e in edges],
        "counts": [int(c) for c in counts],
    }


def result_document(output: AnalysisOutput) -> dict[str, Any]:
    """The single JSON document both the CLI and the service emit."""
    res = output.result
    return {
        "schema_version": SCHEMA_VERSION,
        "collection_id": output.params.collection_id,
        "variable_id": output.params.variable_id,
        "extent": extent_spec_doc(output.params.extent),
        "indicator": float(res.indicator),
        "indicator_kind": res.indicator_kind,
        "percentile_rank": float(res.percentile_rank),
        "biased": bool(res.biased),
        "variational_coverage": float(res.variational_coverage),
        "effective_sample_size": int(output.mapped.effective_sample_size),
        "usable_site_count": int(res.usable_site_count),
        "off_extent_site_count": int(res.off_extent_site_count),
        "population_cell_count": int(res.population_cell_count),
        "extent_cell_count": int(len(output.extent)),
        "coverage_gap_cell_count": int(len(output.extent) - res.population_cell_count),
        "replicates": int(res.null.replicate_count),
        "seed": int(res.seed),
        "binning": _binning_doc(output),
        "null": {
            "sample_size": int(res.null.sample_size),
            "replicate_count": int(res.null.replicate_count),
            "mean": float(res.null.mean),
            "deciles": res.null.deciles(),
            "histogram": _null_histogram(output),
        },
        "bins": _bins_rows(output),
        "classes": {
            name: {
                "area_km2": float(ca.area_km2),
                "percent": float(ca.percent),
                "cell_count": int(ca.cell_count),
            }
            for name, ca in output.areas.classes.items()
        },
        "total_area_km2": float(output.areas.total_area_km2),
    }


def map_document(output: AnalysisOutput) -> dict[str, Any]:
    """GeoJSON FeatureCollection: one polygon per classified extent cell."""
    features = []
    for cell in sorted(output.rmap.classes):
        poly = output.grid.cell_polygon(cell)
        coords = [[ [float(lon), float(lat)] for lat, lon in poly.vertices ]]
        features.append({
            "type": "Feature",
            "geometry": {"type": "Polygon", "coordinates": coords},
            "properties": {
                "band": int(cell.band_index),
                "column": int(cell.column_index),
                "value": float(output.layer.values[cell]),
                "score": float(output.rmap.scores[cell]),
                "class": output.rmap.classes[cell],
            },
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "type": "FeatureCollection",
        "features": features,
    }


def bins_csv(output: AnalysisOutput) -> str:
    lines = ["bin_index,lower,upper,category,p_sample,p_population,score"]
    for row in _bins_rows(output):
        lower = "" if row["lower"] is None else repr(row["lower"])
        upper = "" if row["upper"] is None else repr(row["upper"])
        category = "" if row["category"] is None else repr(row["category"])
        lines.append(
            f"{row['index']},{lower},{upper},{category},"
            f"{row['p_sample']!r},{row['p_population']!r},{row['score']!r}"
        )
    return "\n".join(lines) + "\n"


def cells_csv(output: AnalysisOutput) -> str:
    lines = ["band,column,value,score,class"]
    for cell in sorted(output.rmap.classes):
        lines.append(
            f"{cell.band_index},{cell.column_index},"
            f"{output.layer.values[cell]!r},{output.rmap.scores[cell]!r},"
            f"{output.rmap.classes[cell]}"
        )
    return "\n".join(lines) + "\n"


def dump_json(doc: dict[str, Any]) -> str:
    """Deterministic JSON rendering (sorted keys, stable float repr)."""
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_outputs(output: AnalysisOutput, out_dir: str | Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "result": out_dir / "result.json",
        "bins": out_dir / "bins.csv",
        "cells": out_dir / "cells.csv",
        "map": out_dir / "map.json",
    }
    paths["result"].write_text(dump_json(result_document(output)))
    paths["bins"].write_text(bins_csv(output))
    paths["cells"].write_text(cells_csv(output))
    paths["map"].write_text(dump_json(map_document(output)))
    return paths
