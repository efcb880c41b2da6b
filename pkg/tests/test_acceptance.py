"""Acceptance suite: one test per acceptance criterion, at stated tolerances.

Each test prints a single PASS line once its criterion holds (run with -s to
see them inline); a failed assertion marks the criterion red. Every value is
seeded — the suite is deterministic end to end.
"""

import json
import math
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from georep.analysis import (
    Binning,
    BinningSpec,
    build_histogram,
    indicator,
    representativeness,
    representedness,
    area_summary,
    population_cells_values,
    sample_values,
)
from georep.catalog import Catalog, VariableLayer
from georep.cli import main as cli_main
from georep.grid import CellId, GridConfig, build_grid
from georep.pipeline import AnalysisParams, result_document, run_analysis
from georep.service import create_app
from georep.sites import MaskSpec, build_extent, map_collection

from conftest import EARTH_SPHERE_AREA, collection_at_cells, grid_with_cells, uniform_layer
from test_cli import write_gradient_raster, write_mask_raster, write_sites

CELL_AREA_2K = EARTH_SPHERE_AREA / 2000


def _report(name: str, detail: str) -> None:
    print(f"PASS: {name} — {detail}")


# -- criterion: identity ------------------------------------------------------


def test_identity_collection_is_perfectly_representative():
    grid = grid_with_cells(10_000)
    layer = uniform_layer(grid, seed=100)
    extent = build_extent("global", grid)
    cells = list(grid.cells())
    collection = collection_at_cells(grid, cells, collection_id="identity")

    start = time.perf_counter()
    mapped = map_collection(collection, grid)
    result = representativeness(mapped, layer, extent, BinningSpec(), m=1000, seed=1)
    rmap = representedness(mapped, layer, extent, result.population_histogram.binning)
    areas = area_summary(rmap, extent, grid)
    elapsed = time.perf_counter() - start

    assert abs(result.indicator - 1.0) <= 1e-12
    assert result.biased is False
    assert np.all(rmap.bin_scores == 0.0)
    assert all(score == 0.0 for score in rmap.scores.values())
    assert areas.classes["well"].percent == pytest.approx(100.0, abs=1e-9)
    assert elapsed < 1.0
    _report(
        "identity",
        f"indicator={result.indicator}, biased={result.biased}, "
        f"well={areas.classes['well'].percent}%, runtime={elapsed:.3f}s on 10,000 cells",
    )


# -- criterion: one-decile collection is flagged ------------------------------


def test_decile_confined_collection_is_biased():
    grid = grid_with_cells(5_000)
    layer = uniform_layer(grid, seed=11)
    extent = build_extent("global", grid)
    decile_cells = [c for c, v in sorted(layer.values.items()) if v >= 0.9]
    rng = np.random.default_rng(5)
    chosen = [decile_cells[i] for i in rng.choice(len(decile_cells), 157, replace=False)]
    mapped = map_collection(collection_at_cells(grid, chosen, "decile"), grid)

    result = representativeness(
        mapped, layer, extent, BinningSpec(kind="equal_width", bin_count=20),
        m=1000, seed=42,
    )
    assert result.indicator <= 0.15
    assert result.percentile_rank < 1.0
    assert result.biased is True
    _report(
        "decile bias",
        f"indicator={result.indicator:.4f} ≤ 0.15, "
        f"percentile_rank={result.percentile_rank} < 1, biased=True (m=1000, seed=42)",
    )


# -- criterion: oracle equivalence --------------------------------------------


def _oracle_indicator(p, q, kind):
    """Independent direct-summation oracle, plain python arithmetic."""
    total = 0.0
    for a, b in zip(p, q):
        total += (a if a < b else b) if kind == "intersection" else math.sqrt(a * b)
    return total


def test_indicators_match_direct_summation_oracle():
    rng = np.random.default_rng(2024)
    from georep.analysis import Histogram

    checked = 0
    while checked < 1000:
        nbins = int(rng.integers(2, 11))
        p_vec = rng.random(nbins)
        q_vec = rng.random(nbins)
        # occasional zeroed bins to exercise disjoint support
        p_vec[rng.random(nbins) < 0.2] = 0.0
        q_vec[rng.random(nbins) < 0.2] = 0.0
        if p_vec.sum() == 0 or q_vec.sum() == 0:
            continue
        p_vec /= p_vec.sum()
        q_vec /= q_vec.sum()
        binning = Binning(
            kind="equal_width", bin_count=nbins,
            edges=tuple(np.linspace(0.0, 1.0, nbins + 1)),
        )
        p = Histogram(binning=binning, proportions=p_vec, support_count=nbins)
        q = Histogram(binning=binning, proportions=q_vec, support_count=nbins)
        for kind in ("intersection", "bhattacharyya"):
            expected = _oracle_indicator(p_vec, q_vec, kind)
            assert abs(indicator(p, q, kind) - expected) <= 1e-12
        checked += 1
    _report("oracle equivalence", f"{checked} randomized pairs within 1e-12, both kinds")


# -- criterion: null calibration ----------------------------------------------


def test_null_calibration_flags_a_quarter_of_random_collections():
    grid = grid_with_cells(5_000)
    layer = uniform_layer(grid, seed=11)
    extent = build_extent("global", grid)
    cells = sorted(layer.values)

    trials = 200
    flagged = 0
    for t in range(trials):
        rng = np.random.default_rng(10_000 + t)
        chosen = [cells[i] for i in rng.choice(len(cells), 157, replace=False)]
        mapped = map_collection(collection_at_cells(grid, chosen, f"trial{t}"), grid)
        result = representativeness(
            mapped, layer, extent, BinningSpec(), m=1000, seed=20_000 + t
        )
        flagged += int(result.biased)

    rate = flagged / trials
    assert 0.20 <= rate <= 0.30
    _report(
        "null calibration",
        f"biased rate {rate:.3f} within 0.25 ± 0.05 over {trials} trials "
        "(n=157, m=1000, 5,000-cell extent)",
    )


# -- criterion: directional extent effect --------------------------------------


def test_mask_extent_strictly_beats_global_for_mask_concentrated_collections(tmp_path):
    grid = grid_with_cells(5_000)
    cells = list(grid.cells())
    rng = np.random.default_rng(55)
    inside = rng.random(len(cells)) < 0.30
    values = np.where(inside, rng.uniform(0, 1, len(cells)), rng.uniform(1, 2, len(cells)))
    layer = VariableLayer("v", "continuous", "",
                          {c: float(x) for c, x in zip(cells, values)})
    mask_layer = VariableLayer("tropics", "categorical", "",
                               {c: float(m) for c, m in zip(cells, inside)})
    catalog = Catalog(tmp_path / "catalog")
    catalog.register(layer)
    catalog.register(mask_layer)

    mask_extent = build_extent(MaskSpec("tropics", frozenset({1.0})), grid, catalog)
    global_extent = build_extent("global", grid, catalog)
    mask_cells = sorted(mask_extent.cells)
    assert 0.25 <= len(mask_cells) / len(cells) <= 0.35

    wins = 0
    trials = 100
    for t in range(trials):
        trng = np.random.default_rng(700 + t)
        chosen = [mask_cells[i] for i in trng.choice(len(mask_cells), 157, replace=False)]
        mapped = map_collection(collection_at_cells(grid, chosen, f"m{t}"), grid)
        scores = {}
        for name, extent in (("mask", mask_extent), ("global", global_extent)):
            _, pop_values = population_cells_values(extent, layer)
            binning = Binning.from_values(pop_values, BinningSpec())
            values_in, _ = sample_values(mapped, layer, extent)
            scores[name] = indicator(
                build_histogram(values_in, binning),
                build_histogram(pop_values, binning),
            )
        wins += int(scores["mask"] > scores["global"])

    assert wins >= 95
    _report(
        "directional extent effect",
        f"mask extent strictly exceeded global in {wins}/{trials} seeded trials (≥95 needed)",
    )


# -- criterion: grid properties -------------------------------------------------


def test_grid_round_trip_areas_and_closure():
    grid = build_grid(GridConfig())  # 96 km² target on the authalic sphere

    rng = np.random.default_rng(77)
    lats = np.degrees(np.arcsin(rng.uniform(-1.0, 1.0, 10_000)))
    lons = rng.uniform(-180.0, 180.0, 10_000)
    lons[lons >= 180.0] = -180.0
    flats = grid.points_to_flat(lats, lons)
    for lat, lon, flat in zip(lats, lons, flats):
        cell = grid.flat_to_cell(int(flat))
        assert grid.cell_polygon(cell).contains(lat, lon)

    total = 0.0
    for b, band in enumerate(grid.bands):
        area = grid.cell_area_km2(CellId(b, 0))
        assert 96.0 * 0.99 <= area <= 96.0 * 1.01
        total += area * band.cell_count
    sphere = 4.0 * math.pi * grid.config.sphere_radius_km**2
    assert abs(total - sphere) / sphere <= 1e-3
    _report(
        "grid properties",
        f"10,000 random points round-trip; areas within ±1% of 96 km²; "
        f"total area off by {abs(total - sphere) / sphere:.2e} (≤1e-3)",
    )


# -- criterion: CLI determinism ---------------------------------------------------


@pytest.fixture()
def cli_workspace(tmp_path):
    raster = tmp_path / "grad.asc"
    mask = tmp_path / "mask.asc"
    sites = tmp_path / "sites.csv"
    write_gradient_raster(raster)
    write_mask_raster(mask)
    write_sites(sites)
    catalog = tmp_path / "catalog"
    assert cli_main([
        "ingest", "--catalog", str(catalog), "--raster", str(raster),
        "--variable", "grad", "--kind", "continuous",
        "--cell-area", str(CELL_AREA_2K),
    ]) == 0
    assert cli_main([
        "ingest", "--catalog", str(catalog), "--raster", str(mask),
        "--variable", "tropics", "--kind", "categorical",
    ]) == 0
    return tmp_path, catalog, raster, mask, sites


def test_cli_reruns_are_byte_identical(cli_workspace):
    tmp, catalog, raster, mask, sites = cli_workspace
    flags = [
        "analyze", "--catalog", str(catalog), "--collection", str(sites),
        "--variable", "grad", "--samples", "300", "--seed", "20260808",
    ]
    assert cli_main(flags + ["--out", str(tmp / "first")]) == 0
    assert cli_main(flags + ["--out", str(tmp / "second")]) == 0
    first = (tmp / "first/result.json").read_bytes()
    second = (tmp / "second/result.json").read_bytes()
    assert first == second
    _report("CLI determinism", f"result.json byte-identical across reruns ({len(first)} bytes)")


# -- criterion: area closure for every analysis -----------------------------------


def _closure(doc):
    class_sum = sum(c["area_km2"] for c in doc["classes"].values())
    area_err = abs(class_sum - doc["total_area_km2"]) / doc["total_area_km2"]
    percent_sum = sum(c["percent"] for c in doc["classes"].values())
    return area_err, abs(percent_sum - 100.0)


def test_area_closure_on_every_analysis(tmp_path):
    grid = grid_with_cells(2_000)
    layer = uniform_layer(grid, seed=33, variable_id="var")
    mask_vals = {c: float(i % 3 == 0) for i, c in enumerate(grid.cells())}
    catalog = Catalog(tmp_path / "catalog")
    catalog.register(layer)
    catalog.register(VariableLayer("mask", "categorical", "", mask_vals))

    cells = sorted(layer.values)
    scenarios = {
        "identity": AnalysisParams("c", "var", seed=1, replicates=50),
        "decile": AnalysisParams("c", "var", seed=2, replicates=50),
        "masked": AnalysisParams(
            "c", "var", extent=MaskSpec("mask", frozenset({1.0})), seed=3, replicates=50
        ),
    }
    collections = {
        "identity": collection_at_cells(grid, cells, "c"),
        "decile": collection_at_cells(
            grid, [c for c in cells if layer.values[c] >= 0.9][:150], "c"
        ),
        "masked": collection_at_cells(
            grid, [c for c in cells if mask_vals[c] == 1.0][:150], "c"
        ),
    }
    worst_area, worst_percent = 0.0, 0.0
    for name, params in scenarios.items():
        doc = result_document(run_analysis(grid, catalog, collections[name], params))
        area_err, percent_err = _closure(doc)
        assert area_err <= 1e-6, name
        assert percent_err <= 1e-9, name
        worst_area = max(worst_area, area_err)
        worst_percent = max(worst_percent, percent_err)
    _report(
        "area closure",
        f"3 analyses: class km² vs extent area off ≤ {worst_area:.2e} (≤1e-6), "
        f"percent sums off ≤ {worst_percent:.2e} (≤1e-9)",
    )


# -- criterion: service/engine parity ----------------------------------------------


def test_service_result_equals_cli_result(cli_workspace):
    tmp, catalog, raster, mask, sites = cli_workspace
    app = create_app(tmp / "store", grid_config=GridConfig(target_cell_area_km2=CELL_AREA_2K))
    client = TestClient(app)

    r = client.post("/collections", content=sites.read_bytes())
    assert r.status_code == 201
    cid = r.json()["collection_id"]
    for vid, kind, path in (("grad", "continuous", raster), ("tropics", "categorical", mask)):
        assert client.post(
            "/variables", params={"variable_id": vid, "kind": kind},
            content=path.read_bytes(),
        ).status_code == 201

    r = client.post("/analyses", json={
        "collection_id": cid, "variable_id": "grad",
        "extent": {"type": "mask", "variable_id": "tropics", "values": [1]},
        "replicates": 300, "seed": 20260808,
    })
    aid = r.json()["analysis_id"]
    deadline = time.time() + 60
    while time.time() < deadline:
        record = client.get(f"/analyses/{aid}").json()
        if record["status"] in ("done", "failed"):
            break
        time.sleep(0.02)
    assert record["status"] == "done", record.get("error")

    # same collection id for the CLI: the file stem names the collection
    cli_sites = tmp / f"{cid}.csv"
    cli_sites.write_text(sites.read_text())
    out_dir = tmp / "cli_run"
    assert cli_main([
        "analyze", "--catalog", str(catalog), "--collection", str(cli_sites),
        "--variable", "grad", "--mask", "tropics:1",
        "--samples", "300", "--seed", "20260808", "--out", str(out_dir),
    ]) == 0
    cli_doc = json.loads((out_dir / "result.json").read_text())
    assert cli_doc == record["result"]
    _report(
        "service/engine parity",
        f"HTTP result equals CLI result field-for-field "
        f"({len(cli_doc)} top-level fields, indicator={cli_doc['indicator']:.4f})",
    )
