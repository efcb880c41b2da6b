"""Tests for the georep CLI."""

import json

import numpy as np
import pytest

from georep.cli import build_parser, main

from conftest import EARTH_SPHERE_AREA

CELL_AREA_2K = EARTH_SPHERE_AREA / 2000  # coarse grid: ~2000 cells


def write_gradient_raster(path, ncols=72, nrows=36, seed=3):
    rng = np.random.default_rng(seed)
    cellsize = 360 / ncols
    rows = []
    for r in range(nrows):
        lat = 90 - (r + 0.5) * (180 / nrows)
        rows.append(
            " ".join(
                f"{abs(lat) / 90 + 0.05 * rng.random():.6f}" for _ in range(ncols)
            )
        )
    path.write_text(
        f"ncols {ncols}\nnrows {nrows}\nxllcorner -180\nyllcorner -90\n"
        f"cellsize {cellsize}\nNODATA_value -9999\n" + "\n".join(rows) + "\n"
    )


def write_mask_raster(path, ncols=72, nrows=36):
    rows = []
    for r in range(nrows):
        lat = 90 - (r + 0.5) * (180 / nrows)
        rows.append(" ".join("1" if abs(lat) < 25 else "0" for _ in range(ncols)))
    path.write_text(
        f"ncols {ncols}\nnrows {nrows}\nxllcorner -180\nyllcorner -90\n"
        f"cellsize {360 / ncols}\nNODATA_value -9999\n" + "\n".join(rows) + "\n"
    )


def write_sites(path, n=25, lat_band=20.0, seed=9):
    rng = np.random.default_rng(seed)
    rows = ["site_id,lat,lon"]
    for i in range(n):
        rows.append(f"s{i},{rng.uniform(-lat_band, lat_band):.4f},{rng.uniform(-179, 179):.4f}")
    path.write_text("\n".join(rows) + "\n")


@pytest.fixture()
def workspace(tmp_path):
    raster = tmp_path / "grad.asc"
    mask = tmp_path / "mask.asc"
    sites = tmp_path / "sites.csv"
    write_gradient_raster(raster)
    write_mask_raster(mask)
    write_sites(sites)
    catalog = tmp_path / "catalog"
    return tmp_path, catalog, raster, mask, sites


def ingest_all(catalog, raster, mask):
    assert main([
        "ingest", "--catalog", str(catalog), "--raster", str(raster),
        "--variable", "grad", "--kind", "continuous",
        "--cell-area", str(CELL_AREA_2K),
    ]) == 0
    assert main([
        "ingest", "--catalog", str(catalog), "--raster", str(mask),
        "--variable", "tropics", "--kind", "categorical",
    ]) == 0


class TestIngest:
    def test_registers_and_reports_cell_count(self, workspace, capsys):
        _, catalog, raster, _, _ = workspace
        code = main([
            "ingest", "--catalog", str(catalog), "--raster", str(raster),
            "--variable", "grad", "--kind", "continuous",
            "--cell-area", str(CELL_AREA_2K),
        ])
        out = capsys.readouterr().out
        assert code == 0
        assert out.startswith("registered grad: ")
        assert int(out.split(":")[1].split()[0]) > 0

    def test_duplicate_variable_exits_2(self, workspace, capsys):
        _, catalog, raster, mask, _ = workspace
        ingest_all(catalog, raster, mask)
        code = main([
            "ingest", "--catalog", str(catalog), "--raster", str(raster),
            "--variable", "grad", "--kind", "continuous",
        ])
        assert code == 2
        assert "already registered" in capsys.readouterr().err

    def test_missing_required_flag_exits_2(self, workspace, capsys):
        _, catalog, raster, _, _ = workspace
        with pytest.raises(SystemExit) as exc:
            main(["ingest", "--catalog", str(catalog), "--raster", str(raster)])
        assert exc.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_catalog_from_environment(self, workspace, capsys, monkeypatch):
        _, catalog, raster, _, _ = workspace
        monkeypatch.setenv("GEOREP_CATALOG", str(catalog))
        code = main([
            "ingest", "--raster", str(raster), "--variable", "grad",
            "--kind", "continuous", "--cell-area", str(CELL_AREA_2K),
        ])
        assert code == 0

    def test_resample_and_fill_pipeline(self, workspace, capsys):
        tmp, catalog, _, _, _ = workspace
        # a sparse raster: nodata except one hemisphere, filled then resampled
        rows = []
        for r in range(18):
            lat = 90 - (r + 0.5) * 10
            rows.append(" ".join(
                "5" if lat > 0 and c % 2 == 0 else "-9999" for c in range(36)
            ))
        holey = tmp / "holey.asc"
        holey.write_text(
            "ncols 36\nnrows 18\nxllcorner -180\nyllcorner -90\ncellsize 10\n"
            "NODATA_value -9999\n" + "\n".join(rows) + "\n"
        )
        code = main([
            "ingest", "--catalog", str(catalog), "--raster", str(holey),
            "--variable", "sparse", "--kind", "continuous",
            "--fill", "1", "--resample", "5",
            "--cell-area", str(CELL_AREA_2K),
        ])
        assert code == 0
        filled_count = int(capsys.readouterr().out.split(":")[1].split()[0])

        from georep.catalog import Catalog

        layer = Catalog(catalog).load("sparse")
        assert set(layer.values.values()) == {5.0}
        assert layer.cell_count == filled_count > 0

    def test_gzipped_raster(self, workspace, capsys):
        import gzip

        tmp, catalog, raster, _, _ = workspace
        gz = tmp / "grad.asc.gz"
        with gzip.open(gz, "wt") as fh:
            fh.write(raster.read_text())
        code = main([
            "ingest", "--catalog", str(catalog), "--raster", str(gz),
            "--variable", "gz_grad", "--kind", "continuous",
            "--cell-area", str(CELL_AREA_2K),
        ])
        assert code == 0
        assert "registered gz_grad" in capsys.readouterr().out


class TestAnalyze:
    def test_default_samples_is_1000(self):
        parser = build_parser()
        args = parser.parse_args([
            "analyze", "--collection", "x.csv", "--variable", "v", "--out", "d",
        ])
        assert args.samples == 1000
        assert args.bins == 20
        assert args.indicator == "intersection"

    def test_outputs_written_and_summary_printed(self, workspace, capsys):
        tmp, catalog, raster, mask, sites = workspace
        ingest_all(catalog, raster, mask)
        out_dir = tmp / "run"
        code = main([
            "analyze", "--catalog", str(catalog), "--collection", str(sites),
            "--variable", "grad", "--samples", "60", "--seed", "42",
            "--out", str(out_dir),
        ])
        assert code == 0
        printed = capsys.readouterr().out
        assert "indicator" in printed
        assert "percentile_rank" in printed
        assert "biased" in printed
        for name in ("result.json", "bins.csv", "cells.csv", "map.json"):
            assert (out_dir / name).exists()

    def test_byte_identical_reruns(self, workspace):
        tmp, catalog, raster, mask, sites = workspace
        ingest_all(catalog, raster, mask)
        flags = [
            "analyze", "--catalog", str(catalog), "--collection", str(sites),
            "--variable", "grad", "--samples", "60", "--seed", "7",
        ]
        assert main(flags + ["--out", str(tmp / "a")]) == 0
        assert main(flags + ["--out", str(tmp / "b")]) == 0
        assert (tmp / "a/result.json").read_bytes() == (tmp / "b/result.json").read_bytes()

    def test_mask_narrowing_raises_indicator(self, workspace):
        tmp, catalog, raster, mask, sites = workspace
        ingest_all(catalog, raster, mask)
        base = [
            "analyze", "--catalog", str(catalog), "--collection", str(sites),
            "--variable", "grad", "--samples", "60", "--seed", "3",
        ]
        assert main(base + ["--out", str(tmp / "g")]) == 0
        assert main(base + ["--mask", "tropics:1", "--out", str(tmp / "m")]) == 0
        global_doc = json.loads((tmp / "g/result.json").read_text())
        masked_doc = json.loads((tmp / "m/result.json").read_text())
        assert masked_doc["indicator"] > global_doc["indicator"]
        assert masked_doc["extent"]["type"] == "mask"

    def test_json_summary(self, workspace, capsys):
        tmp, catalog, raster, mask, sites = workspace
        ingest_all(catalog, raster, mask)
        capsys.readouterr()  # drop ingest output
        code = main([
            "analyze", "--catalog", str(catalog), "--collection", str(sites),
            "--variable", "grad", "--samples", "30", "--seed", "1",
            "--json", "--out", str(tmp / "j"),
        ])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert {"indicator", "percentile_rank", "biased", "seed"} <= set(summary)

    def test_unknown_variable_exits_nonzero(self, workspace, capsys):
        tmp, catalog, raster, mask, sites = workspace
        ingest_all(catalog, raster, mask)
        code = main([
            "analyze", "--catalog", str(catalog), "--collection", str(sites),
            "--variable", "nope", "--out", str(tmp / "x"),
        ])
        assert code == 1
        assert "nope" in capsys.readouterr().err

    def test_empty_extent_exits_nonzero(self, workspace, capsys):
        tmp, catalog, raster, mask, sites = workspace
        ingest_all(catalog, raster, mask)
        code = main([
            "analyze", "--catalog", str(catalog), "--collection", str(sites),
            "--variable", "grad", "--mask", "tropics:7", "--out", str(tmp / "x"),
        ])
        assert code == 1
        assert "extent is empty" in capsys.readouterr().err


class TestReport:
    def _run_analysis(self, workspace):
        tmp, catalog, raster, mask, sites = workspace
        ingest_all(catalog, raster, mask)
        out_dir = tmp / "run"
        assert main([
            "analyze", "--catalog", str(catalog), "--collection", str(sites),
            "--variable", "grad", "--samples", "60", "--seed", "42",
            "--out", str(out_dir),
        ]) == 0
        return tmp, out_dir

    def test_svg_charts_produced(self, workspace):
        _, out_dir = self._run_analysis(workspace)
        assert main(["report", "--analysis", str(out_dir), "--format", "svg"]) == 0
        for name in (
            "collection_histogram.svg", "population_histogram.svg", "null_distribution.svg",
        ):
            path = out_dir / name
            assert path.exists() and path.stat().st_size > 0
            assert b"<svg" in path.read_bytes()[:500]

    def test_csv_bins_rows(self, workspace):
        _, out_dir = self._run_analysis(workspace)
        assert main(["report", "--analysis", str(out_dir), "--format", "csv"]) == 0
        lines = (out_dir / "bins.csv").read_text().strip().splitlines()
        assert lines[0] == "bin_index,lower,upper,category,p_sample,p_population,score"
        assert len(lines) == 21

    def test_null_marker_matches_indicator(self, workspace):
        _, out_dir = self._run_analysis(workspace)
        assert main(["report", "--analysis", str(out_dir), "--format", "csv"]) == 0
        doc = json.loads((out_dir / "result.json").read_text())
        marker_line = (out_dir / "null.csv").read_text().strip().splitlines()[-1]
        assert repr(doc["indicator"]) in marker_line

    def test_missing_analysis_dir_exits_nonzero(self, tmp_path, capsys):
        code = main(["report", "--analysis", str(tmp_path / "nope")])
        assert code == 1
        assert "result.json" in capsys.readouterr().err
