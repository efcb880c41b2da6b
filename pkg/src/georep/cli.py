"""Batch command-line driver: ingest rasters, run analyses, emit reports.

Exit codes: 0 on success, 2 for usage errors and id conflicts, 1 for other
runtime failures (parse errors, missing inputs, empty extents).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .analysis import BinningSpec
from .catalog import Catalog
from .errors import ConflictError, GeorepError
from .grid import DEFAULT_CELL_AREA_KM2, GridConfig, build_grid
from .pipeline import AnalysisParams, run_analysis, write_outputs
from .rasters import focal_fill, read_ascii_grid, resample_nearest, zonal_aggregate
from .sites import BboxSpec, MaskSpec, parse_sites_csv

CATALOG_ENV = "GEOREP_CATALOG"


@dataclass(frozen=True)
class CliConfig:
    """Resolved defaults for a CLI invocation."""

    catalog_root: Path
    binning: BinningSpec = BinningSpec()
    replicates: int = 1000
    indicator_kind: str = "intersection"
    seed: int | None = None


def _catalog_root(args: argparse.Namespace) -> Path:
    root = args.catalog or os.environ.get(CATALOG_ENV)
    if not root:
        raise GeorepError(
            f"no catalog directory: pass --catalog or set {CATALOG_ENV}"
        )
    return Path(root)


def _open_catalog(args: argparse.Namespace) -> tuple[Catalog, GridConfig]:
    catalog = Catalog(_catalog_root(args))
    requested = None
    if getattr(args, "cell_area", None) is not None:
        requested = GridConfig(target_cell_area_km2=args.cell_area)
    return catalog, catalog.ensure_grid(requested)


def cmd_ingest(args: argparse.Namespace) -> int:
    catalog, grid_config = _open_catalog(args)
    raster = read_ascii_grid(args.raster)
    if args.resample is not None:
        raster = resample_nearest(raster, args.resample)
    if args.fill is not None:
        raster = focal_fill(raster, args.fill)
    grid = build_grid(grid_config)
    layer = zonal_aggregate(
        raster,
        grid,
        kind=args.kind,
        variable_id=args.variable,
        units=args.units,
        stat=args.stat,
        provenance=f"ingested from {Path(args.raster).name}",
    )
    catalog.register(layer)
    print(f"registered {args.variable}: {layer.cell_count} cells")
    return 0


def _parse_mask(text: str) -> MaskSpec:
    var, _, values = text.partition(":")
    if not var or not values:
        raise GeorepError(f"--mask wants VAR:v1,v2,..., got {text!r}")
    try:
        included = frozenset(float(v) for v in values.split(","))
    except ValueError:
        raise GeorepError(f"--mask values must be numeric, got {values!r}")
    return MaskSpec(variable_id=var, included_values=included)


def _parse_bbox(text: str) -> BboxSpec:
    parts = text.split(",")
    if len(parts) != 4:
        raise GeorepError(f"--bbox wants S,W,N,E, got {text!r}")
    try:
        s, w, n, e = (float(p) for p in parts)
    except ValueError:
        raise GeorepError(f"--bbox bounds must be numeric, got {text!r}")
    return BboxSpec(south=s, west=w, north=n, east=e)


def cmd_analyze(args: argparse.Namespace) -> int:
    catalog, grid_config = _open_catalog(args)
    config = CliConfig(
        catalog_root=catalog.root,
        binning=BinningSpec(kind=args.binning, bin_count=args.bins),
        replicates=args.samples,
        indicator_kind=args.indicator,
        seed=args.seed,
    )
    grid = build_grid(grid_config)
    with open(args.collection) as fh:
        collection = parse_sites_csv(fh, collection_id=Path(args.collection).stem)

    extent = "global"
    if args.mask and args.bbox:
        raise GeorepError("--mask and --bbox are mutually exclusive")
    if args.mask:
        extent = _parse_mask(args.mask)
    elif args.bbox:
        extent = _parse_bbox(args.bbox)

    params = AnalysisParams(
        collection_id=collection.collection_id,
        variable_id=args.variable,
        extent=extent,
        binning=config.binning,
        indicator_kind=config.indicator_kind,
        replicates=config.replicates,
        effective_sample_size=args.effective_n,
        seed=config.seed,
        dedupe_cells=args.dedupe,
    )
    output = run_analysis(grid, catalog, collection, params)
    paths = write_outputs(output, args.out)

    res = output.result
    if args.json:
        print(json.dumps({
            "indicator": res.indicator,
            "percentile_rank": res.percentile_rank,
            "biased": res.biased,
            "variational_coverage": res.variational_coverage,
            "seed": res.seed,
            "out_dir": str(Path(args.out)),
        }, sort_keys=True))
    else:
        print(f"indicator {res.indicator:.6g} ({res.indicator_kind})")
        print(f"percentile_rank {res.percentile_rank:.6g}")
        print(f"biased {'true' if res.biased else 'false'}")
        print(f"seed {res.seed}")
        print(f"wrote {', '.join(str(p) for p in paths.values())}")
    if res.off_extent_site_count:
        print(
            f"warning: {res.off_extent_site_count} site(s) outside the extent "
            "(or on cells without data) were excluded",
            file=sys.stderr,
        )
    return 0


def _chart_histogram(path: Path, edges, proportions, title: str, color: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 3.5))
    lefts = edges[:-1]
    widths = [b - a for a, b in zip(edges[:-1], edges[1:])]
    ax.bar(lefts, proportions, width=widths, align="edge", color=color, edgecolor="white")
    ax.set_title(title)
    ax.set_ylabel("proportion of cells")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _chart_categorical(path: Path, categories, proportions, title: str, color: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar([str(c) for c in categories], proportions, color=color, edgecolor="white")
    ax.set_title(title)
    ax.set_ylabel("proportion of cells")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _chart_null(path: Path, doc: dict) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    hist = doc["null"]["histogram"]
    edges = hist["edges"]
    counts = hist["counts"]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    widths = [b - a for a, b in zip(edges[:-1], edges[1:])]
    ax.bar(edges[:-1], counts, width=widths, align="edge", color="0.6", edgecolor="white")
    ax.plot([doc["indicator"]], [max(counts) * 0.05], "o", color="red", markersize=9, clip_on=False)
    ax.axvline(doc["indicator"], color="red", linewidth=1)
    ax.set_title("indicator under random sampling vs. collection")
    ax.set_xlabel("indicator")
    ax.set_ylabel("replicates")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_report(args: argparse.Namespace) -> int:
    analysis_dir = Path(args.analysis)
    result_path = analysis_dir / "result.json"
    if not result_path.exists():
        raise GeorepError(f"no result.json under {analysis_dir}")
    doc = json.loads(result_path.read_text())
    out_dir = Path(args.out) if args.out else analysis_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.format == "csv":
        bins_rows = doc["bins"]
        lines = ["bin_index,lower,upper,category,p_sample,p_population,score"]
        for row in bins_rows:
            lower = "" if row["lower"] is None else repr(row["lower"])
            upper = "" if row["upper"] is None else repr(row["upper"])
            category = "" if row["category"] is None else repr(row["category"])
            lines.append(
                f"{row['index']},{lower},{upper},{category},"
                f"{row['p_sample']!r},{row['p_population']!r},{row['score']!r}"
            )
        (out_dir / "bins.csv").write_text("\n".join(lines) + "\n")
        hist = doc["null"]["histogram"]
        lines = ["lower,upper,replicates"]
        for lo, hi, c in zip(hist["edges"][:-1], hist["edges"][1:], hist["counts"]):
            lines.append(f"{lo!r},{hi!r},{c}")
        lines.append(f"# collection indicator,{doc['indicator']!r},")
        (out_dir / "null.csv").write_text("\n".join(lines) + "\n")
        print(f"wrote {out_dir / 'bins.csv'}, {out_dir / 'null.csv'}")
        return 0

    bins_rows = doc["bins"]
    p_sample = [r["p_sample"] for r in bins_rows]
    p_pop = [r["p_population"] for r in bins_rows]
    if doc["binning"]["kind"] == "categorical":
        cats = doc["binning"]["categories"]
        _chart_categorical(out_dir / "collection_histogram.svg", cats, p_sample,
                           "collection", "#c0504d")
        _chart_categorical(out_dir / "population_histogram.svg", cats, p_pop,
                           "population", "#4f81bd")
    else:
        edges = [bins_rows[0]["lower"]] + [r["upper"] for r in bins_rows]
        _chart_histogram(out_dir / "collection_histogram.svg", edges, p_sample,
                         "collection", "#c0504d")
        _chart_histogram(out_dir / "population_histogram.svg", edges, p_pop,
                         "population", "#4f81bd")
    _chart_null(out_dir / "null_distribution.svg", doc)
    print(
        f"wrote {out_dir / 'collection_histogram.svg'}, "
        f"{out_dir / 'population_histogram.svg'}, {out_dir / 'null_distribution.svg'}"
    )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    requested = None
    if args.cell_area is not None:
        requested = GridConfig(target_cell_area_km2=args.cell_area)
    app = create_app(args.store, grid_config=requested)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="georep",
        description="Audit how representative a site collection is of a spatial extent.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="aggregate a raster onto the grid and register it")
    p.add_argument("--catalog", help=f"catalog directory (or ${CATALOG_ENV})")
    p.add_argument("--raster", required=True, help="ASCII grid path (.asc or .asc.gz)")
    p.add_argument("--variable", required=True, help="variable id to register")
    p.add_argument("--kind", required=True, choices=["continuous", "categorical"])
    p.add_argument("--stat", choices=["mean", "majority"], default=None,
                   help="zonal statistic (default: mean for continuous, majority for categorical)")
    p.add_argument("--units", default="", help="unit string stored with the layer")
    p.add_argument("--resample", type=float, default=None, metavar="CELLSIZE",
                   help="nearest-neighbour resample to this cellsize first")
    p.add_argument("--fill", type=int, default=None, metavar="RADIUS",
                   help="focal-fill nodata with this pixel radius first")
    p.add_argument("--cell-area", type=float, default=None,
                   help=f"grid cell area in km² when creating a catalog (default {DEFAULT_CELL_AREA_KM2})")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="run a representativeness analysis")
    p.add_argument("--catalog", help=f"catalog directory (or ${CATALOG_ENV})")
    p.add_argument("--collection", required=True, help="sites CSV path")
    p.add_argument("--variable", required=True, help="variable id to analyse")
    p.add_argument("--mask", default=None, metavar="VAR:v1,v2,...",
                   help="restrict the extent to cells with these categorical values")
    p.add_argument("--bbox", default=None, metavar="S,W,N,E",
                   help="restrict the extent to cells with centers in this box")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--binning", choices=["equal_width", "log_width", "categorical"],
                   default="equal_width")
    p.add_argument("--samples", type=int, default=1000, help="null replicate count")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--indicator", choices=["intersection", "bhattacharyya"],
                   default="intersection")
    p.add_argument("--effective-n", type=int, default=None,
                   help="override the null sample size (default: number of sites)")
    p.add_argument("--dedupe", action="store_true",
                   help="collapse multiple sites in one cell to a single draw")
    p.add_argument("--json", action="store_true", help="machine-readable summary on stdout")
    p.add_argument("--cell-area", type=float, default=None,
                   help="grid cell area in km² when creating a catalog")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="render charts from a finished analysis")
    p.add_argument("--analysis", required=True, help="directory holding result.json")
    p.add_argument("--format", choices=["svg", "csv"], default="svg")
    p.add_argument("--out", default=None, help="output directory (default: analysis dir)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--store", required=True, help="service store directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--cell-area", type=float, default=None,
                   help="grid cell area in km² when creating a store")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConflictError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GeorepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
