"""HTTP facade over the engine with a file-backed store.

Analyses run asynchronously: POST /analyses returns a pending record with a
fresh id (and a concrete seed, generated when the request omitted one), a
worker thread computes the result, and clients poll GET /analyses/{id} until
the status is done or failed. All entities live as plain files under the
store root, so a restarted service sees every record. Completed records are
immutable; reads need no locking.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse

from .analysis import BinningSpec
from .catalog import Catalog
from .errors import ConflictError, GeorepError, NotFoundError
from .grid import Grid, GridConfig, build_grid
from .pipeline import (
    AnalysisParams,
    dump_json,
    extent_spec_doc,
    run_analysis,
    write_outputs,
)
from .sites import BboxSpec, Collection, MaskSpec, parse_sites_csv

SCHEMA_VERSION = 1


def _utcnow() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def params_doc(params: AnalysisParams) -> dict[str, Any]:
    return {
        "collection_id": params.collection_id,
        "variable_id": params.variable_id,
        "extent": extent_spec_doc(params.extent),
        "binning": {"kind": params.binning.kind, "bin_count": params.binning.bin_count},
        "indicator_kind": params.indicator_kind,
        "replicates": params.replicates,
        "effective_sample_size": params.effective_sample_size,
        "seed": params.seed,
        "dedupe_cells": params.dedupe_cells,
        "with_replacement": params.with_replacement,
    }


def params_from_doc(doc: dict[str, Any]) -> AnalysisParams:
    """Parse an AnalysisRequest JSON body into engine parameters."""
    try:
        collection_id = doc["collection_id"]
        variable_id = doc["variable_id"]
    except KeyError as exc:
        raise GeorepError(f"request is missing {exc.args[0]!r}")

    extent_doc = doc.get("extent") or {"type": "global"}
    etype = extent_doc.get("type", "global")
    if etype == "global":
        extent: Any = "global"
    elif etype == "mask":
        extent = MaskSpec(
            variable_id=extent_doc["variable_id"],
            included_values=frozenset(float(v) for v in extent_doc["values"]),
        )
    elif etype == "bbox":
        extent = BboxSpec(
            south=float(extent_doc["south"]), west=float(extent_doc["west"]),
            north=float(extent_doc["north"]), east=float(extent_doc["east"]),
        )
    else:
        raise GeorepError(f"unknown extent type {etype!r}")

    binning_doc = doc.get("binning") or {}
    binning = BinningSpec(
        kind=binning_doc.get("kind", "equal_width"),
        bin_count=int(binning_doc.get("bin_count", 20)),
    )
    replicates = int(doc.get("replicates", 1000))
    if replicates < 1:
        raise GeorepError(f"replicates must be ≥ 1, got {replicates}")
    ess = doc.get("effective_sample_size")
    seed = doc.get("seed")
    return AnalysisParams(
        collection_id=collection_id,
        variable_id=variable_id,
        extent=extent,
        binning=binning,
        indicator_kind=doc.get("indicator_kind", "intersection"),
        replicates=replicates,
        effective_sample_size=int(ess) if ess is not None else None,
        seed=int(seed) if seed is not None else None,
        dedupe_cells=bool(doc.get("dedupe_cells", False)),
        with_replacement=bool(doc.get("with_replacement", False)),
    )


class Store:
    """File-backed persistence: catalog, collections, analysis records."""

    def __init__(self, root: str | Path, grid_config: GridConfig | None = None,
                 workers: int = 2):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.catalog = Catalog(self.root / "catalog")
        self.grid_config = self.catalog.ensure_grid(grid_config)
        self.grid: Grid = build_grid(self.grid_config)
        (self.root / "collections").mkdir(exist_ok=True)
        (self.root / "analyses").mkdir(exist_ok=True)
        self._record_lock = threading.Lock()
        self._executor = ThreadPoolExecutor(max_workers=workers)

    # -- collections --------------------------------------------------------

    def save_collection(self, csv_text: str) -> Collection:
        collection_id = uuid.uuid4().hex[:12]
        collection = parse_sites_csv(csv_text, collection_id=collection_id)
        d = self.root / "collections" / collection_id
        d.mkdir(parents=True)
        (d / "sites.csv").write_text(csv_text)
        return collection

    def load_collection(self, collection_id: str) -> Collection:
        path = self.root / "collections" / collection_id / "sites.csv"
        if not path.exists():
            raise NotFoundError(f"collection {collection_id!r} not found")
        return parse_sites_csv(path.read_text(), collection_id=collection_id)

    # -- analyses ------------------------------------------------------------

    def _analysis_dir(self, analysis_id: str) -> Path:
        return self.root / "analyses" / analysis_id

    def _write_record(self, record: dict[str, Any]) -> None:
        d = self._analysis_dir(record["analysis_id"])
        d.mkdir(parents=True, exist_ok=True)
        tmp = d / "record.json.tmp"
        tmp.write_text(dump_json(record))
        os.replace(tmp, d / "record.json")

    def read_record(self, analysis_id: str) -> dict[str, Any]:
        path = self._analysis_dir(analysis_id) / "record.json"
        if not path.exists():
            raise NotFoundError(f"analysis {analysis_id!r} not found")
        return json.loads(path.read_text())

    def read_result(self, analysis_id: str) -> dict[str, Any] | None:
        path = self._analysis_dir(analysis_id) / "result.json"
        if not path.exists():
            return None
        return json.loads(path.read_text())

    def read_map(self, analysis_id: str) -> dict[str, Any] | None:
        path = self._analysis_dir(analysis_id) / "map.json"
        if not path.exists():
            return None
        return json.loads(path.read_text())

    def create_analysis(self, params: AnalysisParams) -> dict[str, Any]:
        # fail fast on unknown ids so the client gets a 404, not a failed record
        self.load_collection(params.collection_id)
        if not self.catalog.has(params.variable_id):
            raise NotFoundError(f"variable {params.variable_id!r} not found")
        params = params.with_seed()
        analysis_id = uuid.uuid4().hex[:12]
        record = {
            "schema_version": SCHEMA_VERSION,
            "analysis_id": analysis_id,
            "status": "pending",
            "created_at": _utcnow(),
            "request": params_doc(params),
            "error": None,
        }
        with self._record_lock:
            self._write_record(record)
        self._executor.submit(self._run, analysis_id, params)
        return record

    def _run(self, analysis_id: str, params: AnalysisParams) -> None:
        record = self.read_record(analysis_id)
        record["status"] = "running"
        with self._record_lock:
            self._write_record(record)
        try:
            collection = self.load_collection(params.collection_id)
            output = run_analysis(self.grid, self.catalog, collection, params)
            d = self._analysis_dir(analysis_id)
            write_outputs(output, d)
            record["status"] = "done"
        except Exception as exc:  # persist the failure for the poller
            record["status"] = "failed"
            record["error"] = str(exc)
        with self._record_lock:
            self._write_record(record)

    def record_view(self, analysis_id: str) -> dict[str, Any]:
        record = self.read_record(analysis_id)
        if record["status"] == "done":
            record["result"] = self.read_result(analysis_id)
        return record


def create_app(store_root: str | Path, grid_config: GridConfig | None = None,
               frontend_dist: str | Path | None = None) -> FastAPI:
    """Build the service around a store directory."""
    store = Store(store_root, grid_config)
    app = FastAPI(title="georep service", version="0.1.0")
    app.state.store = store

    @app.exception_handler(GeorepError)
    async def georep_error(request: Request, exc: GeorepError):
        if isinstance(exc, NotFoundError):
            code = 404
        elif isinstance(exc, ConflictError):
            code = 409
        else:
            code = 400
        return JSONResponse(
            status_code=code,
            content={"schema_version": SCHEMA_VERSION, "detail": str(exc)},
        )

    @app.post("/collections", status_code=201)
    async def upload_collection(request: Request):
        """Register a sites CSV; body is the raw CSV text."""
        body = (await request.body()).decode("utf-8")
        collection = store.save_collection(body)
        return {
            "schema_version": SCHEMA_VERSION,
            "collection_id": collection.collection_id,
            "site_count": len(collection.sites),
        }

    @app.post("/variables", status_code=201)
    async def upload_raster(
        request: Request,
        variable_id: str = Query(...),
        kind: str = Query(...),
        stat: str | None = Query(None),
        units: str = Query(""),
    ):
        """Aggregate an ASCII-grid body onto the grid and register the layer."""
        from .rasters import parse_ascii_grid, zonal_aggregate

        body = (await request.body()).decode("utf-8")
        raster = parse_ascii_grid(body)
        layer = zonal_aggregate(
            raster, store.grid, kind=kind, variable_id=variable_id,
            units=units, stat=stat, provenance="uploaded raster",
        )
        store.catalog.register(layer)
        return {
            "schema_version": SCHEMA_VERSION,
            "variable_id": variable_id,
            "cell_count": layer.cell_count,
        }

    @app.get("/variables")
    async def list_variables():
        return {
            "schema_version": SCHEMA_VERSION,
            "variables": [
                {
                    "variable_id": info.variable_id,
                    "kind": info.kind,
                    "units": info.units,
                    "cell_count": info.cell_count,
                }
                for info in store.catalog.list_variables()
            ],
        }

    @app.post("/analyses", status_code=202)
    async def create_analysis(request: Request):
        doc = await request.json()
        params = params_from_doc(doc)
        return store.create_analysis(params)

    @app.get("/analyses/{analysis_id}")
    async def get_analysis(analysis_id: str):
        return store.record_view(analysis_id)

    @app.get("/analyses/{analysis_id}/map")
    async def get_map(analysis_id: str):
        record = store.read_record(analysis_id)
        if record["status"] != "done":
            raise ConflictError(f"analysis {analysis_id!r} is {record['status']}, not done")
        return store.read_map(analysis_id)

    @app.get("/analyses/{analysis_id}/report.csv")
    async def get_report_csv(analysis_id: str):
        record = store.read_record(analysis_id)
        if record["status"] != "done":
            raise ConflictError(f"analysis {analysis_id!r} is {record['status']}, not done")
        path = store._analysis_dir(analysis_id) / "bins.csv"
        return Response(content=path.read_text(), media_type="text/csv")

    dist = Path(frontend_dist) if frontend_dist else Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if dist.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=dist, html=True), name="ui")

    return app
