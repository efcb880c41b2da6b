"""Per-cell variable layers and their on-disk catalog.

A layer maps grid cells to values for one variable. The catalog persists
layers under `<root>/<variable_id>/{values.csv, meta.json}` — inspectable,
diff-able, and reloadable bit-identically. Reads are concurrent; writes are
serialized by a process-level lock (single-writer contract).
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import ConflictError, DomainError, NotFoundError, ParseError
from .grid import CellId, GridConfig

SCHEMA_VERSION = 1

_VALID_KINDS = ("continuous", "categorical")


@dataclass(frozen=True)
class VariableLayer:
    """Values of one global variable, keyed by grid cell.

    Cells with no data are simply absent. Categorical layers carry their
    finite category set; every stored value must belong to it.
    """

    variable_id: str
    kind: str
    units: str
    values: dict[CellId, float]
    provenance: str = ""
    categories: frozenset[float] | None = None

    def __post_init__(self):
        if self.kind not in _VALID_KINDS:
            raise DomainError(f"kind must be one of {_VALID_KINDS}, got {self.kind!r}")
        if self.kind == "categorical":
            cats = self.categories if self.categories is not None else frozenset(self.values.values())
            object.__setattr__(self, "categories", frozenset(cats))
            stray = set(self.values.values()) - self.categories
            if stray:
                raise DomainError(f"categorical layer has values outside its category set: {sorted(stray)[:5]}")
        elif self.categories is not None:
            raise DomainError("continuous layers carry no category set")

    @property
    def cell_count(self) -> int:
        return len(self.values)

    def value_at(self, cell: CellId) -> float | None:
        return self.values.get(cell)


@dataclass(frozen=True)
class LayerInfo:
    variable_id: str
    kind: str
    units: str
    cell_count: int


class Catalog:
    """Directory-backed store of registered variable layers."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    def _layer_dir(self, variable_id: str) -> Path:
        if not variable_id or "/" in variable_id or variable_id.startswith("."):
            raise DomainError(f"invalid variable id {variable_id!r}")
        return self.root / variable_id

    def ensure_grid(self, config: GridConfig | None = None) -> GridConfig:
        """Pin (or load) the grid configuration this catalog's layers are keyed to.

        Layer cell ids are only meaningful for one grid, so the first caller
        fixes it and later callers must agree or pass None.
        """
        path = self.root / "grid.json"
        if path.exists():
            with open(path) as fh:
                data = json.load(fh)
            existing = GridConfig(
                sphere_radius_km=data["sphere_radius_km"],
                target_cell_area_km2=data["target_cell_area_km2"],
            )
            if config is not None and config != existing:
                raise ConflictError(
                    f"catalog at {self.root} is pinned to grid {existing}, got {config}"
                )
            return existing
        config = config if config is not None else GridConfig()
        with self._write_lock:
            with open(path, "w") as fh:
                json.dump(
                    {
                        "schema_version": SCHEMA_VERSION,
                        "sphere_radius_km": config.sphere_radius_km,
                        "target_cell_area_km2": config.target_cell_area_km2,
                    },
                    fh,
                    indent=2,
                    sort_keys=True,
                )
                fh.write("\n")
        return config

    def has(self, variable_id: str) -> bool:
        return (self._layer_dir(variable_id) / "meta.json").exists()

    def register(self, layer: VariableLayer) -> None:
        """Persist a layer. Raises ConflictError if the id is taken."""
        with self._write_lock:
            d = self._layer_dir(layer.variable_id)
            if (d / "meta.json").exists():
                raise ConflictError(f"variable {layer.variable_id!r} is already registered")
            d.mkdir(parents=True, exist_ok=True)
            meta = {
                "schema_version": SCHEMA_VERSION,
                "variable_id": layer.variable_id,
                "kind": layer.kind,
                "units": layer.units,
                "provenance": layer.provenance,
                "cell_count": layer.cell_count,
                "categories": sorted(layer.categories) if layer.categories is not None else None,
            }
            with open(d / "values.csv", "w") as fh:
                fh.write("band,column,value\n")
                for cell in sorted(layer.values):
                    fh.write(f"{cell.band_index},{cell.column_index},{layer.values[cell]!r}\n")
            with open(d / "meta.json", "w") as fh:
                json.dump(meta, fh, indent=2, sort_keys=True)
                fh.write("\n")

    def load(self, variable_id: str) -> VariableLayer:
        """Load a registered layer, value-identical to what was stored."""
        d = self._layer_dir(variable_id)
        meta_path = d / "meta.json"
        if not meta_path.exists():
            raise NotFoundError(f"variable {variable_id!r} is not registered")
        with open(meta_path) as fh:
            meta = json.load(fh)
        values: dict[CellId, float] = {}
        with open(d / "values.csv") as fh:
            header = fh.readline().strip()
            if header != "band,column,value":
                raise ParseError(f"unexpected layer csv header {header!r}", line=1)
            for line_no, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                try:
                    b, c, v = line.split(",")
                    values[CellId(int(b), int(c))] = float(v)
                except ValueError:
                    raise ParseError(f"bad layer csv row {line!r}", line=line_no)
        cats = meta.get("categories")
        return VariableLayer(
            variable_id=meta["variable_id"],
            kind=meta["kind"],
            units=meta.get("units", ""),
            values=values,
            provenance=meta.get("provenance", ""),
            categories=frozenset(cats) if cats is not None else None,
        )

    def list_variables(self) -> list[LayerInfo]:
        infos = []
        if not self.root.exists():
            return infos
        for meta_path in sorted(self.root.glob("*/meta.json")):
            with open(meta_path) as fh:
                meta = json.load(fh)
            infos.append(
                LayerInfo(
                    variable_id=meta["variable_id"],
                    kind=meta["kind"],
                    units=meta.get("units", ""),
                    cell_count=meta.get("cell_count", 0),
                )
            )
        return infos
