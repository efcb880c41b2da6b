"""Case-study collections (the sample) and analysis extents (the population).

A Collection is an ordered list of georeferenced sites; mapping it onto the
grid assigns every site to its cell, keeping duplicates as distinct draws.
An Extent is the set of cells a collection is judged against: the whole
grid, the cells matching a categorical mask, or the cells inside a bounding
box. Everything here is immutable once built.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterator, TextIO

import numpy as np

from .catalog import Catalog
from .errors import ContractError, DomainError, EmptyExtentError, ParseError
from .grid import CellId, Grid


@dataclass(frozen=True)
class Site:
    site_id: str
    lat: float
    lon: float
    label: str | None = None


@dataclass(frozen=True)
class Collection:
    collection_id: str
    sites: tuple[Site, ...]

    def __post_init__(self):
        if len(self.sites) < 1:
            raise DomainError("a collection needs at least one site")
        ids = [s.site_id for s in self.sites]
        if len(set(ids)) != len(ids):
            dupe = next(i for i in ids if ids.count(i) > 1)
            raise DomainError(f"duplicate site id {dupe!r} in collection")


@dataclass(frozen=True)
class MappedCollection:
    collection_id: str
    cell_assignments: tuple[tuple[str, CellId], ...]
    effective_sample_size: int

    def __post_init__(self):
        if self.effective_sample_size < 1:
            raise DomainError("effective_sample_size must be ≥ 1")


@dataclass(frozen=True)
class MaskSpec:
    """Extent filter: keep cells whose categorical value is in included_values."""

    variable_id: str
    included_values: frozenset[float]

    def __post_init__(self):
        object.__setattr__(self, "included_values", frozenset(self.included_values))
        if not self.included_values:
            raise DomainError("MaskSpec.included_values must be non-empty")


@dataclass(frozen=True)
class BboxSpec:
    """Extent filter: keep cells whose centers fall inside the box (inclusive)."""

    south: float
    west: float
    north: float
    east: float

    def __post_init__(self):
        if not (-90 <= self.south < self.north <= 90):
            raise DomainError(f"bbox latitudes invalid: south={self.south}, north={self.north}")
        if not (-180 <= self.west < self.east <= 180):
            raise DomainError(f"bbox longitudes invalid: west={self.west}, east={self.east}")


class Extent:
    """A non-empty set of grid cells. Global extents are a whole-grid view."""

    def __init__(self, extent_id: str, description: str, *, cells: frozenset[CellId] | None = None,
                 grid: Grid | None = None):
        if (cells is None) == (grid is None):
            raise DomainError("Extent takes either an explicit cell set or a grid (global)")
        if cells is not None and not cells:
            raise EmptyExtentError("extent is empty")
        self.extent_id = extent_id
        self.description = description
        self._cells = cells
        self._grid = grid

    @property
    def is_global(self) -> bool:
        return self._cells is None

    def __len__(self) -> int:
        return self._grid.total_cells if self._cells is None else len(self._cells)

    def __contains__(self, cell: CellId) -> bool:
        if self._cells is not None:
            return cell in self._cells
        b, c = cell
        return 0 <= b < len(self._grid.bands) and 0 <= c < self._grid.bands[b].cell_count

    def __iter__(self) -> Iterator[CellId]:
        if self._cells is not None:
            return iter(sorted(self._cells))
        return self._grid.cells()

    @property
    def cells(self) -> frozenset[CellId]:
        if self._cells is not None:
            return self._cells
        return frozenset(self._grid.cells())

    def export_csv(self, out: TextIO) -> int:
        out.write("band,column\n")
        n = 0
        for cell in self:
            out.write(f"{cell.band_index},{cell.column_index}\n")
            n += 1
        return n


def parse_sites_csv(source: str | TextIO, collection_id: str = "collection") -> Collection:
    """Parse a `site_id,lat,lon[,label]` CSV into a Collection.

    Row numbers in errors count the header as row 1.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("sites csv is empty", row=1)
    header = [h.strip().lower() for h in header]
    if header not in (["site_id", "lat", "lon"], ["site_id", "lat", "lon", "label"]):
        raise ParseError(
            f"expected header site_id,lat,lon[,label], got {','.join(header)!r}", row=1
        )
    has_label = len(header) == 4

    sites: list[Site] = []
    seen: set[str] = set()
    for row_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(row)}", row=row_no)
        site_id = row[0].strip()
        if not site_id:
            raise ParseError("empty site_id", row=row_no)
        if site_id in seen:
            raise ParseError(f"duplicate site id {site_id!r}", row=row_no)
        try:
            lat = float(row[1])
            lon = float(row[2])
        except ValueError:
            raise ParseError(f"non-numeric coordinates {row[1]!r},{row[2]!r}", row=row_no)
        if not (-90.0 <= lat <= 90.0) or math.isnan(lat):
            raise ParseError("lat out of range", row=row_no)
        if not (-180.0 <= lon < 180.0) or math.isnan(lon):
            raise ParseError("lon out of range", row=row_no)
        label = row[3].strip() if has_label else None
        seen.add(site_id)
        sites.append(Site(site_id=site_id, lat=lat, lon=lon, label=label or None))

    if not sites:
        raise ParseError("sites csv has no data rows", row=2)
    return Collection(collection_id=collection_id, sites=tuple(sites))


def map_collection(
    collection: Collection,
    grid: Grid,
    dedupe_cells: bool = False,
    effective_sample_size: int | None = None,
) -> MappedCollection:
    """Assign every site to its grid cell.

    Duplicate sites in one cell are retained as distinct draws unless
    dedupe_cells is set (first site per cell wins). effective_sample_size
    defaults to the number of assignments.
    """
    lats = np.asarray([s.lat for s in collection.sites])
    lons = np.asarray([s.lon for s in collection.sites])
    flat = grid.points_to_flat(lats, lons)
    assignments: list[tuple[str, CellId]] = []
    seen: set[int] = set()
    for site, f in zip(collection.sites, flat):
        if dedupe_cells:
            if int(f) in seen:
                continue
            seen.add(int(f))
        assignments.append((site.site_id, grid.flat_to_cell(int(f))))
    n = effective_sample_size if effective_sample_size is not None else len(assignments)
    return MappedCollection(
        collection_id=collection.collection_id,
        cell_assignments=tuple(assignments),
        effective_sample_size=n,
    )


def build_extent(
    spec: str | MaskSpec | BboxSpec,
    grid: Grid,
    catalog: Catalog | None = None,
    extent_id: str | None = None,
) -> Extent:
    """Build the population extent from a spec.

    "global" selects every grid cell; a MaskSpec selects cells whose
    categorical value is included; a BboxSpec selects cells whose centers lie
    inside the box. Raises EmptyExtentError when nothing matches.
    """
    if spec == "global":
        return Extent(extent_id or "global", "all grid cells", grid=grid)

    if isinstance(spec, MaskSpec):
        if catalog is None:
            raise ContractError("mask extents need a catalog")
        layer = catalog.load(spec.variable_id)
        if layer.kind != "categorical":
            raise ContractError(
                f"mask layer {spec.variable_id!r} is {layer.kind}; masks need a categorical layer"
            )
        cells = frozenset(c for c, v in layer.values.items() if v in spec.included_values)
        if not cells:
            raise EmptyExtentError("extent is empty")
        name = extent_id or f"mask:{spec.variable_id}"
        desc = f"cells where {spec.variable_id} ∈ {sorted(spec.included_values)}"
        return Extent(name, desc, cells=cells)

    if isinstance(spec, BboxSpec):
        cells = set()
        for b, band in enumerate(grid.bands):
            lat_c = (band.lat_lo + band.lat_hi) / 2.0
            if not (spec.south <= lat_c <= spec.north):
                continue
            width = 360.0 / band.cell_count
            # columns whose center lon ∈ [west, east]
            j_lo = math.ceil((spec.west + 180.0) / width - 0.5)
            j_hi = math.floor((spec.east + 180.0) / width - 0.5)
            for j in range(max(0, j_lo), min(band.cell_count - 1, j_hi) + 1):
                cells.add(CellId(b, j))
        if not cells:
            raise EmptyExtentError("extent is empty")
        name = extent_id or "bbox"
        desc = f"cells with centers in [{spec.south}, {spec.north}] × [{spec.west}, {spec.east}]"
        return Extent(name, desc, cells=frozenset(cells))

    raise ContractError(f"unknown extent spec {spec!r}")
