"""Equal-area discrete global grid.

The sphere is stratified into latitude bands, each band split into
equal-longitude cells. Cell counts per band are apportioned so that every
cell has exactly the same spherical area (sphere_area / total_cells), and
band heights in sin(latitude) follow from the counts. The grid is the unit
of all downstream aggregation and analysis: rasters are reduced to per-cell
values, sites are assigned to cells, extents are sets of cells.

Cells are addressed by (band_index, column_index). Band 0 touches the south
pole; columns run west to east from longitude -180. Points exactly on a cell
boundary belong to the lower band/column index, which makes point_to_cell a
deterministic total function on lat ∈ [-90, 90], lon ∈ [-180, 180).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, TextIO

import numpy as np

from .errors import ConfigError, DomainError

#: Authalic Earth radius in km (sphere with the Earth's surface area).
EARTH_RADIUS_KM = 6371.0072

#: Default target cell area in km².
DEFAULT_CELL_AREA_KM2 = 96.0


class CellId(NamedTuple):
    """Address of one grid cell. Tuple order gives the canonical cell ordering."""

    band_index: int
    column_index: int


@dataclass(frozen=True)
class GridConfig:
    sphere_radius_km: float = EARTH_RADIUS_KM
    target_cell_area_km2: float = DEFAULT_CELL_AREA_KM2

    def validate(self) -> None:
        if not (self.sphere_radius_km > 0):
            raise ConfigError(f"sphere_radius_km must be > 0, got {self.sphere_radius_km}")
        if not (self.target_cell_area_km2 > 0):
            raise ConfigError(
                f"target_cell_area_km2 must be > 0, got {self.target_cell_area_km2}"
            )
        sphere_area = 4.0 * math.pi * self.sphere_radius_km**2
        if self.target_cell_area_km2 > sphere_area:
            raise ConfigError(
                f"target cell area {self.target_cell_area_km2} km² exceeds the "
                f"sphere surface area {sphere_area:.6g} km²"
            )


@dataclass(frozen=True)
class CellPolygon:
    """Closed lat/lon ring bounding a cell. vertices[0] == vertices[-1]."""

    vertices: tuple[tuple[float, float], ...]

    def contains(self, lat: float, lon: float, eps: float = 1e-9) -> bool:
        """Closed-rectangle containment with a float-noise margin in degrees."""
        lats = [v[0] for v in self.vertices]
        lons = [v[1] for v in self.vertices]
        return (
            min(lats) - eps <= lat <= max(lats) + eps
            and min(lons) - eps <= lon <= max(lons) + eps
        )

    def centroid(self) -> tuple[float, float]:
        lats = [v[0] for v in self.vertices]
        lons = [v[1] for v in self.vertices]
        return (min(lats) + max(lats)) / 2.0, (min(lons) + max(lons)) / 2.0


@dataclass(frozen=True)
class Band:
    """One latitude band: sin-latitude interval and its cell count."""

    sin_lo: float
    sin_hi: float
    lat_lo: float
    lat_hi: float
    cell_count: int
    offset: int  # flat index of this band's column 0


@dataclass(frozen=True)
class Grid:
    """Immutable equal-area grid; safe to share across concurrent analyses."""

    config: GridConfig
    bands: tuple[Band, ...]
    total_cells: int
    # numpy views of the band table, kept for vectorised indexing
    _upper_edges: np.ndarray = field(repr=False, compare=False, default=None)
    _counts: np.ndarray = field(repr=False, compare=False, default=None)
    _offsets: np.ndarray = field(repr=False, compare=False, default=None)

    # -- geometry ----------------------------------------------------------

    @property
    def sphere_area_km2(self) -> float:
        return 4.0 * math.pi * self.config.sphere_radius_km**2

    @property
    def band_count(self) -> int:
        return len(self.bands)

    def _check_cell(self, cell: CellId) -> Band:
        band_index, column_index = cell
        if not 0 <= band_index < len(self.bands):
            raise DomainError(f"band index {band_index} out of range [0, {len(self.bands)})")
        band = self.bands[band_index]
        if not 0 <= column_index < band.cell_count:
            raise DomainError(
                f"column index {column_index} out of range [0, {band.cell_count}) "
                f"in band {band_index}"
            )
        return band

    def cell_area_km2(self, cell: CellId) -> float:
        """Spherical-rectangle area R²·Δ(sin lat)·Δlon of one cell."""
        band = self._check_cell(cell)
        dlon_rad = 2.0 * math.pi / band.cell_count
        return self.config.sphere_radius_km**2 * (band.sin_hi - band.sin_lo) * dlon_rad

    def cell_polygon(self, cell: CellId) -> CellPolygon:
        """Closed 5-vertex ring (4 corners) of the cell's lat/lon rectangle.

        The east edge of a band's last column is emitted as longitude 180.0
        so the ring closes without wrapping.
        """
        band = self._check_cell(cell)
        width = 360.0 / band.cell_count
        lon_lo = -180.0 + cell.column_index * width
        lon_hi = -180.0 + (cell.column_index + 1) * width
        if cell.column_index == band.cell_count - 1:
            lon_hi = 180.0
        ring = (
            (band.lat_lo, lon_lo),
            (band.lat_lo, lon_hi),
            (band.lat_hi, lon_hi),
            (band.lat_hi, lon_lo),
            (band.lat_lo, lon_lo),
        )
        return CellPolygon(ring)

    def cell_center(self, cell: CellId) -> tuple[float, float]:
        return self.cell_polygon(cell).centroid()

    # -- indexing ----------------------------------------------------------

    def point_to_cell(self, lat: float, lon: float) -> CellId:
        """Map a point to the unique cell containing it.

        Boundary points go to the lower band/column index. Raises DomainError
        for lat outside [-90, 90] or lon outside [-180, 180).
        """
        flat = self.points_to_flat(np.asarray([lat], dtype=float), np.asarray([lon], dtype=float))
        return self.flat_to_cell(int(flat[0]))

    def points_to_flat(self, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
        """Vectorised point→cell mapping returning flat cell indices."""
        lats = np.asarray(lats, dtype=float)
        lons = np.asarray(lons, dtype=float)
        bad_lat = (lats < -90.0) | (lats > 90.0) | ~np.isfinite(lats)
        if bad_lat.any():
            i = int(np.argmax(bad_lat))
            raise DomainError(f"lat out of range [-90, 90]: {lats[i]}")
        bad_lon = (lons < -180.0) | (lons >= 180.0) | ~np.isfinite(lons)
        if bad_lon.any():
            i = int(np.argmax(bad_lon))
            raise DomainError(f"lon out of range [-180, 180): {lons[i]}")

        s = np.sin(np.radians(lats))
        band = np.searchsorted(self._upper_edges, s, side="left")
        band = np.minimum(band, len(self.bands) - 1)
        counts = self._counts[band]
        # boundary → lower column index: ceil(t) - 1, clamped into the band
        t = (lons + 180.0) * counts / 360.0
        col = np.ceil(t).astype(np.int64) - 1
        col = np.clip(col, 0, counts - 1)
        return self._offsets[band] + col

    def flat_to_cell(self, flat: int) -> CellId:
        if not 0 <= flat < self.total_cells:
            raise DomainError(f"flat index {flat} out of range [0, {self.total_cells})")
        band = int(np.searchsorted(self._offsets, flat, side="right")) - 1
        return CellId(band, flat - int(self._offsets[band]))

    def flat_index(self, cell: CellId) -> int:
        band = self._check_cell(cell)
        return band.offset + cell.column_index

    def cells(self) -> Iterator[CellId]:
        for b, band in enumerate(self.bands):
            for c in range(band.cell_count):
                yield CellId(b, c)

    # -- export -------------------------------------------------------------

    def export_csv(self, out: TextIO) -> int:
        """Write one `band,column,center_lat,center_lon,area_km2` row per cell."""
        out.write("band,column,center_lat,center_lon,area_km2\n")
        n = 0
        for cell in self.cells():
            lat, lon = self.cell_center(cell)
            area = self.cell_area_km2(cell)
            out.write(f"{cell.band_index},{cell.column_index},{lat!r},{lon!r},{area!r}\n")
            n += 1
        return n


def build_grid(config: GridConfig = GridConfig()) -> Grid:
    """Construct the grid for a config. Deterministic; pure function of config.

    total_cells = round(sphere_area / target_cell_area), so exact divisions
    are honoured exactly. Cells all share the area sphere_area / total_cells.
    """
    config.validate()
    sphere_area = 4.0 * math.pi * config.sphere_radius_km**2
    total = max(1, int(math.floor(sphere_area / config.target_cell_area_km2 + 0.5)))
    band_count = max(1, int(math.floor(math.sqrt(total / math.pi) + 0.5)))

    # largest-remainder apportionment of cells to bands; every band gets ≥ 1
    cum = [int(math.floor(b * total / band_count + 0.5)) for b in range(band_count + 1)]
    bands: list[Band] = []
    for b in range(band_count):
        count = cum[b + 1] - cum[b]
        if count < 1:  # unreachable for band_count ≤ total; keep the partition total
            raise ConfigError("band apportionment produced an empty band")
        sin_lo = -1.0 + 2.0 * cum[b] / total
        sin_hi = -1.0 + 2.0 * cum[b + 1] / total
        lat_lo = math.degrees(math.asin(max(-1.0, min(1.0, sin_lo))))
        lat_hi = math.degrees(math.asin(max(-1.0, min(1.0, sin_hi))))
        bands.append(
            Band(
                sin_lo=sin_lo,
                sin_hi=sin_hi,
                lat_lo=lat_lo,
                lat_hi=lat_hi,
                cell_count=count,
                offset=cum[b],
            )
        )

    grid = Grid(
        config=config,
        bands=tuple(bands),
        total_cells=total,
        _upper_edges=np.asarray([band.sin_hi for band in bands], dtype=float),
        _counts=np.asarray([band.cell_count for band in bands], dtype=np.int64),
        _offsets=np.asarray([band.offset for band in bands], dtype=np.int64),
    )
    return grid
