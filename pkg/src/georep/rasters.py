"""Gridded raster inputs and their reduction to per-cell values.

Rasters arrive as ASCII grids (6 header lines, then whitespace-separated
values, row 0 = northernmost). Internally nodata pixels are held as NaN and
the declared nodata sentinel is kept for round-tripping. Aggregation to grid
cells is by pixel-center containment: continuous variables take the mean of
the pixels in a cell, categorical ones the majority value (ties break to the
smallest category value).
"""

from __future__ import annotations

import gzip
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

from .catalog import VariableLayer
from .errors import ConfigError, DomainError, ParseError
from .grid import Grid

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")

#: rows per block when scanning large rasters, keeps peak memory bounded
_BLOCK_ROWS = 512


@dataclass(frozen=True)
class Raster:
    """A georeferenced pixel grid in geographic lat/lon coordinates.

    values is (nrows, ncols) float64, row 0 at the top (north); nodata is NaN.
    """

    ncols: int
    nrows: int
    xllcorner: float
    yllcorner: float
    cellsize: float
    nodata_value: float
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.nrows, self.ncols):
            raise DomainError(
                f"values shape {self.values.shape} does not match "
                f"nrows={self.nrows}, ncols={self.ncols}"
            )
        if not self.cellsize > 0:
            raise DomainError(f"cellsize must be > 0, got {self.cellsize}")
        east = self.xllcorner + self.ncols * self.cellsize
        north = self.yllcorner + self.nrows * self.cellsize
        eps = 1e-9
        if self.xllcorner < -180.0 - eps or east > 180.0 + eps:
            raise DomainError(f"raster x extent [{self.xllcorner}, {east}] outside [-180, 180]")
        if self.yllcorner < -90.0 - eps or north > 90.0 + eps:
            raise DomainError(f"raster y extent [{self.yllcorner}, {north}] outside [-90, 90]")

    def value(self, row: int, col: int) -> float | None:
        """Pixel value, or None for nodata. row 0 is the top (north) row."""
        v = self.values[row, col]
        return None if math.isnan(v) else float(v)

    @property
    def valid_mask(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def x_centers(self) -> np.ndarray:
        return self.xllcorner + (np.arange(self.ncols) + 0.5) * self.cellsize

    def y_centers(self) -> np.ndarray:
        """Pixel-center latitudes by row, row 0 first (north to south)."""
        return self.yllcorner + (self.nrows - np.arange(self.nrows) - 0.5) * self.cellsize

    def values_equal(self, other: "Raster") -> bool:
        return (
            self.ncols == other.ncols
            and self.nrows == other.nrows
            and np.array_equal(self.values, other.values, equal_nan=True)
        )


def parse_ascii_grid(source: str | TextIO) -> Raster:
    """Parse ASCII-grid text into a Raster.

    Expects 6 header lines (ncols, nrows, xllcorner, yllcorner, cellsize,
    NODATA_value, in that order, names case-insensitive) followed by exactly
    ncols·nrows whitespace-separated values. Tokens equal to the nodata
    sentinel are recorded as nodata. Raises ParseError with the offending
    line number.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    lines = source.read().splitlines()

    header: dict[str, float] = {}
    for i, key in enumerate(_HEADER_KEYS):
        if i >= len(lines):
            raise ParseError(f"missing header line for {key}", line=i + 1)
        parts = lines[i].split()
        if len(parts) != 2 or parts[0].lower() != key:
            raise ParseError(f"expected header '{key} <value>', got {lines[i]!r}", line=i + 1)
        try:
            header[key] = float(parts[1])
        except ValueError:
            raise ParseError(f"non-numeric header value {parts[1]!r} for {key}", line=i + 1)

    for key in ("ncols", "nrows"):
        if header[key] != int(header[key]) or int(header[key]) < 1:
            raise ParseError(f"{key} must be a positive integer, got {header[key]}", line=_HEADER_KEYS.index(key) + 1)
    ncols, nrows = int(header["ncols"]), int(header["nrows"])
    nodata = header["nodata_value"]

    expected = ncols * nrows
    flat = np.empty(expected, dtype=float)
    n = 0
    for line_no, line in enumerate(lines[6:], start=7):
        for token in line.split():
            if n >= expected:
                raise ParseError(f"expected {expected} values, got more", line=line_no)
            try:
                v = float(token)
            except ValueError:
                raise ParseError(f"non-numeric value token {token!r}", line=line_no)
            flat[n] = np.nan if v == nodata else v
            n += 1
    if n != expected:
        raise ParseError(f"expected {expected} values, got {n}", line=len(lines))

    return Raster(
        ncols=ncols,
        nrows=nrows,
        xllcorner=header["xllcorner"],
        yllcorner=header["yllcorner"],
        cellsize=header["cellsize"],
        nodata_value=nodata,
        values=flat.reshape(nrows, ncols),
    )


def serialize_ascii_grid(raster: Raster) -> str:
    """Render a Raster back to ASCII-grid text; parse(serialize(r)) == r."""
    out = io.StringIO()
    out.write(f"ncols {raster.ncols}\n")
    out.write(f"nrows {raster.nrows}\n")
    out.write(f"xllcorner {raster.xllcorner!r}\n")
    out.write(f"yllcorner {raster.yllcorner!r}\n")
    out.write(f"cellsize {raster.cellsize!r}\n")
    out.write(f"NODATA_value {raster.nodata_value!r}\n")
    for row in raster.values:
        tokens = [
            repr(raster.nodata_value) if math.isnan(v) else repr(float(v)) for v in row
        ]
        out.write(" ".join(tokens) + "\n")
    return out.getvalue()


def read_ascii_grid(path: str | Path) -> Raster:
    """Read an .asc file, transparently decompressing .gz."""
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rt") as fh:
            return parse_ascii_grid(fh)
    with open(path, "rt") as fh:
        return parse_ascii_grid(fh)


def resample_nearest(raster: Raster, new_cellsize: float) -> Raster:
    """Resample to a new cellsize over the same extent, nearest pixel center."""
    if not new_cellsize > 0:
        raise DomainError(f"new_cellsize must be > 0, got {new_cellsize}")
    out_ncols = max(1, int(math.floor(raster.ncols * raster.cellsize / new_cellsize + 0.5)))
    out_nrows = max(1, int(math.floor(raster.nrows * raster.cellsize / new_cellsize + 0.5)))

    x = raster.xllcorner + (np.arange(out_ncols) + 0.5) * new_cellsize
    y = raster.yllcorner + (out_nrows - np.arange(out_nrows) - 0.5) * new_cellsize
    src_col = np.clip(((x - raster.xllcorner) / raster.cellsize).astype(np.int64), 0, raster.ncols - 1)
    src_row_from_bottom = np.clip(
        ((y - raster.yllcorner) / raster.cellsize).astype(np.int64), 0, raster.nrows - 1
    )
    src_row = raster.nrows - 1 - src_row_from_bottom

    return Raster(
        ncols=out_ncols,
        nrows=out_nrows,
        xllcorner=raster.xllcorner,
        yllcorner=raster.yllcorner,
        cellsize=new_cellsize,
        nodata_value=raster.nodata_value,
        values=raster.values[np.ix_(src_row, src_col)],
    )


def focal_fill(raster: Raster, radius_pixels: int) -> Raster:
    """Fill nodata pixels with the mean of valid pixels in a square window.

    Window is (2·radius+1)² centered on the pixel, clipped at the edges. All
    fills are computed from the original raster simultaneously; valid pixels
    are never changed, and pixels with no valid neighbour stay nodata.
    """
    if radius_pixels < 1:
        raise DomainError(f"radius_pixels must be ≥ 1, got {radius_pixels}")
    valid = raster.valid_mask
    if valid.all():
        return raster

    vals = np.where(valid, raster.values, 0.0)
    # padded integral images for box sums
    s = np.zeros((raster.nrows + 1, raster.ncols + 1))
    c = np.zeros((raster.nrows + 1, raster.ncols + 1))
    np.cumsum(np.cumsum(vals, axis=0), axis=1, out=s[1:, 1:])
    np.cumsum(np.cumsum(valid.astype(float), axis=0), axis=1, out=c[1:, 1:])

    r = radius_pixels
    rows = np.arange(raster.nrows)
    cols = np.arange(raster.ncols)
    r0 = np.clip(rows - r, 0, raster.nrows)
    r1 = np.clip(rows + r + 1, 0, raster.nrows)
    c0 = np.clip(cols - r, 0, raster.ncols)
    c1 = np.clip(cols + r + 1, 0, raster.ncols)

    def box(m: np.ndarray) -> np.ndarray:
        return m[np.ix_(r1, c1)] - m[np.ix_(r0, c1)] - m[np.ix_(r1, c0)] + m[np.ix_(r0, c0)]

    window_sum = box(s)
    window_count = box(c)
    with np.errstate(invalid="ignore", divide="ignore"):
        window_mean = window_sum / window_count
    fill = (~valid) & (window_count > 0)
    out = raster.values.copy()
    out[fill] = window_mean[fill]

    return Raster(
        ncols=raster.ncols,
        nrows=raster.nrows,
        xllcorner=raster.xllcorner,
        yllcorner=raster.yllcorner,
        cellsize=raster.cellsize,
        nodata_value=raster.nodata_value,
        values=out,
    )


def zonal_aggregate(
    raster: Raster,
    grid: Grid,
    kind: str,
    variable_id: str = "",
    units: str = "",
    stat: str | None = None,
    provenance: str = "",
) -> VariableLayer:
    """Reduce raster pixels to one value per grid cell.

    kind selects the layer type and its default statistic: continuous → mean,
    categorical → majority. stat may override (mean|majority), except
    categorical layers require majority. Pixels belong to the cell containing
    their center. Cells with no valid pixel are absent from the layer.
    """
    if kind not in ("continuous", "categorical"):
        raise ConfigError(f"kind must be 'continuous' or 'categorical', got {kind!r}")
    if stat is None:
        stat = "mean" if kind == "continuous" else "majority"
    if stat not in ("mean", "majority"):
        raise ConfigError(f"stat must be 'mean' or 'majority', got {stat!r}")
    if kind == "categorical" and stat == "mean":
        raise ConfigError("categorical layers require the majority statistic")
    if not raster.valid_mask.any():
        raise DomainError("raster has no valid pixels to aggregate")

    x = raster.x_centers()
    # longitude domain is [-180, 180): a global raster's east column centers stay inside,
    # but guard against degenerate georeferencing
    x = np.where(x >= 180.0, x - 360.0, x)
    y_all = raster.y_centers()

    sums: np.ndarray | None = None
    counts: np.ndarray | None = None
    maj_ids: list[np.ndarray] = []
    maj_vals: list[np.ndarray] = []

    if stat == "mean":
        sums = np.zeros(grid.total_cells)
        counts = np.zeros(grid.total_cells, dtype=np.int64)

    for start in range(0, raster.nrows, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, raster.nrows)
        block = raster.values[start:stop]
        valid = ~np.isnan(block)
        if not valid.any():
            continue
        y = y_all[start:stop]
        lat2d = np.broadcast_to(y[:, None], block.shape)
        lon2d = np.broadcast_to(x[None, :], block.shape)
        flat = grid.points_to_flat(lat2d[valid], lon2d[valid])
        vals = block[valid]
        if stat == "mean":
            sums += np.bincount(flat, weights=vals, minlength=grid.total_cells)
            counts += np.bincount(flat, minlength=grid.total_cells)
        else:
            maj_ids.append(flat)
            maj_vals.append(vals)

    values: dict = {}
    if stat == "mean":
        occupied = np.nonzero(counts)[0]
        for f in occupied:
            values[grid.flat_to_cell(int(f))] = float(sums[f] / counts[f])
    else:
        ids = np.concatenate(maj_ids)
        vals = np.concatenate(maj_vals)
        order = np.lexsort((vals, ids))
        ids, vals = ids[order], vals[order]
        # run-length encode (cell, value) pairs
        new_run = np.empty(len(ids), dtype=bool)
        new_run[0] = True
        new_run[1:] = (ids[1:] != ids[:-1]) | (vals[1:] != vals[:-1])
        starts = np.nonzero(new_run)[0]
        run_cells = ids[starts]
        run_vals = vals[starts]
        run_counts = np.diff(np.append(starts, len(ids)))
        # majority with ties to the smallest value: within a cell runs are
        # value-ascending, so the first maximal count wins
        pick = np.lexsort((run_vals, -run_counts, run_cells))
        seen: set[int] = set()
        for i in pick:
            f = int(run_cells[i])
            if f not in seen:
                seen.add(f)
                values[grid.flat_to_cell(f)] = float(run_vals[i])

    categories = frozenset(values.values()) if kind == "categorical" else None
    return VariableLayer(
        variable_id=variable_id,
        kind=kind,
        units=units,
        values=values,
        provenance=provenance,
        categories=categories,
    )
