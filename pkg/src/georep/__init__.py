"""georep: audit how representative a set of georeferenced sites is of a
spatial extent with respect to gridded global variables, and map which areas
the set over-, under-, or well-represents."""

from .grid import CellId, GridConfig, Grid, build_grid
from .rasters import Raster, parse_ascii_grid, resample_nearest, focal_fill, zonal_aggregate
from .catalog import Catalog, VariableLayer
from .sites import (
    Site,
    Collection,
    MappedCollection,
    Extent,
    MaskSpec,
    BboxSpec,
    parse_sites_csv,
    map_collection,
    build_extent,
)
from .analysis import (
    Binning,
    BinningSpec,
    Histogram,
    NullDistribution,
    RepresentativenessResult,
    RepresentednessMap,
    AreaSummary,
    build_histogram,
    indicator,
    variational_coverage,
    null_distribution,
    representativeness,
    representedness,
    area_summary,
    suggest_undersampled,
)

__version__ = "0.1.0"

__all__ = [
    "CellId",
    "GridConfig",
    "Grid",
    "build_grid",
    "Raster",
    "parse_ascii_grid",
    "resample_nearest",
    "focal_fill",
    "zonal_aggregate",
    "Catalog",
    "VariableLayer",
    "Site",
    "Collection",
    "MappedCollection",
    "Extent",
    "MaskSpec",
    "BboxSpec",
    "parse_sites_csv",
    "map_collection",
    "build_extent",
    "Binning",
    "BinningSpec",
    "Histogram",
    "NullDistribution",
    "RepresentativenessResult",
    "RepresentednessMap",
    "AreaSummary",
    "build_histogram",
    "indicator",
    "variational_coverage",
    "null_distribution",
    "representativeness",
    "representedness",
    "area_summary",
    "suggest_undersampled",
]
