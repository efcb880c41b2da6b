"""Core statistics: histograms, similarity indicators, Monte Carlo null
distributions, representativeness verdicts, per-bin representedness scores,
per-cell classes, area accounting, and undersampled-cell suggestions.

The pipeline: population values are the variable's values over the extent's
cells; the sample values are the variable at each collection site's cell.
Both are histogrammed on one shared binning derived from the population.
A similarity indicator in [0, 1] compares the two; a null distribution of
the indicator over random same-size samples of the extent locates the
collection against chance; per-bin signed scores in [-1, 1] say which value
ranges the collection over- or under-represents, projected back onto cells.

All functions are pure. Null replicates derive their randomness from
(seed, replicate index) via numpy SeedSequence spawning, so results are
reproducible regardless of execution order or parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .catalog import VariableLayer
from .errors import AnalysisError, ContractError, DomainError
from .grid import CellId, Grid
from .sites import Extent, MappedCollection

INDICATOR_KINDS = ("intersection", "bhattacharyya")
BINNING_KINDS = ("equal_width", "log_width", "categorical")

#: class labels from most under- to most over-represented
CLASSES = ("very_under", "under", "well", "over", "very_over")

DEFAULT_BIN_COUNT = 20
DEFAULT_REPLICATES = 1000

#: percentile of the null distribution below which a collection is biased
BIAS_PERCENTILE = 25.0


@dataclass(frozen=True)
class BinningSpec:
    """User-facing binning request; the domain comes from population values."""

    kind: str = "equal_width"
    bin_count: int = DEFAULT_BIN_COUNT

    def __post_init__(self):
        if self.kind not in BINNING_KINDS:
            raise DomainError(f"binning kind must be one of {BINNING_KINDS}, got {self.kind!r}")
        if self.kind != "categorical" and self.bin_count < 2:
            raise DomainError(f"bin_count must be ≥ 2, got {self.bin_count}")


@dataclass(frozen=True)
class Binning:
    """Resolved discretization: numeric bin edges or the category list.

    edges has bin_count+1 entries for numeric kinds; categorical binnings
    carry the sorted category values instead and one bin per category.
    Values on an interior edge fall into the higher bin; the domain maximum
    falls into the last bin; values outside the domain are clamped.
    """

    kind: str
    bin_count: int
    edges: tuple[float, ...] = ()
    categories: tuple[float, ...] = ()
    shift: float = 0.0  # added to values before log-width edges were placed

    @classmethod
    def from_values(cls, values: np.ndarray, spec: BinningSpec) -> "Binning":
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            raise AnalysisError("cannot derive a binning from no values")
        if spec.kind == "categorical":
            cats = tuple(sorted(set(float(v) for v in values)))
            return cls(kind="categorical", bin_count=len(cats), categories=cats)
        lo = float(values.min())
        hi = float(values.max())
        if spec.kind == "equal_width":
            edges = np.linspace(lo, hi, spec.bin_count + 1)
            return cls(kind=spec.kind, bin_count=spec.bin_count, edges=tuple(float(e) for e in edges))
        # log_width: shift so the domain is positive, then geometric edges
        shift = 0.0 if lo > 0 else 1.0 - lo
        if hi + shift == lo + shift:
            edges = np.full(spec.bin_count + 1, lo)
        else:
            edges = np.geomspace(lo + shift, hi + shift, spec.bin_count + 1) - shift
            edges[0], edges[-1] = lo, hi  # pin the domain against float drift
        return cls(kind=spec.kind, bin_count=spec.bin_count,
                   edges=tuple(float(e) for e in edges), shift=shift)

    @property
    def size(self) -> int:
        return self.bin_count if self.kind != "categorical" else len(self.categories)

    @cached_property
    def _edges_array(self) -> np.ndarray:
        return np.asarray(self.edges if self.kind != "categorical" else self.categories)

    @property
    def domain(self) -> tuple[float, float]:
        if self.kind == "categorical":
            return self.categories[0], self.categories[-1]
        return self.edges[0], self.edges[-1]

    def assign(self, values: np.ndarray) -> np.ndarray:
        """Vectorised value → bin index."""
        values = np.asarray(values, dtype=float)
        if self.kind == "categorical":
            cats = self._edges_array
            idx = np.searchsorted(cats, values)
            idx = np.clip(idx, 0, len(cats) - 1)
            if not np.array_equal(cats[idx], values):
                bad = values[cats[idx] != values][0]
                raise DomainError(f"value {bad} is not one of the categories")
            return idx
        idx = np.searchsorted(self._edges_array, values, side="right") - 1
        return np.clip(idx, 0, self.bin_count - 1)

    def bin_label(self, i: int) -> str:
        if self.kind == "categorical":
            return repr(self.categories[i])
        return f"[{self.edges[i]!r}, {self.edges[i + 1]!r})"


@dataclass(frozen=True, eq=False)
class Histogram:
    """Normalized frequency distribution on a Binning."""

    binning: Binning
    proportions: np.ndarray
    support_count: int  # number of observations binned

    def __post_init__(self):
        object.__setattr__(self, "proportions", np.asarray(self.proportions, dtype=float))
        if len(self.proportions) != self.binning.size:
            raise ContractError(
                f"histogram has {len(self.proportions)} bins, binning has {self.binning.size}"
            )


def build_histogram(values: Sequence[float] | np.ndarray, binning: Binning) -> Histogram:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise AnalysisError("cannot histogram an empty value set")
    idx = binning.assign(values)
    counts = np.bincount(idx, minlength=binning.size)
    return Histogram(binning=binning, proportions=counts / values.size, support_count=int(values.size))


def _require_shared_binning(p: Histogram, q: Histogram) -> None:
    if p.binning != q.binning:
        raise ContractError("histograms do not share a binning")


def indicator(p: Histogram, q: Histogram, kind: str = "intersection") -> float:
    """Similarity of two distributions in [0, 1]; 1 iff identical on the binning.

    intersection: Σ min(pᵢ, qᵢ)  (equals 1 − total variation distance)
    bhattacharyya: Σ √(pᵢ·qᵢ)
    """
    _require_shared_binning(p, q)
    if kind not in INDICATOR_KINDS:
        raise DomainError(f"indicator kind must be one of {INDICATOR_KINDS}, got {kind!r}")
    if kind == "intersection":
        v = float(np.minimum(p.proportions, q.proportions).sum())
    else:
        v = float(np.sqrt(p.proportions * q.proportions).sum())
    return min(1.0, max(0.0, v))


def variational_coverage(sample_hist: Histogram, population_hist: Histogram) -> float:
    """Population mass inside the sample's support: Σ qᵢ over bins with pᵢ > 0."""
    _require_shared_binning(sample_hist, population_hist)
    mask = sample_hist.proportions > 0
    return min(1.0, max(0.0, float(population_hist.proportions[mask].sum())))


def _indicator_raw(p: np.ndarray, q: np.ndarray, kind: str) -> float:
    if kind == "intersection":
        return float(np.minimum(p, q).sum())
    return float(np.sqrt(p * q).sum())


# -- population / sample extraction -----------------------------------------


def population_cells_values(extent: Extent, layer: VariableLayer) -> tuple[list[CellId], np.ndarray]:
    """Extent cells that carry layer data, sorted, with their values."""
    if extent.is_global:
        cells = sorted(layer.values)
    else:
        cells = sorted(c for c in layer.values if c in extent)
    if not cells:
        raise AnalysisError("extent and variable layer share no cells with data")
    values = np.asarray([layer.values[c] for c in cells], dtype=float)
    return cells, values


def sample_values(
    mapped: MappedCollection, layer: VariableLayer, extent: Extent
) -> tuple[np.ndarray, int]:
    """Layer values at each usable assignment, plus the dropped-site count.

    A site is usable when its cell is inside the extent and carries data;
    everything else (off-extent or data-less cell) is dropped and counted.
    """
    vals: list[float] = []
    dropped = 0
    for _, cell in mapped.cell_assignments:
        v = layer.values.get(cell)
        if v is None or cell not in extent:
            dropped += 1
            continue
        vals.append(v)
    return np.asarray(vals, dtype=float), dropped


def resolve_binning(
    binning: Binning | BinningSpec, population_values: np.ndarray
) -> Binning:
    if isinstance(binning, BinningSpec):
        return Binning.from_values(population_values, binning)
    return binning


# -- null distribution -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NullDistribution:
    """Indicator values of m random same-size samples, sorted ascending."""

    sample_size: int
    replicate_count: int
    values: np.ndarray
    seed: int

    def percentile_rank(self, x: float) -> float:
        """Percentage of replicates strictly below x, with midpoint tie rule."""
        below = int(np.searchsorted(self.values, x, side="left"))
        ties = int(np.searchsorted(self.values, x, side="right")) - below
        return 100.0 * (below + 0.5 * ties) / len(self.values)

    def deciles(self) -> list[float]:
        return [float(v) for v in np.percentile(self.values, np.arange(0, 101, 10))]

    @property
    def mean(self) -> float:
        return float(self.values.mean())


def null_distribution(
    extent: Extent,
    layer: VariableLayer,
    binning: Binning | BinningSpec,
    n: int,
    m: int,
    seed: int,
    kind: str = "intersection",
    with_replacement: bool = False,
) -> NullDistribution:
    """Indicator distribution of m uniform random samples of n extent cells.

    Sampling is without replacement by default. Each replicate's randomness
    derives from (seed, replicate index), so the result is reproducible and
    independent of evaluation order.
    """
    if n < 1:
        raise AnalysisError(f"sample size must be ≥ 1, got {n}")
    if m < 1:
        raise AnalysisError(f"replicate count must be ≥ 1, got {m}")
    _, pop_values = population_cells_values(extent, layer)
    big_n = len(pop_values)
    if not with_replacement and n > big_n:
        raise AnalysisError(
            f"sample size {n} exceeds the {big_n} extent cells with data "
            "(sampling is without replacement)"
        )
    binning = resolve_binning(binning, pop_values)
    pop_hist = build_histogram(pop_values, binning)
    q = pop_hist.proportions
    out = np.empty(m, dtype=float)

    if not with_replacement and n == big_n:
        # every draw is the whole population; replicates are all identical
        out[:] = _indicator_raw(q, q, kind)
    else:
        bin_idx = binning.assign(pop_values)
        nbins = binning.size
        children = np.random.SeedSequence(seed).spawn(m)
        for i, child in enumerate(children):
            rng = np.random.default_rng(child)
            take = rng.choice(big_n, size=n, replace=with_replacement)
            p = np.bincount(bin_idx[take], minlength=nbins) / n
            out[i] = _indicator_raw(p, q, kind)
    np.clip(out, 0.0, 1.0, out=out)
    out.sort()
    return NullDistribution(sample_size=n, replicate_count=m, values=out, seed=seed)


# -- representativeness -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RepresentativenessResult:
    indicator: float
    indicator_kind: str
    null: NullDistribution
    percentile_rank: float
    biased: bool
    variational_coverage: float
    off_extent_site_count: int
    sample_histogram: Histogram
    population_histogram: Histogram
    usable_site_count: int
    population_cell_count: int
    seed: int


def representativeness(
    mapped: MappedCollection,
    layer: VariableLayer,
    extent: Extent,
    binning: Binning | BinningSpec = BinningSpec(),
    kind: str = "intersection",
    m: int = DEFAULT_REPLICATES,
    seed: int | None = None,
    with_replacement: bool = False,
) -> RepresentativenessResult:
    """Compare the collection's value distribution against the extent's.

    The collection is biased when its indicator falls below the null
    distribution's 25th percentile (the central-50%-of-chance rule applied
    one-sidedly: indicators better than chance are not bias).
    """
    if kind not in INDICATOR_KINDS:
        raise DomainError(f"indicator kind must be one of {INDICATOR_KINDS}, got {kind!r}")
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**32))
    _, pop_values = population_cells_values(extent, layer)
    binning = resolve_binning(binning, pop_values)
    vals, dropped = sample_values(mapped, layer, extent)
    if vals.size == 0:
        raise AnalysisError("no collection site falls inside the extent with data")

    population_hist = build_histogram(pop_values, binning)
    sample_hist = build_histogram(vals, binning)
    ind = indicator(sample_hist, population_hist, kind)
    null = null_distribution(
        extent, layer, binning, n=mapped.effective_sample_size, m=m, seed=seed,
        kind=kind, with_replacement=with_replacement,
    )
    rank = null.percentile_rank(ind)
    return RepresentativenessResult(
        indicator=ind,
        indicator_kind=kind,
        null=null,
        percentile_rank=rank,
        biased=rank < BIAS_PERCENTILE,
        variational_coverage=variational_coverage(sample_hist, population_hist),
        off_extent_site_count=dropped,
        sample_histogram=sample_hist,
        population_histogram=population_hist,
        usable_site_count=int(vals.size),
        population_cell_count=population_hist.support_count,
        seed=seed,
    )


# -- representedness ----------------------------------------------------------


@dataclass(frozen=True)
class ClassThresholds:
    """Score cutoffs for the five classes; |r| < well is well-represented."""

    well: float = 0.1
    extreme: float = 0.5

    def classify(self, r: float) -> str:
        if r <= -self.extreme:
            return "very_under"
        if r <= -self.well:
            return "under"
        if r < self.well:
            return "well"
        if r < self.extreme:
            return "over"
        return "very_over"


@dataclass(frozen=True, eq=False)
class RepresentednessMap:
    bin_scores: np.ndarray
    scores: dict[CellId, float]
    classes: dict[CellId, str]
    thresholds: ClassThresholds
    binning: Binning


def bin_scores(sample_hist: Histogram, population_hist: Histogram) -> np.ndarray:
    """Per-bin signed score (pₛ − pₚ) / max(pₛ, pₚ); 0 when both are empty.

    −1 means a populated bin the sample never touches; +1 a sample bin with
    no population mass (impossible when the sample is drawn from the
    population, kept for symmetry).
    """
    _require_shared_binning(sample_hist, population_hist)
    p = sample_hist.proportions
    q = population_hist.proportions
    denom = np.maximum(p, q)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(denom > 0, (p - q) / np.where(denom > 0, denom, 1.0), 0.0)
    return np.clip(r, -1.0, 1.0)


def representedness(
    mapped: MappedCollection,
    layer: VariableLayer,
    extent: Extent,
    binning: Binning | BinningSpec = BinningSpec(),
    thresholds: ClassThresholds = ClassThresholds(),
) -> RepresentednessMap:
    """Score every extent cell with data by how its value's bin is represented."""
    pop_cells, pop_values = population_cells_values(extent, layer)
    binning = resolve_binning(binning, pop_values)
    vals, _ = sample_values(mapped, layer, extent)
    if vals.size == 0:
        raise AnalysisError("no collection site falls inside the extent with data")
    sample_hist = build_histogram(vals, binning)
    population_hist = build_histogram(pop_values, binning)
    r = bin_scores(sample_hist, population_hist)

    cell_bins = binning.assign(pop_values)
    scores = {cell: float(r[b]) for cell, b in zip(pop_cells, cell_bins)}
    classes = {cell: thresholds.classify(s) for cell, s in scores.items()}
    return RepresentednessMap(
        bin_scores=r, scores=scores, classes=classes, thresholds=thresholds, binning=binning
    )


@dataclass(frozen=True)
class ClassArea:
    area_km2: float
    percent: float
    cell_count: int


@dataclass(frozen=True)
class AreaSummary:
    classes: dict[str, ClassArea]
    total_area_km2: float


def area_summary(rmap: RepresentednessMap, extent: Extent, grid: Grid) -> AreaSummary:
    """Per-class area in km² and as a percentage of the classified extent."""
    sums = {name: 0.0 for name in CLASSES}
    counts = {name: 0 for name in CLASSES}
    for cell, cls in rmap.classes.items():
        sums[cls] += grid.cell_area_km2(cell)
        counts[cls] += 1
    total = math.fsum(sums.values())
    classes = {
        name: ClassArea(
            area_km2=sums[name],
            percent=(100.0 * sums[name] / total) if total > 0 else 0.0,
            cell_count=counts[name],
        )
        for name in CLASSES
    }
    return AreaSummary(classes=classes, total_area_km2=total)


def suggest_undersampled(
    rmap: RepresentednessMap, extent: Extent, grid: Grid, k: int
) -> list[CellId]:
    """Up to k extent cells ranked most under-represented first.

    Ascending bin score, ties broken by cell id order.
    """
    if k < 1:
        raise DomainError(f"k must be ≥ 1, got {k}")
    ranked = sorted(
        (cell for cell in rmap.scores if cell in extent),
        key=lambda cell: (rmap.scores[cell], cell),
    )
    return ranked[:k]
