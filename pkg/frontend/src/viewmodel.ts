/** Pure view-model builders.
 *
 * Every number that reaches the screen is copied verbatim from the fetched
 * result/map documents; nothing is recomputed client-side. Geometry (bar and
 * polygon coordinates) is plain scaling of those server values into a
 * viewport.
 */

import { CLASS_COLORS, CLASS_LABELS, CLASS_ORDER } from "./colors.js";
import type { CellClass, MapDocument, ResultDocument } from "./types.js";
import { SCHEMA_VERSION } from "./types.js";

export class SchemaMismatchError extends Error {
  constructor(got: number) {
    super(`payload schema_version ${got} does not match client ${SCHEMA_VERSION}`);
  }
}

export function checkSchema(doc: { schema_version: number }): void {
  if (doc.schema_version !== SCHEMA_VERSION) {
    throw new SchemaMismatchError(doc.schema_version);
  }
}

// -- summary -----------------------------------------------------------------

export interface SummaryStats {
  indicator: number;
  indicatorText: string;
  indicatorKind: string;
  percentileRank: number;
  percentileText: string;
  biased: boolean;
  verdictText: string;
  variationalCoverage: number;
  effectiveSampleSize: number;
  usableSiteCount: number;
  offExtentSiteCount: number;
  populationCellCount: number;
  replicates: number;
  seed: number;
}

export function summaryStats(result: ResultDocument): SummaryStats {
  checkSchema(result);
  return {
    indicator: result.indicator,
    indicatorText: String(result.indicator),
    indicatorKind: result.indicator_kind,
    percentileRank: result.percentile_rank,
    percentileText: String(result.percentile_rank),
    biased: result.biased,
    verdictText: result.biased ? "biased" : "not biased",
    variationalCoverage: result.variational_coverage,
    effectiveSampleSize: result.effective_sample_size,
    usableSiteCount: result.usable_site_count,
    offExtentSiteCount: result.off_extent_site_count,
    populationCellCount: result.population_cell_count,
    replicates: result.replicates,
    seed: result.seed,
  };
}

// -- legend --------------------------------------------------------------------

export interface LegendRow {
  cls: CellClass;
  label: string;
  color: string;
  areaKm2: number;
  percent: number;
  cellCount: number;
}

export function legendRows(result: ResultDocument): LegendRow[] {
  checkSchema(result);
  return CLASS_ORDER.map((cls) => ({
    cls,
    label: CLASS_LABELS[cls],
    color: CLASS_COLORS[cls],
    areaKm2: result.classes[cls].area_km2,
    percent: result.classes[cls].percent,
    cellCount: result.classes[cls].cell_count,
  }));
}

// -- histogram panels -----------------------------------------------------------

export interface Bar {
  x: number;
  y: number;
  width: number;
  height: number;
  /** server-side value this bar renders (proportion or replicate count) */
  value: number;
}

export interface HistogramPanel {
  bars: Bar[];
  width: number;
  height: number;
  maxValue: number;
}

const PANEL_W = 360;
const PANEL_H = 160;

export function histogramPanel(
  result: ResultDocument,
  which: "p_sample" | "p_population",
  width = PANEL_W,
  height = PANEL_H,
): HistogramPanel {
  checkSchema(result);
  const values = result.bins.map((b) => b[which]);
  const max = Math.max(...values, 1e-12);
  const slot = width / values.length;
  const bars = values.map((v, i) => ({
    x: i * slot,
    y: height - (v / max) * height,
    width: slot * 0.92,
    height: (v / max) * height,
    value: v,
  }));
  return { bars, width, height, maxValue: max };
}

// -- bias panel -------------------------------------------------------------------

export interface BiasPanel {
  bars: Bar[];
  markerX: number;
  markerValue: number;
  totalReplicates: number;
  width: number;
  height: number;
}

export function biasPanel(
  result: ResultDocument,
  width = PANEL_W,
  height = PANEL_H,
): BiasPanel {
  checkSchema(result);
  const { edges, counts } = result.null.histogram;
  const lo = edges[0];
  const hi = edges[edges.length - 1];
  const span = hi - lo || 1;
  const maxCount = Math.max(...counts, 1);
  const scaleX = (v: number) => ((v - lo) / span) * width;
  const bars = counts.map((c, i) => {
    const x0 = scaleX(edges[i]);
    const x1 = scaleX(edges[i + 1]);
    return {
      x: x0,
      y: height - (c / maxCount) * height,
      width: Math.max(x1 - x0 - 1, 0.5),
      height: (c / maxCount) * height,
      value: c,
    };
  });
  return {
    bars,
    markerX: scaleX(result.indicator),
    markerValue: result.indicator,
    totalReplicates: counts.reduce((a, b) => a + b, 0),
    width,
    height,
  };
}

// -- map ------------------------------------------------------------------------

export interface MapShape {
  path: string;
  fill: string;
  key: string;
  tooltip: { value: number; score: number; cls: CellClass };
}

export const MAP_W = 720;
export const MAP_H = 360;

export function project(
  lat: number,
  lon: number,
  width = MAP_W,
  height = MAP_H,
): [number, number] {
  return [((lon + 180) / 360) * width, ((90 - lat) / 180) * height];
}

export function mapShapes(
  doc: MapDocument,
  width = MAP_W,
  height = MAP_H,
): MapShape[] {
  checkSchema(doc);
  return doc.features.map((f) => {
    const ring = f.geometry.coordinates[0];
    const points = ring.map(([lon, lat]) => project(lat, lon, width, height));
    const path =
      points
        .map(([x, y], i) => `${i === 0 ? "M" : "L"}${round2(x)},${round2(y)}`)
        .join(" ") + " Z";
    return {
      path,
      fill: CLASS_COLORS[f.properties.class],
      key: `${f.properties.band}:${f.properties.column}`,
      tooltip: {
        value: f.properties.value,
        score: f.properties.score,
        cls: f.properties.class,
      },
    };
  });
}

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}

export function isEmptyMap(doc: MapDocument): boolean {
  return doc.features.length === 0;
}
