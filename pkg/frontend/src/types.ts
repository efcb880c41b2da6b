/** Wire types mirroring the service's JSON documents. */

export const SCHEMA_VERSION = 1;

export type CellClass = "very_under" | "under" | "well" | "over" | "very_over";

export type ExtentSpec =
  | { type: "global" }
  | { type: "mask"; variable_id: string; values: number[] }
  | { type: "bbox"; south: number; west: number; north: number; east: number };

export interface BinRow {
  index: number;
  lower: number | null;
  upper: number | null;
  category: number | null;
  p_sample: number;
  p_population: number;
  score: number;
}

export interface ClassArea {
  area_km2: number;
  percent: number;
  cell_count: number;
}

export interface NullSummary {
  sample_size: number;
  replicate_count: number;
  mean: number;
  deciles: number[];
  histogram: { edges: number[]; counts: number[] };
}

export interface BinningDoc {
  kind: "equal_width" | "log_width" | "categorical";
  bin_count: number;
  domain: [number, number] | null;
  categories: number[] | null;
}

export interface ResultDocument {
  schema_version: number;
  collection_id: string;
  variable_id: string;
  extent: ExtentSpec;
  indicator: number;
  indicator_kind: "intersection" | "bhattacharyya";
  percentile_rank: number;
  biased: boolean;
  variational_coverage: number;
  effective_sample_size: number;
  usable_site_count: number;
  off_extent_site_count: number;
  population_cell_count: number;
  extent_cell_count: number;
  coverage_gap_cell_count: number;
  replicates: number;
  seed: number;
  binning: BinningDoc;
  null: NullSummary;
  bins: BinRow[];
  classes: Record<CellClass, ClassArea>;
  total_area_km2: number;
}

export interface MapFeature {
  type: "Feature";
  geometry: { type: "Polygon"; coordinates: number[][][] };
  properties: {
    band: number;
    column: number;
    value: number;
    score: number;
    class: CellClass;
  };
}

export interface MapDocument {
  schema_version: number;
  type: "FeatureCollection";
  features: MapFeature[];
}

export interface AnalysisRequest {
  collection_id: string;
  variable_id: string;
  extent: ExtentSpec;
  binning?: { kind: string; bin_count: number };
  indicator_kind?: string;
  replicates?: number;
  effective_sample_size?: number | null;
  seed?: number | null;
  dedupe_cells?: boolean;
}

export interface AnalysisRecord {
  schema_version: number;
  analysis_id: string;
  status: "pending" | "running" | "done" | "failed";
  created_at: string;
  request: AnalysisRequest & { seed: number };
  error: string | null;
  result?: ResultDocument;
}

export interface VariableInfo {
  variable_id: string;
  kind: "continuous" | "categorical";
  units: string;
  cell_count: number;
}
