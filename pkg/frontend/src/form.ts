/** Analysis form state and its mapping to the request body.
 *
 * Validation mirrors the request invariants server-side: referenced ids must
 * be set, replicate count ≥ 1, mask extents need at least one value, bbox
 * bounds must be ordered.
 */

import type { AnalysisRequest, ExtentSpec } from "./types.js";

export interface FormState {
  collectionId: string;
  variableId: string;
  extentType: "global" | "mask" | "bbox";
  maskVariableId: string;
  maskValues: number[];
  bbox: { south: number; west: number; north: number; east: number };
  binningKind: "equal_width" | "log_width" | "categorical";
  binCount: number;
  indicatorKind: "intersection" | "bhattacharyya";
  replicates: number;
  effectiveSampleSize: number | null;
  seed: number | null;
  dedupeCells: boolean;
}

export function defaultForm(): FormState {
  return {
    collectionId: "",
    variableId: "",
    extentType: "global",
    maskVariableId: "",
    maskValues: [],
    bbox: { south: -90, west: -180, north: 90, east: 180 },
    binningKind: "equal_width",
    binCount: 20,
    indicatorKind: "intersection",
    replicates: 1000,
    effectiveSampleSize: null,
    seed: null,
    dedupeCells: false,
  };
}

export function validateForm(form: FormState): string[] {
  const problems: string[] = [];
  if (!form.collectionId) problems.push("upload or pick a collection first");
  if (!form.variableId) problems.push("pick a variable");
  if (form.replicates < 1) problems.push("replicates must be ≥ 1");
  if (form.binningKind !== "categorical" && form.binCount < 2) {
    problems.push("bin count must be ≥ 2");
  }
  if (form.effectiveSampleSize !== null && form.effectiveSampleSize < 1) {
    problems.push("effective sample size must be ≥ 1");
  }
  if (form.extentType === "mask") {
    if (!form.maskVariableId) problems.push("pick a mask variable");
    if (form.maskValues.length === 0) problems.push("pick at least one mask value");
  }
  if (form.extentType === "bbox") {
    const { south, west, north, east } = form.bbox;
    if (!(south < north)) problems.push("bbox south must be below north");
    if (!(west < east)) problems.push("bbox west must be below east");
    if (south < -90 || north > 90) problems.push("bbox latitudes out of range");
    if (west < -180 || east > 180) problems.push("bbox longitudes out of range");
  }
  return problems;
}

export function extentSpec(form: FormState): ExtentSpec {
  if (form.extentType === "mask") {
    return { type: "mask", variable_id: form.maskVariableId, values: form.maskValues };
  }
  if (form.extentType === "bbox") {
    return { type: "bbox", ...form.bbox };
  }
  return { type: "global" };
}

export function toRequest(form: FormState): AnalysisRequest {
  const problems = validateForm(form);
  if (problems.length > 0) {
    throw new Error(problems.join("; "));
  }
  return {
    collection_id: form.collectionId,
    variable_id: form.variableId,
    extent: extentSpec(form),
    binning: { kind: form.binningKind, bin_count: form.binCount },
    indicator_kind: form.indicatorKind,
    replicates: form.replicates,
    effective_sample_size: form.effectiveSampleSize,
    seed: form.seed,
    dedupe_cells: form.dedupeCells,
  };
}
