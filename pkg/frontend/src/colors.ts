/** Fixed five-class diverging scheme: dark red → red → green → blue → dark blue. */

import type { CellClass } from "./types.js";

export const CLASS_ORDER: CellClass[] = [
  "very_under",
  "under",
  "well",
  "over",
  "very_over",
];

export const CLASS_COLORS: Record<CellClass, string> = {
  very_under: "#7f0000",
  under: "#e34a33",
  well: "#31a354",
  over: "#6baed6",
  very_over: "#08306b",
};

export const CLASS_LABELS: Record<CellClass, string> = {
  very_under: "very under-represented",
  under: "under-represented",
  well: "well represented",
  over: "over-represented",
  very_over: "very over-represented",
};

export const NULL_BAR_COLOR = "#9e9e9e";
export const MARKER_COLOR = "#d32f2f";
export const SAMPLE_BAR_COLOR = "#c0504d";
export const POPULATION_BAR_COLOR = "#4f81bd";
