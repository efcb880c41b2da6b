/** Markup renderers: view models in, SVG/HTML strings out. No DOM access,
 * so every renderer runs under plain node for tests. */

import {
  MARKER_COLOR,
  NULL_BAR_COLOR,
  POPULATION_BAR_COLOR,
  SAMPLE_BAR_COLOR,
} from "./colors.js";
import type { BiasPanel, HistogramPanel, LegendRow, MapShape, SummaryStats } from "./viewmodel.js";

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export function renderHistogramSvg(
  panel: HistogramPanel,
  which: "sample" | "population",
): string {
  const color = which === "sample" ? SAMPLE_BAR_COLOR : POPULATION_BAR_COLOR;
  const bars = panel.bars
    .map(
      (b) =>
        `<rect x="${b.x}" y="${b.y}" width="${b.width}" height="${b.height}" ` +
        `fill="${color}"><title>${b.value}</title></rect>`,
    )
    .join("");
  return (
    `<svg viewBox="0 0 ${panel.width} ${panel.height}" class="histogram ${which}" ` +
    `xmlns="http://www.w3.org/2000/svg" preserveAspectRatio="none">${bars}</svg>`
  );
}

export function renderBiasSvg(panel: BiasPanel): string {
  const bars = panel.bars
    .map(
      (b) =>
        `<rect x="${b.x}" y="${b.y}" width="${b.width}" height="${b.height}" ` +
        `fill="${NULL_BAR_COLOR}"><title>${b.value}</title></rect>`,
    )
    .join("");
  const marker =
    `<line x1="${panel.markerX}" y1="0" x2="${panel.markerX}" y2="${panel.height}" ` +
    `stroke="${MARKER_COLOR}" stroke-width="1.5" class="marker-line"/>` +
    `<circle cx="${panel.markerX}" cy="${panel.height - 6}" r="5" fill="${MARKER_COLOR}" ` +
    `class="marker" data-indicator="${panel.markerValue}"/>`;
  return (
    `<svg viewBox="0 0 ${panel.width} ${panel.height}" class="histogram bias" ` +
    `xmlns="http://www.w3.org/2000/svg" preserveAspectRatio="none">${bars}${marker}</svg>`
  );
}

export function renderMapSvg(shapes: MapShape[], width: number, height: number): string {
  if (shapes.length === 0) {
    return `<p class="empty-state">No cells to draw: the analysis classified nothing.</p>`;
  }
  const paths = shapes
    .map(
      (s) =>
        `<path d="${s.path}" fill="${s.fill}" class="cell" data-key="${s.key}" ` +
        `data-value="${s.tooltip.value}" data-score="${s.tooltip.score}" ` +
        `data-class="${s.tooltip.cls}"/>`,
    )
    .join("");
  return (
    `<svg viewBox="0 0 ${width} ${height}" class="choropleth" ` +
    `xmlns="http://www.w3.org/2000/svg">${paths}</svg>`
  );
}

export function renderLegendHtml(rows: LegendRow[]): string {
  const body = rows
    .map(
      (r) =>
        `<tr class="legend-row" data-class="${r.cls}">` +
        `<td><span class="swatch" style="background:${r.color}"></span>${esc(r.label)}</td>` +
        `<td class="num" data-field="area_km2">${r.areaKm2}</td>` +
        `<td class="num" data-field="percent">${r.percent}</td>` +
        `<td class="num" data-field="cells">${r.cellCount}</td></tr>`,
    )
    .join("");
  return (
    `<table class="legend"><thead><tr><th>class</th><th>km²</th><th>%</th>` +
    `<th>cells</th></tr></thead><tbody>${body}</tbody></table>`
  );
}

export function renderSummaryHtml(stats: SummaryStats): string {
  const rows: [string, string][] = [
    ["indicator", stats.indicatorText],
    ["indicator kind", stats.indicatorKind],
    ["percentile rank", stats.percentileText],
    ["verdict", stats.verdictText],
    ["variational coverage", String(stats.variationalCoverage)],
    ["effective sample size", String(stats.effectiveSampleSize)],
    ["usable sites", String(stats.usableSiteCount)],
    ["off-extent sites", String(stats.offExtentSiteCount)],
    ["population cells", String(stats.populationCellCount)],
    ["replicates", String(stats.replicates)],
    ["seed", String(stats.seed)],
  ];
  const body = rows
    .map(([k, v]) => `<tr><th>${esc(k)}</th><td data-stat="${esc(k)}">${esc(v)}</td></tr>`)
    .join("");
  const cls = stats.biased ? "biased" : "unbiased";
  return `<table class="summary ${cls}">${body}</table>`;
}

export function renderTooltip(tooltip: { value: number; score: number; cls: string }): string {
  return `value ${tooltip.value} · score ${tooltip.score} · ${tooltip.cls}`;
}
