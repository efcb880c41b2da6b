/** Browser wiring: form handling, the run/poll loop, and panel updates.
 *
 * All statistics come from the service documents; this file only moves them
 * into the DOM via the pure view-model and renderer modules.
 */

import { ApiClient, ServiceError, runAndPoll } from "./api.js";
import { defaultForm, toRequest, validateForm, type FormState } from "./form.js";
import {
  renderBiasSvg,
  renderHistogramSvg,
  renderLegendHtml,
  renderMapSvg,
  renderSummaryHtml,
  renderTooltip,
} from "./render.js";
import type { AnalysisRecord, VariableInfo } from "./types.js";
import {
  MAP_H,
  MAP_W,
  biasPanel,
  histogramPanel,
  legendRows,
  mapShapes,
  summaryStats,
} from "./viewmodel.js";

const client = new ApiClient("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showError(message: string): void {
  const box = el<HTMLDivElement>("error-box");
  box.textContent = message;
  box.hidden = message === "";
}

function setStatus(text: string): void {
  el<HTMLSpanElement>("status").textContent = text;
}

function readForm(): FormState {
  const form = defaultForm();
  form.collectionId = el<HTMLInputElement>("collection-id").value.trim();
  form.variableId = el<HTMLSelectElement>("variable").value;
  form.extentType = el<HTMLSelectElement>("extent-type").value as FormState["extentType"];
  form.maskVariableId = el<HTMLSelectElement>("mask-variable").value;
  form.maskValues = el<HTMLInputElement>("mask-values")
    .value.split(",")
    .map((s) => s.trim())
    .filter((s) => s !== "")
    .map(Number)
    .filter((v) => !Number.isNaN(v));
  form.bbox = {
    south: Number(el<HTMLInputElement>("bbox-south").value),
    west: Number(el<HTMLInputElement>("bbox-west").value),
    north: Number(el<HTMLInputElement>("bbox-north").value),
    east: Number(el<HTMLInputElement>("bbox-east").value),
  };
  form.binningKind = el<HTMLSelectElement>("binning-kind").value as FormState["binningKind"];
  form.binCount = Number(el<HTMLInputElement>("bin-count").value);
  form.indicatorKind = el<HTMLSelectElement>("indicator-kind")
    .value as FormState["indicatorKind"];
  form.replicates = Number(el<HTMLInputElement>("replicates").value);
  const ess = el<HTMLInputElement>("effective-n").value.trim();
  form.effectiveSampleSize = ess === "" ? null : Number(ess);
  const seed = el<HTMLInputElement>("seed").value.trim();
  form.seed = seed === "" ? null : Number(seed);
  form.dedupeCells = el<HTMLInputElement>("dedupe").checked;
  return form;
}

async function refreshVariables(): Promise<VariableInfo[]> {
  const variables = await client.listVariables();
  const fill = (select: HTMLSelectElement, infos: VariableInfo[]) => {
    const current = select.value;
    select.innerHTML = infos
      .map((v) => `<option value="${v.variable_id}">${v.variable_id} (${v.kind})</option>`)
      .join("");
    if (infos.some((v) => v.variable_id === current)) select.value = current;
  };
  fill(el<HTMLSelectElement>("variable"), variables);
  fill(
    el<HTMLSelectElement>("mask-variable"),
    variables.filter((v) => v.kind === "categorical"),
  );
  return variables;
}

function renderRecord(record: AnalysisRecord): void {
  const result = record.result;
  if (!result) throw new Error("record has no result");
  const stats = summaryStats(result);
  el<HTMLDivElement>("summary").innerHTML = renderSummaryHtml(stats);
  el<HTMLDivElement>("legend").innerHTML = renderLegendHtml(legendRows(result));
  el<HTMLDivElement>("hist-sample").innerHTML = renderHistogramSvg(
    histogramPanel(result, "p_sample"),
    "sample",
  );
  el<HTMLDivElement>("hist-population").innerHTML = renderHistogramSvg(
    histogramPanel(result, "p_population"),
    "population",
  );
  el<HTMLDivElement>("hist-bias").innerHTML = renderBiasSvg(biasPanel(result));
}

async function renderMap(analysisId: string): Promise<void> {
  const doc = await client.getMap(analysisId);
  const shapes = mapShapes(doc);
  el<HTMLDivElement>("map").innerHTML = renderMapSvg(shapes, MAP_W, MAP_H);
}

function wireTooltip(): void {
  const map = el<HTMLDivElement>("map");
  const tip = el<HTMLDivElement>("tooltip");
  map.addEventListener("mousemove", (event) => {
    const target = event.target as Element;
    if (!(target instanceof SVGPathElement)) {
      tip.hidden = true;
      return;
    }
    tip.hidden = false;
    tip.textContent = renderTooltip({
      value: Number(target.dataset.value),
      score: Number(target.dataset.score),
      cls: target.dataset.class ?? "",
    });
    tip.style.left = `${event.pageX + 12}px`;
    tip.style.top = `${event.pageY + 12}px`;
  });
  map.addEventListener("mouseleave", () => {
    tip.hidden = true;
  });
}

async function uploadCollection(): Promise<void> {
  const input = el<HTMLInputElement>("collection-file");
  const file = input.files?.[0];
  if (!file) return;
  const body = await file.text();
  const reply = await client.uploadCollection(body);
  el<HTMLInputElement>("collection-id").value = reply.collection_id;
  setStatus(`collection ${reply.collection_id}: ${reply.site_count} sites`);
}

let running = false;

async function runAnalysis(): Promise<void> {
  if (running) return; // at most one in-flight poll per view
  showError("");
  const form = readForm();
  const problems = validateForm(form);
  if (problems.length > 0) {
    showError(problems.join("; "));
    return;
  }
  running = true;
  el<HTMLButtonElement>("run").disabled = true;
  try {
    const record = await runAndPoll(client, toRequest(form), {
      onStatus: (status) => setStatus(`analysis ${status}…`),
    });
    renderRecord(record);
    await renderMap(record.analysis_id);
    setStatus(`analysis ${record.analysis_id} done (seed ${record.request.seed})`);
  } catch (err) {
    if (err instanceof ServiceError) {
      showError(err.detail);
    } else {
      showError(String(err));
    }
    setStatus("failed");
  } finally {
    running = false;
    el<HTMLButtonElement>("run").disabled = false;
  }
}

function toggleExtentControls(): void {
  const kind = el<HTMLSelectElement>("extent-type").value;
  el<HTMLDivElement>("mask-controls").hidden = kind !== "mask";
  el<HTMLDivElement>("bbox-controls").hidden = kind !== "bbox";
}

export function start(): void {
  wireTooltip();
  toggleExtentControls();
  el<HTMLSelectElement>("extent-type").addEventListener("change", toggleExtentControls);
  el<HTMLButtonElement>("run").addEventListener("click", () => void runAnalysis());
  el<HTMLInputElement>("collection-file").addEventListener(
    "change",
    () => void uploadCollection().catch((e) => showError(String(e))),
  );
  el<HTMLButtonElement>("refresh-variables").addEventListener(
    "click",
    () => void refreshVariables().catch((e) => showError(String(e))),
  );
  void refreshVariables().catch((e) => showError(String(e)));
}

if (typeof document !== "undefined") {
  start();
}
