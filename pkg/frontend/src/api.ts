/** Typed client for the analysis service. The fetch implementation is
 * injectable so the poll loop is testable without a server. */

import type {
  AnalysisRecord,
  AnalysisRequest,
  MapDocument,
  VariableInfo,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(detail);
  }
}

async function raiseForStatus(resp: Response): Promise<void> {
  if (resp.ok) return;
  let detail = `${resp.status} ${resp.statusText}`;
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status line
  }
  throw new ServiceError(resp.status, detail);
}

export class ApiClient {
  constructor(
    private base = "",
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async listVariables(): Promise<VariableInfo[]> {
    const resp = await this.fetchImpl(this.url("/variables"));
    await raiseForStatus(resp);
    const body = await resp.json();
    return body.variables as VariableInfo[];
  }

  async uploadCollection(csv: string): Promise<{ collection_id: string; site_count: number }> {
    const resp = await this.fetchImpl(this.url("/collections"), {
      method: "POST",
      headers: { "content-type": "text/csv" },
      body: csv,
    });
    await raiseForStatus(resp);
    return resp.json();
  }

  async uploadVariable(
    params: { variable_id: string; kind: string; stat?: string; units?: string },
    ascText: string,
  ): Promise<{ variable_id: string; cell_count: number }> {
    const query = new URLSearchParams(
      Object.entries(params).filter(([, v]) => v !== undefined) as [string, string][],
    );
    const resp = await this.fetchImpl(this.url(`/variables?${query}`), {
      method: "POST",
      headers: { "content-type": "text/plain" },
      body: ascText,
    });
    await raiseForStatus(resp);
    return resp.json();
  }

  async createAnalysis(request: AnalysisRequest): Promise<AnalysisRecord> {
    const resp = await this.fetchImpl(this.url("/analyses"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    });
    await raiseForStatus(resp);
    return resp.json();
  }

  async getAnalysis(analysisId: string): Promise<AnalysisRecord> {
    const resp = await this.fetchImpl(this.url(`/analyses/${analysisId}`));
    await raiseForStatus(resp);
    return resp.json();
  }

  async getMap(analysisId: string): Promise<MapDocument> {
    const resp = await this.fetchImpl(this.url(`/analyses/${analysisId}/map`));
    await raiseForStatus(resp);
    return resp.json();
  }
}

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  sleep?: (ms: number) => Promise<void>;
  onStatus?: (status: string) => void;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

/** POST the request, then poll until the analysis is done or failed. */
export async function runAndPoll(
  client: ApiClient,
  request: AnalysisRequest,
  options: PollOptions = {},
): Promise<AnalysisRecord> {
  const { intervalMs = 500, timeoutMs = 300_000, sleep = defaultSleep, onStatus } = options;
  let record = await client.createAnalysis(request);
  onStatus?.(record.status);
  const deadline = Date.now() + timeoutMs;
  while (record.status === "pending" || record.status === "running") {
    if (Date.now() > deadline) {
      throw new ServiceError(0, `analysis ${record.analysis_id} timed out`);
    }
    await sleep(intervalMs);
    record = await client.getAnalysis(record.analysis_id);
    onStatus?.(record.status);
  }
  if (record.status === "failed") {
    throw new ServiceError(0, record.error ?? "analysis failed");
  }
  return record;
}
