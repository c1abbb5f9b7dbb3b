/** Typed client for the studio HTTP API.
 *
 * Every request in the UI flows through this module, and only the endpoints
 * documented by the service are used. All methods take an injectable fetch
 * so tests can substitute a mock transport.
 */

import type {
  DatasetRecord,
  JobEvent,
  JobRecord,
  ModelDetail,
  ModelSummary,
  ScoreResponse,
} from "./types.js";

export type FetchLike = typeof fetch;

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let message = `${response.status}`;
    try {
      const body = (await response.json()) as { error?: string };
      if (body.error) message = body.error;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(message, response.status);
  }
  return (await response.json()) as T;
}

export class StudioApi {
  constructor(private readonly fetchImpl: FetchLike = fetch, private readonly base = "") {}

  async listModels(): Promise<ModelSummary[]> {
    const models = await asJson<ModelSummary[]>(await this.fetchImpl(`${this.base}/api/models`));
    return [...models].sort((a, b) => a.id.localeCompare(b.id));
  }

  async getModel(id: string): Promise<ModelDetail> {
    return asJson(await this.fetchImpl(`${this.base}/api/models/${id}`));
  }

  async listDatasets(): Promise<DatasetRecord[]> {
    return asJson(await this.fetchImpl(`${this.base}/api/datasets`));
  }

  async uploadDataset(files: Record<string, File>): Promise<DatasetRecord> {
    const form = new FormData();
    for (const [field, file] of Object.entries(files)) form.append(field, file);
    return asJson(
      await this.fetchImpl(`${this.base}/api/datasets`, { method: "POST", body: form }),
    );
  }

  async createJob(
    kind: "train" | "tune",
    modelId: string,
    datasetId: string,
    config: Record<string, unknown>,
  ): Promise<JobRecord> {
    return asJson(
      await this.fetchImpl(`${this.base}/api/jobs`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ kind, model_id: modelId, dataset_id: datasetId, config }),
      }),
    );
  }

  async getJob(id: string): Promise<JobRecord> {
    return asJson(await this.fetchImpl(`${this.base}/api/jobs/${id}`));
  }

  async listJobs(): Promise<JobRecord[]> {
    return asJson(await this.fetchImpl(`${this.base}/api/jobs`));
  }

  async scorePair(jobId: string, textLeft: string, textRight: string): Promise<ScoreResponse> {
    return asJson(
      await this.fetchImpl(`${this.base}/api/jobs/${jobId}/score`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ text_left: textLeft, text_right: textRight }),
      }),
    );
  }

  /**
   * Follow a job's line-delimited event stream: replays history, then pushes
   * new events until the terminal status line. Returns when the stream ends
   * or the signal aborts (navigation away closes the stream).
   */
  async followEvents(
    jobId: string,
    onEvent: (event: JobEvent) => void,
    signal?: AbortSignal,
  ): Promise<void> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.base}/api/jobs/${jobId}/events`, { signal });
    } catch (err) {
      if (signal?.aborted) return;
      throw err;
    }
    if (!response.ok || response.body === null) {
      throw new ApiError(`event stream failed (${response.status})`, response.status);
    }
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    try {
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        buffer += decoder.decode(value, { stream: true });
        let newline = buffer.indexOf("\n");
        while (newline >= 0) {
          const line = buffer.slice(0, newline).trim();
          buffer = buffer.slice(newline + 1);
          if (line) onEvent(JSON.parse(line) as JobEvent);
          newline = buffer.indexOf("\n");
        }
      }
    } catch (err) {
      if (!signal?.aborted) throw err;
      return;
    }
    const tail = buffer.trim();
    if (tail) onEvent(JSON.parse(tail) as JobEvent);
  }
}
