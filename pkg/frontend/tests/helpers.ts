/** Mock transport conforming to the documented studio endpoints. */

import type { HyperParam, ModelDetail, ModelSummary } from "../src/types.js";

export const MODELS: ModelSummary[] = [
  { id: "drmm", name: "Deep Relevance Matcher", family: "interaction", description: "histograms" },
  { id: "dssm", name: "Deep Structured Semantic Matcher", family: "representation", description: "towers" },
  { id: "knrm", name: "Kernel-Pooling Neural Ranker", family: "interaction", description: "kernels" },
];

export const KNRM_SCHEMA: HyperParam[] = [
  { name: "kernels", kind: "int", domain: [2, 30], default: 11 },
  { name: "sigma", kind: "float", domain: [0.005, 1.0], default: 0.1 },
  { name: "optimizer", kind: "categorical", domain: ["sgd", "adam"], default: "adam" },
  { name: "epochs", kind: "int", domain: [1, 1000], default: 3 },
];

export function modelDetail(id: string): ModelDetail {
  const summary = MODELS.find((m) => m.id === id)!;
  return { ...summary, schema: KNRM_SCHEMA };
}

export interface MockState {
  calls: Array<{ method: string; url: string; body?: unknown }>;
  epochEvents: Array<Record<string, unknown>>;
  scoreResponse?: Record<string, unknown>;
  failCreateJob?: string;
  datasets?: Array<Record<string, unknown>>;
}

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function ndjson(lines: Array<Record<string, unknown>>): Response {
  const encoder = new TextEncoder();
  const stream = new ReadableStream<Uint8Array>({
    start(controller) {
      for (const line of lines) {
        controller.enqueue(encoder.encode(JSON.stringify(line) + "\n"));
      }
      controller.close();
    },
  });
  return new Response(stream, { status: 200, headers: { "content-type": "application/x-ndjson" } });
}

export function mockFetch(state: MockState): typeof fetch {
  return async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = String(input);
    const method = init?.method ?? "GET";
    let body: unknown;
    if (typeof init?.body === "string") body = JSON.parse(init.body);
    state.calls.push({ method, url, body });

    if (method === "GET" && url.endsWith("/api/models")) return json(MODELS);
    const modelMatch = url.match(/\/api\/models\/([a-z0-9_-]+)$/);
    if (method === "GET" && modelMatch) {
      const found = MODELS.find((m) => m.id === modelMatch[1]);
      return found ? json(modelDetail(found.id)) : json({ error: "unknown model" }, 404);
    }
    if (method === "GET" && url.endsWith("/api/datasets")) {
      return json(state.datasets ?? [{ id: "ds-1", files: {}, rows: { relations_train: 140 } }]);
    }
    if (method === "POST" && url.endsWith("/api/datasets")) {
      const record = { id: `ds-${(state.datasets?.length ?? 1) + 1}`, files: {}, rows: { relations_train: 1 } };
      state.datasets = [...(state.datasets ?? [{ id: "ds-1", files: {}, rows: { relations_train: 140 } }]), record];
      return json(record);
    }
    if (method === "POST" && url.endsWith("/api/jobs")) {
      if (state.failCreateJob) return json({ error: state.failCreateJob }, 422);
      return json({
        id: "job-1", kind: "train", model_id: "knrm", dataset_id: "ds-1",
        status: "queued", error: null,
      });
    }
    if (method === "GET" && /\/api\/jobs\/job-1\/events$/.test(url)) {
      return ndjson([...state.epochEvents, { status: "done" }]);
    }
    if (method === "POST" && /\/api\/jobs\/job-1\/score$/.test(url)) {
      return json(state.scoreResponse ?? { error: "no score configured" });
    }
    if (method === "GET" && /\/api\/jobs\/job-1$/.test(url)) {
      return json({ id: "job-1", kind: "train", model_id: "knrm", dataset_id: "ds-1", status: "done", error: null });
    }
    return json({ error: `unmocked route ${method} ${url}` }, 500);
  };
}

export async function waitFor(predicate: () => boolean, timeoutMs = 2000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!predicate()) {
    if (Date.now() > deadline) throw new Error("waitFor timed out");
    await new Promise((resolve) => setTimeout(resolve, 5));
  }
}

/** Endpoints the UI is allowed to touch (the documented surface). */
export const DOCUMENTED_ROUTES = [
  /^\/api\/models$/,
  /^\/api\/models\/[a-z0-9_-]+$/,
  /^\/api\/datasets$/,
  /^\/api\/jobs$/,
  /^\/api\/jobs\/[a-z0-9-]+$/,
  /^\/api\/jobs\/[a-z0-9-]+\/events$/,
  /^\/api\/jobs\/[a-z0-9-]+\/score$/,
  /^\/api\/tune$/,
];
