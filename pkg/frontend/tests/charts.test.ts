import { describe, expect, it } from "vitest";

import { StudioApi } from "../src/api.js";
import { ChartSeries, TrainingChartStore, renderLineChart } from "../src/charts.js";
import { isEpochEvent, isTerminalEvent, type JobEvent } from "../src/types.js";
import { mockFetch, type MockState } from "./helpers.js";

describe("ChartSeries", () => {
  it("is append-only with strictly increasing x", () => {
    const series = new ChartSeries("loss");
    series.append(1, 0.9);
    series.append(2, 0.5);
    expect(() => series.append(2, 0.4)).toThrow(/increase/);
    expect(series.length).toBe(2);
  });
});

describe("TrainingChartStore", () => {
  it("keeps one series for loss plus one per metric", () => {
    const store = new TrainingChartStore();
    store.addEpoch(1, 0.9, { "ndcg@10": 0.4, map: 0.3 });
    store.addEpoch(2, 0.7, { "ndcg@10": 0.6, map: 0.5 });
    expect([...store.series.keys()].sort()).toEqual(["loss", "map", "ndcg@10"]);
    expect(store.get("ndcg@10")!.points).toEqual([
      { x: 1, y: 0.4 },
      { x: 2, y: 0.6 },
    ]);
  });
});

describe("event stream to chart", () => {
  function epochEvents(n: number) {
    return Array.from({ length: n }, (_, i) => ({
      epoch: i + 1,
      loss: 1.0 / (i + 1),
      metrics: { "ndcg@10": 0.4 + 0.1 * i },
      seconds: 0.1,
    }));
  }

  it("an E-epoch run produces an E-point loss series plus terminal", async () => {
    const E = 5;
    const state: MockState = { calls: [], epochEvents: epochEvents(E) };
    const api = new StudioApi(mockFetch(state));
    const store = new TrainingChartStore();
    const seen: JobEvent[] = [];
    await api.followEvents("job-1", (event) => {
      seen.push(event);
      if (isEpochEvent(event)) store.addEpoch(event.epoch, event.loss, event.metrics);
    });
    expect(store.get("loss")!.length).toBe(E);
    expect(store.get("ndcg@10")!.length).toBe(E);
    expect(seen.filter(isTerminalEvent)).toEqual([{ status: "done" }]);
  });

  it("reconstructs identically when the stream replays after a reload", async () => {
    const E = 3;
    const state: MockState = { calls: [], epochEvents: epochEvents(E) };
    const api = new StudioApi(mockFetch(state));

    const runOnce = async () => {
      const store = new TrainingChartStore();
      await api.followEvents("job-1", (event) => {
        if (isEpochEvent(event)) store.addEpoch(event.epoch, event.loss, event.metrics);
      });
      return store.get("loss")!.points;
    };
    expect(await runOnce()).toEqual(await runOnce());
  });

  it("parses events split across arbitrary chunk boundaries", async () => {
    const lines = epochEvents(2)
      .map((e) => JSON.stringify(e) + "\n")
      .concat(JSON.stringify({ status: "done" }) + "\n")
      .join("");
    const encoder = new TextEncoder();
    const body = new ReadableStream<Uint8Array>({
      start(controller) {
        for (let i = 0; i < lines.length; i += 7) {
          controller.enqueue(encoder.encode(lines.slice(i, i + 7)));
        }
        controller.close();
      },
    });
    const transport: typeof fetch = async () => new Response(body, { status: 200 });
    const api = new StudioApi(transport);
    const events: JobEvent[] = [];
    await api.followEvents("job-1", (event) => events.push(event));
    expect(events.length).toBe(3);
    expect(events[2]).toEqual({ status: "done" });
  });
});

describe("renderLineChart", () => {
  it("draws one polyline per series", () => {
    const store = new TrainingChartStore();
    store.addEpoch(1, 0.9, { "ndcg@10": 0.4 });
    store.addEpoch(2, 0.5, { "ndcg@10": 0.7 });
    const svg = renderLineChart(document, store);
    const lines = [...svg.querySelectorAll("polyline")];
    expect(lines.map((l) => l.getAttribute("data-series")).sort()).toEqual([
      "loss", "ndcg@10",
    ]);
    const lossPoints = lines
      .find((l) => l.getAttribute("data-series") === "loss")!
      .getAttribute("points")!
      .split(" ");
    expect(lossPoints.length).toBe(2);
  });
});
