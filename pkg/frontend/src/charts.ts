/** Append-only chart series and a small dependency-free SVG line chart. */

export interface Point {
  x: number;
  y: number;
}

export class ChartSeries {
  readonly points: Point[] = [];

  constructor(readonly name: string) {}

  /** Append one point; x must be strictly increasing. */
  append(x: number, y: number): void {
    const last = this.points[this.points.length - 1];
    if (last !== undefined && x <= last.x) {
      throw new Error(`${this.name}: x must increase (got ${x} after ${last.x})`);
    }
    this.points.push({ x, y });
  }

  get length(): number {
    return this.points.length;
  }
}

/** One series per event field: "loss" plus one per validation metric. */
export class TrainingChartStore {
  readonly series = new Map<string, ChartSeries>();

  private series_for(name: string): ChartSeries {
    let s = this.series.get(name);
    if (s === undefined) {
      s = new ChartSeries(name);
      this.series.set(name, s);
    }
    return s;
  }

  addEpoch(epoch: number, loss: number, metrics: Record<string, number>): void {
    this.series_for("loss").append(epoch, loss);
    for (const [metric, value] of Object.entries(metrics)) {
      this.series_for(metric).append(epoch, value);
    }
  }

  get(name: string): ChartSeries | undefined {
    return this.series.get(name);
  }
}

const SVG_NS = "http://www.w3.org/2000/svg";
const PALETTE = ["#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed"];

export function renderLineChart(
  doc: Document,
  store: TrainingChartStore,
  width = 420,
  height = 200,
): SVGSVGElement {
  const svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "training-chart");

  const all = [...store.series.values()].filter((s) => s.length > 0);
  if (all.length === 0) return svg;
  const xs = all.flatMap((s) => s.points.map((p) => p.x));
  const ys = all.flatMap((s) => s.points.map((p) => p.y));
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs, xMin + 1);
  const yMin = Math.min(...ys, 0);
  const yMax = Math.max(...ys, yMin + 1e-9);
  const pad = 24;
  const sx = (x: number) => pad + ((x - xMin) / (xMax - xMin)) * (width - 2 * pad);
  const sy = (y: number) => height - pad - ((y - yMin) / (yMax - yMin)) * (height - 2 * pad);

  all.forEach((series, index) => {
    const path = doc.createElementNS(SVG_NS, "polyline");
    path.setAttribute(
      "points",
      series.points.map((p) => `${sx(p.x).toFixed(1)},${sy(p.y).toFixed(1)}`).join(" "),
    );
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", PALETTE[index % PALETTE.length]);
    path.setAttribute("stroke-width", "1.5");
    path.setAttribute("data-series", series.name);
    svg.appendChild(path);
  });
  return svg;
}

export function renderVectorBars(
  doc: Document,
  vector: number[],
  label: string,
  width = 200,
  height = 120,
): SVGSVGElement {
  const svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "vector-bars");
  svg.setAttribute("data-label", label);
  if (vector.length === 0) return svg;
  const extent = Math.max(1e-9, ...vector.map((v) => Math.abs(v)));
  const mid = height / 2;
  const barWidth = width / vector.length;
  vector.forEach((v, index) => {
    const bar = doc.createElementNS(SVG_NS, "rect");
    const scaled = (Math.abs(v) / extent) * (mid - 4);
    bar.setAttribute("x", (index * barWidth).toFixed(2));
    bar.setAttribute("width", Math.max(0.5, barWidth - 1).toFixed(2));
    bar.setAttribute("y", (v >= 0 ? mid - scaled : mid).toFixed(2));
    bar.setAttribute("height", scaled.toFixed(2));
    bar.setAttribute("fill", v >= 0 ? "#2563eb" : "#dc2626");
    bar.setAttribute("data-index", String(index));
    svg.appendChild(bar);
  });
  return svg;
}
