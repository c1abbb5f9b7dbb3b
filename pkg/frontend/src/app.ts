/** Three-panel studio: navigation (models/datasets), primary (description or
 * train/test tabs), secondary (details and live results). One event stream is
 * open per watched job and closed when the user navigates away.
 */

import { ApiError, StudioApi } from "./api.js";
import { TrainingChartStore, renderLineChart, renderVectorBars } from "./charts.js";
import { renderHeatmap } from "./heatmap.js";
import { buildSchemaForm, fieldFromServerError } from "./schemaForm.js";
import {
  isEpochEvent,
  isTerminalEvent,
  type DatasetRecord,
  type ModelDetail,
  type ModelSummary,
  type ScoreResponse,
} from "./types.js";

type Tab = "description" | "train" | "test";

export class StudioApp {
  readonly nav: HTMLElement;
  readonly primary: HTMLElement;
  readonly secondary: HTMLElement;

  private models: ModelSummary[] = [];
  private datasets: DatasetRecord[] = [];
  private selectedModel: string | null = null;
  private tabByModel = new Map<string, Tab>();
  private watchedJob: string | null = null;
  private streamController: AbortController | null = null;
  private doneJobByModel = new Map<string, string>();

  constructor(
    private readonly doc: Document,
    private readonly api: StudioApi,
    root: HTMLElement,
  ) {
    root.innerHTML = "";
    this.nav = this.panel(root, "panel-nav");
    this.primary = this.panel(root, "panel-primary");
    this.secondary = this.panel(root, "panel-secondary");
  }

  private panel(root: HTMLElement, className: string): HTMLElement {
    const el = this.doc.createElement("section");
    el.className = `panel ${className}`;
    root.appendChild(el);
    return el;
  }

  async start(): Promise<void> {
    try {
      [this.models, this.datasets] = await Promise.all([
        this.api.listModels(),
        this.api.listDatasets(),
      ]);
    } catch (err) {
      this.renderErrorBanner(err as Error);
      return;
    }
    this.renderNavigation();
    if (this.models.length > 0) {
      await this.selectModel(this.models[0].id);
    } else {
      this.primary.innerHTML = "";
      const empty = this.doc.createElement("p");
      empty.className = "empty-state";
      empty.textContent = "No models registered.";
      this.primary.appendChild(empty);
    }
  }

  private renderErrorBanner(err: Error): void {
    this.nav.innerHTML = "";
    const banner = this.doc.createElement("div");
    banner.className = "error-banner";
    banner.textContent = `Service unreachable: ${err.message}`;
    const retry = this.doc.createElement("button");
    retry.textContent = "Retry";
    retry.className = "retry";
    retry.addEventListener("click", () => void this.start());
    banner.appendChild(retry);
    this.nav.appendChild(banner);
  }

  private renderNavigation(): void {
    this.nav.innerHTML = "";
    const heading = this.doc.createElement("h2");
    heading.textContent = "Models";
    this.nav.appendChild(heading);
    const list = this.doc.createElement("ul");
    list.className = "model-list";
    for (const model of this.models) {
      const item = this.doc.createElement("li");
      item.dataset.modelId = model.id;
      const link = this.doc.createElement("a");
      link.href = `#${model.id}`;
      link.textContent = model.id;
      link.addEventListener("click", (event) => {
        event.preventDefault();
        void this.selectModel(model.id);
      });
      const badge = this.doc.createElement("span");
      badge.className = `family-badge family-${model.family}`;
      badge.textContent = model.family;
      item.append(link, badge);
      if (model.id === this.selectedModel) item.classList.add("selected");
      list.appendChild(item);
    }
    this.nav.appendChild(list);

    const dsHeading = this.doc.createElement("h2");
    dsHeading.textContent = "Datasets";
    this.nav.appendChild(dsHeading);
    const dsList = this.doc.createElement("ul");
    dsList.className = "dataset-list";
    for (const ds of this.datasets) {
      const item = this.doc.createElement("li");
      item.textContent = `${ds.id} (${ds.rows["relations_train"] ?? 0} train rows)`;
      item.dataset.datasetId = ds.id;
      dsList.appendChild(item);
    }
    this.nav.appendChild(dsList);
    this.nav.appendChild(this.buildUploadForm());
  }

  private buildUploadForm(): HTMLFormElement {
    const form = this.doc.createElement("form");
    form.className = "upload-form";
    const fields = [
      "corpus_left", "corpus_right", "relations_train", "relations_valid", "relations_test",
    ];
    for (const field of fields) {
      const row = this.doc.createElement("label");
      row.textContent = field;
      const input = this.doc.createElement("input");
      input.type = "file";
      input.name = field;
      row.appendChild(input);
      form.appendChild(row);
    }
    const submit = this.doc.createElement("button");
    submit.type = "submit";
    submit.textContent = "Upload dataset";
    const error = this.doc.createElement("span");
    error.className = "upload-error";
    form.append(submit, error);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const files: Record<string, File> = {};
      for (const field of fields) {
        const input = form.querySelector(`input[name=${field}]`) as HTMLInputElement;
        const file = input.files?.[0];
        if (file) files[field] = file;
      }
      void this.api
        .uploadDataset(files)
        .then(async () => {
          this.datasets = await this.api.listDatasets();
          this.renderNavigation();
        })
        .catch((err: Error) => {
          error.textContent = err.message;
        });
    });
    return form;
  }

  async selectModel(modelId: string): Promise<void> {
    // navigating away closes any followed stream
    this.watchedJob = null;
    this.streamController?.abort();
    this.streamController = null;
    this.selectedModel = modelId;
    this.renderNavigation();
    const detail = await this.api.getModel(modelId);
    this.renderTabs(detail);
  }

  private currentTab(modelId: string): Tab {
    return this.tabByModel.get(modelId) ?? "description";
  }

  private renderTabs(detail: ModelDetail): void {
    this.primary.innerHTML = "";
    const tabs = this.doc.createElement("nav");
    tabs.className = "tabs";
    (["description", "train", "test"] as Tab[]).forEach((tab) => {
      const button = this.doc.createElement("button");
      button.textContent = tab;
      button.dataset.tab = tab;
      if (this.currentTab(detail.id) === tab) button.classList.add("active");
      button.addEventListener("click", () => {
        this.tabByModel.set(detail.id, tab);
        this.renderTabs(detail);
      });
      tabs.appendChild(button);
    });
    this.primary.appendChild(tabs);

    const body = this.doc.createElement("div");
    body.className = "tab-body";
    this.primary.appendChild(body);

    const tab = this.currentTab(detail.id);
    if (tab === "description") this.renderDescription(body, detail);
    else if (tab === "train") this.renderTrain(body, detail);
    else this.renderTest(body, detail);
  }

  private renderDescription(body: HTMLElement, detail: ModelDetail): void {
    const title = this.doc.createElement("h3");
    title.textContent = `${detail.name} (${detail.family})`;
    const prose = this.doc.createElement("p");
    prose.className = "model-description";
    prose.textContent = detail.description;
    body.append(title, prose);

    const table = this.doc.createElement("table");
    table.className = "schema-table";
    const head = this.doc.createElement("tr");
    for (const caption of ["name", "kind", "domain", "default"]) {
      const th = this.doc.createElement("th");
      th.textContent = caption;
      head.appendChild(th);
    }
    table.appendChild(head);
    for (const param of detail.schema) {
      const tr = this.doc.createElement("tr");
      for (const cell of [param.name, param.kind, JSON.stringify(param.domain), String(param.default)]) {
        const td = this.doc.createElement("td");
        td.textContent = cell;
        tr.appendChild(td);
      }
      table.appendChild(tr);
    }
    this.secondary.innerHTML = "";
    const heading = this.doc.createElement("h3");
    heading.textContent = "Hyper-parameters";
    this.secondary.append(heading, table);
  }

  private renderTrain(body: HTMLElement, detail: ModelDetail): void {
    const form = buildSchemaForm(this.doc, detail.schema, "Start training");
    const datasetRow = this.doc.createElement("label");
    datasetRow.className = "dataset-pick";
    datasetRow.textContent = "dataset ";
    const select = this.doc.createElement("select");
    select.name = "dataset";
    for (const ds of this.datasets) {
      const option = this.doc.createElement("option");
      option.value = ds.id;
      option.textContent = ds.id;
      select.appendChild(option);
    }
    datasetRow.appendChild(select);
    body.append(datasetRow, form.element);

    this.secondary.innerHTML = "";
    const status = this.doc.createElement("p");
    status.className = "job-status";
    const chartHost = this.doc.createElement("div");
    chartHost.className = "chart-host";
    this.secondary.append(status, chartHost);

    form.element.addEventListener("submit", (event) => {
      event.preventDefault();
      const values = form.read();
      if (values === null) return; // invalid fields block submission
      if (select.value === "") {
        form.showError(null, "upload a dataset first");
        return;
      }
      void this.launchTraining(detail, select.value, values, form, status, chartHost);
    });
  }

  private async launchTraining(
    detail: ModelDetail,
    datasetId: string,
    hyperParams: Record<string, unknown>,
    form: ReturnType<typeof buildSchemaForm>,
    status: HTMLElement,
    chartHost: HTMLElement,
  ): Promise<void> {
    let job;
    try {
      job = await this.api.createJob("train", detail.id, datasetId, {
        hyper_params: hyperParams,
        seed: 0,
      });
    } catch (err) {
      const message = err instanceof ApiError ? err.message : String(err);
      form.showError(fieldFromServerError(detail.schema, message), message);
      return;
    }
    status.textContent = `job ${job.id}: ${job.status}`;
    this.watchedJob = job.id;
    this.streamController?.abort();
    this.streamController = new AbortController();
    const signal = this.streamController.signal;
    const store = new TrainingChartStore();
    const redraw = () => {
      chartHost.innerHTML = "";
      chartHost.appendChild(renderLineChart(this.doc, store));
    };
    try {
      await this.api.followEvents(job.id, (event) => {
        if (this.watchedJob !== job.id) return; // stream abandoned on navigation
        if (isEpochEvent(event)) {
          store.addEpoch(event.epoch, event.loss, event.metrics);
          status.textContent = `job ${job.id}: epoch ${event.epoch}, loss ${event.loss.toFixed(4)}`;
          redraw();
        } else if (isTerminalEvent(event)) {
          status.textContent = `job ${job.id}: ${event.status}` +
            (event.error ? ` (${event.error})` : "");
          if (event.status === "done") this.doneJobByModel.set(detail.id, job.id);
        }
      }, signal);
    } catch (err) {
      status.textContent = `stream error: ${(err as Error).message}`;
    }
  }

  private renderTest(body: HTMLElement, detail: ModelDetail): void {
    const jobId = this.doneJobByModel.get(detail.id);
    const form = this.doc.createElement("form");
    form.className = "test-form";
    const left = this.doc.createElement("textarea");
    left.name = "text_left";
    const right = this.doc.createElement("textarea");
    right.name = "text_right";
    const submit = this.doc.createElement("button");
    submit.type = "submit";
    submit.textContent = "Score pair";
    submit.disabled = true;
    const note = this.doc.createElement("p");
    note.className = "test-note";
    note.textContent = jobId ? `using job ${jobId}` : "train a model first";
    const refreshDisabled = () => {
      submit.disabled = !jobId || left.value.trim() === "" || right.value.trim() === "";
    };
    left.addEventListener("input", refreshDisabled);
    right.addEventListener("input", refreshDisabled);
    form.append(left, right, submit, note);
    body.appendChild(form);

    this.secondary.innerHTML = "";
    const result = this.doc.createElement("div");
    result.className = "score-result";
    this.secondary.appendChild(result);

    form.addEventListener("submit", (event) => {
      event.preventDefault();
      if (submit.disabled || !jobId) return;
      void this.api
        .scorePair(jobId, left.value, right.value)
        .then((response) => this.renderScore(result, response))
        .catch((err: Error) => {
          result.innerHTML = "";
          const message = this.doc.createElement("p");
          message.className = "score-error";
          message.textContent = err.message;
          result.appendChild(message);
        });
    });
  }

  renderScore(host: HTMLElement, response: ScoreResponse): void {
    host.innerHTML = "";
    const scoreLine = this.doc.createElement("p");
    scoreLine.className = "score-value";
    scoreLine.textContent = `score: ${response.score.toFixed(4)}`;
    host.appendChild(scoreLine);
    const exp = response.explanation;
    if (exp.family === "representation" && exp.left_vector && exp.right_vector) {
      const pair = this.doc.createElement("div");
      pair.className = "vector-pair";
      pair.appendChild(renderVectorBars(this.doc, exp.left_vector, "left"));
      pair.appendChild(renderVectorBars(this.doc, exp.right_vector, "right"));
      host.appendChild(pair);
    } else if (exp.family === "interaction" && exp.matrix) {
      host.appendChild(
        renderHeatmap(
          this.doc,
          exp.matrix,
          exp.left_tokens ?? exp.matrix.map((_, i) => `#${i}`),
          exp.right_tokens ?? (exp.matrix[0] ?? []).map((_, j) => `#${j}`),
        ),
      );
      if (exp.weights) {
        const weights = this.doc.createElement("p");
        weights.className = "layer-weights";
        weights.textContent = `weights: ${exp.weights.map((w) => w.toFixed(3)).join(", ")}`;
        host.appendChild(weights);
      }
    }
  }
}
