/** Wire types mirroring the studio service's documented JSON bodies. */

export interface ModelSummary {
  id: string;
  name: string;
  family: "representation" | "interaction";
  description: string;
}

export interface HyperParam {
  name: string;
  kind: "categorical" | "int" | "float";
  domain: Array<string | number>;
  default: string | number;
}

export interface ModelDetail extends ModelSummary {
  schema: HyperParam[];
}

export interface DatasetRecord {
  id: string;
  files: Record<string, string>;
  rows: Record<string, number>;
}

export interface JobRecord {
  id: string;
  kind: "train" | "tune";
  model_id: string;
  dataset_id: string;
  status: "queued" | "running" | "done" | "failed";
  error: string | null;
}

export interface EpochEvent {
  epoch: number;
  loss: number;
  metrics: Record<string, number>;
  seconds: number;
}

export interface TerminalEvent {
  status: "done" | "failed";
  error?: string;
}

export type JobEvent = EpochEvent | TerminalEvent | Record<string, unknown>;

export interface Explanation {
  family: "representation" | "interaction";
  left_vector?: number[];
  right_vector?: number[];
  matrix?: number[][];
  weights?: number[];
  left_tokens?: string[];
  right_tokens?: string[];
}

export interface ScoreResponse {
  score: number;
  explanation: Explanation;
}

export function isEpochEvent(event: JobEvent): event is EpochEvent {
  return typeof (event as EpochEvent).epoch === "number";
}

export function isTerminalEvent(event: JobEvent): event is TerminalEvent {
  return typeof (event as TerminalEvent).status === "string" &&
    !("trial" in event) && !("epoch" in event);
}
