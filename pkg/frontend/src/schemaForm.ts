/** Hyper-parameter form generated from a model's schema.
 *
 * Types, domains, and defaults are enforced client-side before anything is
 * submitted; a field that fails validation blocks submission and shows its
 * error inline. Server-side rejections land on the same inline slots.
 */

import type { HyperParam } from "./types.js";

export type FieldValue = string | number;

export interface ValidationResult {
  ok: boolean;
  value?: FieldValue;
  error?: string;
}

export function validateField(param: HyperParam, raw: string): ValidationResult {
  if (param.kind === "categorical") {
    const match = param.domain.find((item) => String(item) === raw);
    if (match === undefined) {
      return { ok: false, error: `must be one of ${param.domain.join(", ")}` };
    }
    return { ok: true, value: match };
  }
  const trimmed = raw.trim();
  if (trimmed === "") return { ok: false, error: "required" };
  const num = Number(trimmed);
  if (!Number.isFinite(num)) return { ok: false, error: "must be a number" };
  if (param.kind === "int" && !Number.isInteger(num)) {
    return { ok: false, error: "must be an integer" };
  }
  const [lo, hi] = param.domain as [number, number];
  if (num < lo || num > hi) {
    return { ok: false, error: `must be in [${lo}, ${hi}]` };
  }
  return { ok: true, value: num };
}

export interface SchemaForm {
  element: HTMLFormElement;
  /** Validate every field; null when any field is invalid. */
  read(): Record<string, FieldValue> | null;
  /** Attach a server-side message to one field (or the form when unknown). */
  showError(field: string | null, message: string): void;
  clearErrors(): void;
}

export function buildSchemaForm(
  doc: Document,
  schema: HyperParam[],
  submitLabel: string,
): SchemaForm {
  const form = doc.createElement("form");
  form.className = "schema-form";
  const errorSlots = new Map<string, HTMLElement>();
  const inputs = new Map<string, HTMLInputElement | HTMLSelectElement>();

  for (const param of schema) {
    const row = doc.createElement("label");
    row.className = "schema-field";
    row.dataset.field = param.name;

    const caption = doc.createElement("span");
    caption.className = "field-name";
    caption.textContent = param.name;
    row.appendChild(caption);

    let input: HTMLInputElement | HTMLSelectElement;
    if (param.kind === "categorical") {
      input = doc.createElement("select");
      for (const item of param.domain) {
        const option = doc.createElement("option");
        option.value = String(item);
        option.textContent = String(item);
        if (String(item) === String(param.default)) option.selected = true;
        input.appendChild(option);
      }
    } else {
      input = doc.createElement("input");
      input.type = "text";
      input.value = String(param.default);
      const [lo, hi] = param.domain;
      input.title = `${param.kind} in [${lo}, ${hi}]`;
    }
    input.name = param.name;
    row.appendChild(input);
    inputs.set(param.name, input);

    const slot = doc.createElement("span");
    slot.className = "field-error";
    row.appendChild(slot);
    errorSlots.set(param.name, slot);

    form.appendChild(row);
  }

  const formError = doc.createElement("div");
  formError.className = "form-error";
  form.appendChild(formError);

  const submit = doc.createElement("button");
  submit.type = "submit";
  submit.textContent = submitLabel;
  form.appendChild(submit);

  const clearErrors = () => {
    formError.textContent = "";
    for (const slot of errorSlots.values()) slot.textContent = "";
  };

  return {
    element: form,
    read() {
      clearErrors();
      const values: Record<string, FieldValue> = {};
      let valid = true;
      for (const param of schema) {
        const input = inputs.get(param.name)!;
        const result = validateField(param, input.value);
        if (!result.ok) {
          errorSlots.get(param.name)!.textContent = result.error ?? "invalid";
          valid = false;
        } else {
          values[param.name] = result.value!;
        }
      }
      return valid ? values : null;
    },
    showError(field, message) {
      const slot = field === null ? null : errorSlots.get(field);
      if (slot) {
        slot.textContent = message;
      } else {
        formError.textContent = message;
      }
    },
    clearErrors,
  };
}

/** Match a server rejection like "knrm: kernels: 1 outside [2, 30]" to a field. */
export function fieldFromServerError(schema: HyperParam[], message: string): string | null {
  for (const param of schema) {
    if (message.includes(param.name)) return param.name;
  }
  return null;
}
