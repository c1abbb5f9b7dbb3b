import { describe, expect, it } from "vitest";

import { buildSchemaForm, fieldFromServerError, validateField } from "../src/schemaForm.js";
import { KNRM_SCHEMA } from "./helpers.js";

describe("validateField", () => {
  const kernels = KNRM_SCHEMA[0]; // int in [2, 30]
  const sigma = KNRM_SCHEMA[1]; // float in [0.005, 1.0]
  const optimizer = KNRM_SCHEMA[2]; // categorical

  it("accepts in-domain integers", () => {
    expect(validateField(kernels, "11")).toEqual({ ok: true, value: 11 });
  });

  it("rejects out-of-domain integers", () => {
    expect(validateField(kernels, "1").ok).toBe(false);
    expect(validateField(kernels, "31").ok).toBe(false);
  });

  it("rejects non-integers for int fields", () => {
    expect(validateField(kernels, "2.5").ok).toBe(false);
    expect(validateField(kernels, "abc").ok).toBe(false);
  });

  it("accepts floats across their range", () => {
    expect(validateField(sigma, "0.005")).toEqual({ ok: true, value: 0.005 });
    expect(validateField(sigma, "1.0")).toEqual({ ok: true, value: 1.0 });
    expect(validateField(sigma, "1.01").ok).toBe(false);
  });

  it("restricts categorical fields to their items", () => {
    expect(validateField(optimizer, "adam")).toEqual({ ok: true, value: "adam" });
    expect(validateField(optimizer, "rmsprop").ok).toBe(false);
  });

  it("requires a value", () => {
    expect(validateField(sigma, "  ").ok).toBe(false);
  });
});

describe("buildSchemaForm", () => {
  it("prefills defaults from the schema", () => {
    const form = buildSchemaForm(document, KNRM_SCHEMA, "go");
    const kernels = form.element.querySelector("input[name=kernels]") as HTMLInputElement;
    expect(kernels.value).toBe("11");
    const optimizer = form.element.querySelector("select[name=optimizer]") as HTMLSelectElement;
    expect(optimizer.value).toBe("adam");
    expect(form.read()).toEqual({ kernels: 11, sigma: 0.1, optimizer: "adam", epochs: 3 });
  });

  it("blocks out-of-domain entries and marks the field", () => {
    const form = buildSchemaForm(document, KNRM_SCHEMA, "go");
    const kernels = form.element.querySelector("input[name=kernels]") as HTMLInputElement;
    kernels.value = "99";
    expect(form.read()).toBeNull();
    const row = form.element.querySelector("[data-field=kernels] .field-error")!;
    expect(row.textContent).toMatch(/\[2, 30\]/);
  });

  it("renders categorical fields as selects with every option", () => {
    const form = buildSchemaForm(document, KNRM_SCHEMA, "go");
    const options = [...form.element.querySelectorAll("select[name=optimizer] option")];
    expect(options.map((o) => o.textContent)).toEqual(["sgd", "adam"]);
  });

  it("routes server errors to the named field", () => {
    const form = buildSchemaForm(document, KNRM_SCHEMA, "go");
    const field = fieldFromServerError(KNRM_SCHEMA, "knrm: sigma: 2.0 outside [0.005, 1.0]");
    expect(field).toBe("sigma");
    form.showError(field, "outside [0.005, 1.0]");
    expect(
      form.element.querySelector("[data-field=sigma] .field-error")!.textContent,
    ).toMatch(/outside/);
  });

  it("clears errors on revalidation", () => {
    const form = buildSchemaForm(document, KNRM_SCHEMA, "go");
    const kernels = form.element.querySelector("input[name=kernels]") as HTMLInputElement;
    kernels.value = "99";
    form.read();
    kernels.value = "12";
    expect(form.read()).not.toBeNull();
    expect(form.element.querySelector("[data-field=kernels] .field-error")!.textContent).toBe("");
  });
});
