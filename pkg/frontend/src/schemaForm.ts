/** Dynamic metadata forms from per-type JSON schemas.
 *
 * Supports the subset the annotation registry declares: flat objects with
 * string / number / boolean / enum properties, required lists, and
 * additionalProperties: false.  Validation mirrors the server so invalid
 * metadata never produces a request. */

import type { JsonSchema } from "./types";

export interface FieldSpec {
  name: string;
  kind: "string" | "number" | "boolean" | "enum";
  required: boolean;
  options?: (string | number)[];
}

export interface FieldError {
  field: string;
  message: string;
}

export function fieldSpecs(schema: JsonSchema): FieldSpec[] {
  const props = schema.properties ?? {};
  const required = new Set(schema.required ?? []);
  return Object.entries(props).map(([name, prop]) => {
    let kind: FieldSpec["kind"] = "string";
    if (prop.enum) kind = "enum";
    else if (prop.type === "number" || prop.type === "integer") kind = "number";
    else if (prop.type === "boolean") kind = "boolean";
    return {
      name,
      kind,
      required: required.has(name),
      options: prop.enum ? [...prop.enum] : undefined,
    };
  });
}

export function validateMetadata(
  schema: JsonSchema,
  metadata: Record<string, unknown>,
): FieldError[] {
  const errors: FieldError[] = [];
  const props = schema.properties ?? {};
  for (const name of schema.required ?? []) {
    const value = metadata[name];
    if (value === undefined || value === null || value === "") {
      errors.push({ field: name, message: `${name} is required` });
    }
  }
  for (const [name, value] of Object.entries(metadata)) {
    if (value === undefined || value === null || value === "") continue;
    const prop = props[name];
    if (!prop) {
      if (schema.additionalProperties === false) {
        errors.push({ field: name, message: `${name} is not allowed` });
      }
      continue;
    }
    if (prop.enum && !prop.enum.includes(value as string | number)) {
      errors.push({ field: name, message: `${name} must be one of ${prop.enum.join(", ")}` });
    } else if ((prop.type === "number" || prop.type === "integer") && typeof value !== "number") {
      errors.push({ field: name, message: `${name} must be a number` });
    } else if (prop.type === "integer" && typeof value === "number" && !Number.isInteger(value)) {
      errors.push({ field: name, message: `${name} must be an integer` });
    } else if (prop.type === "string" && typeof value !== "string") {
      errors.push({ field: name, message: `${name} must be a string` });
    } else if (prop.type === "boolean" && typeof value !== "boolean") {
      errors.push({ field: name, message: `${name} must be a boolean` });
    }
  }
  return errors;
}

/** Coerce raw form input strings into schema-typed metadata values. */
export function coerceField(spec: FieldSpec, raw: string | boolean): unknown {
  if (spec.kind === "boolean") return typeof raw === "boolean" ? raw : raw === "true";
  if (spec.kind === "number") {
    if (raw === "") return undefined;
    const parsed = Number(raw);
    return Number.isNaN(parsed) ? raw : parsed;
  }
  if (spec.kind === "enum" && spec.options && typeof raw === "string") {
    const numeric = spec.options.find((o) => typeof o === "number" && String(o) === raw);
    return numeric !== undefined ? numeric : raw === "" ? undefined : raw;
  }
  return raw === "" ? undefined : raw;
}
