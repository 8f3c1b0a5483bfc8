/**
 * Query form model derived from a fetched TBox.
 *
 * Every schema property becomes one row typed by its range; the row
 * holds raw input text until the demand is built, the way the inputs
 * themselves do.  Disabled rows never reach the demand.
 */

import type { Demand, Op, Scalar, TBoxProperty, TBoxSummary } from "./wire.js";
import { demandSchema } from "./wire.js";

export class FormError extends Error {}

export type RangeKind = "integer" | "decimal" | "text" | "boolean" | "object";

export interface FormRow {
  property: string;
  kind: RangeKind;
  /** Range class name for object properties, datatype name otherwise. */
  range: string;
  operators: Op[];
  enabled: boolean;
  op: Op;
  /** Raw input text; `high` only used when op is "range". */
  value: string;
  high: string;
  confidence: number;
}

export interface QueryForm {
  ontologyUri: string;
  concepts: string[];
  concept: string;
  conceptConfidence: number;
  rows: FormRow[];
}

function rangeKind(property: TBoxProperty): RangeKind {
  if (property.kind === "object") return "object";
  switch (property.range) {
    case "integer":
    case "decimal":
    case "boolean":
      return property.range;
    default:
      return "text";
  }
}

/** Numeric ranges compare and bracket; everything else only (mis)matches. */
export function operatorsForKind(kind: RangeKind): Op[] {
  if (kind === "integer" || kind === "decimal") {
    return ["eq", "ne", "lt", "le", "gt", "ge", "range"];
  }
  return ["eq", "ne"];
}

export function buildForm(tbox: TBoxSummary): QueryForm {
  const concepts = tbox.classes.map((c) => c.name);
  return {
    ontologyUri: tbox.ontology_uri,
    concepts,
    concept: concepts[0] ?? "",
    conceptConfidence: 10,
    rows: tbox.properties.map((p) => {
      const kind = rangeKind(p);
      return {
        property: p.name,
        kind,
        range: p.range,
        operators: operatorsForKind(kind),
        enabled: false,
        op: "eq",
        value: "",
        high: "",
        confidence: 10,
      };
    }),
  };
}

export function clampConfidence(value: number): number {
  if (!Number.isFinite(value)) return 10;
  return Math.min(10, Math.max(1, Math.round(value)));
}

/** The 1-10 weight read as the percentage the user cares about the condition. */
export function confidencePercent(confidence: number): string {
  return `${clampConfidence(confidence) * 100 / 10}%`;
}

function parseValue(row: FormRow, text: string): Scalar {
  const trimmed = text.trim();
  switch (row.kind) {
    case "integer": {
      if (!/^[+-]?\d+$/.test(trimmed)) {
        throw new FormError(`${row.property}: '${text}' is not an integer`);
      }
      return Number(trimmed);
    }
    case "decimal": {
      const parsed = Number(trimmed);
      if (trimmed === "" || Number.isNaN(parsed)) {
        throw new FormError(`${row.property}: '${text}' is not a number`);
      }
      return parsed;
    }
    case "boolean": {
      if (trimmed === "true") return true;
      if (trimmed === "false") return false;
      throw new FormError(`${row.property}: expected true or false`);
    }
    default: {
      if (trimmed === "") {
        throw new FormError(`${row.property}: value is empty`);
      }
      return trimmed;
    }
  }
}

/**
 * Build the demand from enabled rows and check it against the wire
 * schema, so no reachable form state can emit an invalid demand.
 */
export function buildDemand(form: QueryForm): Demand {
  if (!form.concept) {
    throw new FormError("pick a concept first");
  }
  const constraints = form.rows
    .filter((row) => row.enabled)
    .map((row) => {
      const value =
        row.op === "range"
          ? [parseValue(row, row.value), parseValue(row, row.high)]
          : parseValue(row, row.value);
      return {
        property: row.property,
        op: row.op,
        value,
        confidence: clampConfidence(row.confidence),
      };
    });
  return demandSchema.parse({
    concept: form.concept,
    concept_confidence: clampConfidence(form.conceptConfidence),
    constraints,
    ontology_uri: form.ontologyUri,
  });
}
