/**
 * Parsers for every payload the client reads or writes.
 *
 * Each incoming body goes through a zod schema so a malformed response
 * turns into one WireError with the offending endpoint in the message,
 * which the shell renders as a banner instead of half-drawn views.
 */

import { z } from "zod";

export class WireError extends Error {}

const scalar = z.union([z.string(), z.number(), z.boolean()]);
export type Scalar = z.infer<typeof scalar>;

export const OPS = ["eq", "ne", "lt", "le", "gt", "ge", "range"] as const;
export type Op = (typeof OPS)[number];

export const constraintSchema = z
  .object({
    property: z.string().min(1),
    op: z.enum(OPS),
    value: z.unknown(),
    confidence: z.number().int().min(1).max(10),
  })
  .strict();
export type Constraint = z.infer<typeof constraintSchema>;

export const demandSchema = z
  .object({
    concept: z.string().min(1),
    concept_confidence: z.number().int().min(1).max(10),
    constraints: z.array(constraintSchema),
    ontology_uri: z.string().min(1),
  })
  .strict();
export type Demand = z.infer<typeof demandSchema>;

const tboxClassSchema = z.object({
  name: z.string(),
  equivalent_to: z.array(z.string()).default([]),
  subclass_of: z.array(z.string()).default([]),
  disjoint_with: z.array(z.string()).default([]),
});

const tboxPropertySchema = z.object({
  name: z.string(),
  kind: z.enum(["datatype", "object"]),
  range: z.string(),
  functional: z.boolean().default(false),
  inverse_of: z.string().nullable().default(null),
  max_cardinality: z.number().int().nullable().default(null),
});
export type TBoxProperty = z.infer<typeof tboxPropertySchema>;

export const tboxSummarySchema = z.object({
  ontology_uri: z.string(),
  tbox_fingerprint: z.string(),
  keywords: z.array(z.string()),
  classes: z.array(tboxClassSchema),
  properties: z.array(tboxPropertySchema),
});
export type TBoxSummary = z.infer<typeof tboxSummarySchema>;

export const rawMatchSchema = z.object({
  instance_id: z.string(),
  n_par: z.number().min(0),
  n_pot: z.number().int().min(0),
  n_add: z.number().int().min(0),
  additional_properties: z.array(z.string()),
  values: z.record(z.array(scalar)).default({}),
});
export type RawMatch = z.infer<typeof rawMatchSchema>;

export const matchResponseSchema = z.object({
  provider_id: z.string(),
  ontology_uri: z.string(),
  tbox_fingerprint: z.string(),
  results: z.array(rawMatchSchema),
  matchmaking_ms: z.number().min(0),
  request_id: z.string(),
});
export type MatchResponse = z.infer<typeof matchResponseSchema>;

export const registryEntrySchema = z.object({
  ontology_uri: z.string(),
  keywords: z.array(z.string()),
  tbox_fingerprint: z.string(),
  provider_address: z.string(),
});
export type RegistryEntry = z.infer<typeof registryEntrySchema>;

export const registrySearchSchema = z.array(registryEntrySchema);

export const inboxEntrySchema = z.object({
  instance_id: z.string(),
  query_id: z.string(),
  source: z.string(),
  at: z.string(),
  values: z.record(z.array(scalar)).default({}),
});
export type InboxEntry = z.infer<typeof inboxEntrySchema>;

export const inboxResponseSchema = z.object({
  user_id: z.string(),
  entries: z.array(inboxEntrySchema),
});
export type InboxResponse = z.infer<typeof inboxResponseSchema>;

/** Parse `body` with `schema`, naming `where` in the failure. */
export function parseWire<S extends z.ZodTypeAny>(
  schema: S,
  body: unknown,
  where: string,
): z.output<S> {
  const out = schema.safeParse(body);
  if (!out.success) {
    const first = out.error.issues[0];
    const path = first && first.path.length ? ` at ${first.path.join(".")}` : "";
    const detail = first ? `${first.message}${path}` : "unknown shape";
    throw new WireError(`malformed payload from ${where}: ${detail}`);
  }
  return out.data;
}
