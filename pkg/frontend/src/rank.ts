/**
 * Client-side normalization of raw counters, identical to the server's
 * single-matchmaker pass: components divide by the batch maximum, the
 * additional-knowledge term enters as a bonus and drops out when no
 * supply carries extras.  Merging pools every provider's raw counters
 * first and normalizes once, so a distributed query ranks exactly like
 * a centralized one over the union of supplies.
 */

import type { MatchResponse, RawMatch, Scalar } from "./wire.js";

export interface Provenance {
  provider_id: string;
  ontology_uri: string;
}

export interface Score {
  instance_id: string;
  n_par: number;
  n_pot: number;
  n_add: number;
  additional_properties: string[];
  rank_par: number;
  rank_pot: number;
  rank_add: number;
  rank: number;
  values: Record<string, Scalar[]>;
  provenance: Provenance | null;
}

export function normalizeScores(
  raws: RawMatch[],
  tags?: (Provenance | null)[],
): Score[] {
  if (raws.length === 0) return [];
  const tagged = tags ?? raws.map(() => null);
  let maxPar = 0;
  let maxPot = 0;
  let maxAdd = 0;
  for (const r of raws) {
    if (r.n_par > maxPar) maxPar = r.n_par;
    if (r.n_pot > maxPot) maxPot = r.n_pot;
    if (r.n_add > maxAdd) maxAdd = r.n_add;
  }
  const scores: Score[] = raws.map((raw, i) => {
    const rankPar = maxPar ? raw.n_par / maxPar : 0;
    const rankPot = maxPot ? raw.n_pot / maxPot : 0;
    const rankAdd = maxAdd ? raw.n_add / maxAdd : 0;
    const bonus = maxAdd ? 1 - rankAdd : 0;
    return {
      instance_id: raw.instance_id,
      n_par: raw.n_par,
      n_pot: raw.n_pot,
      n_add: raw.n_add,
      additional_properties: [...raw.additional_properties],
      rank_par: rankPar,
      rank_pot: rankPot,
      rank_add: rankAdd,
      rank: (rankPar + rankPot + bonus) / 3,
      values: raw.values,
      provenance: tagged[i] ?? null,
    };
  });
  scores.sort((a, b) => {
    if (a.rank !== b.rank) return a.rank - b.rank;
    if (a.instance_id !== b.instance_id) return a.instance_id < b.instance_id ? -1 : 1;
    const ap = a.provenance?.provider_id ?? "";
    const bp = b.provenance?.provider_id ?? "";
    return ap < bp ? -1 : ap > bp ? 1 : 0;
  });
  return scores;
}

/** Merge several providers' raw responses into one ranked list. */
export function mergeResponses(responses: MatchResponse[]): Score[] {
  const raws: RawMatch[] = [];
  const tags: Provenance[] = [];
  for (const resp of responses) {
    for (const raw of resp.results) {
      raws.push(raw);
      tags.push({ provider_id: resp.provider_id, ontology_uri: resp.ontology_uri });
    }
  }
  return normalizeScores(raws, tags);
}
