/**
 * View models for the results pane: flat ranked entries, signature
 * groups, per-provider sections, and the timing panel.  Pure data in,
 * pure data out; the DOM layer only walks these.
 */

import { groupByAdditional, groupLabel, type Group, type OrderMode } from "./group.js";
import type { Score } from "./rank.js";
import type { Demand, Scalar } from "./wire.js";

export interface ResultEntry {
  instanceId: string;
  rankText: string;
  rank: number;
  nPar: number;
  nPot: number;
  nAdd: number;
  providerBadge: string | null;
  /** Property -> rendered values, sorted by property name. */
  details: [string, string][];
}

export interface GroupView {
  label: string;
  countText: string;
  members: ResultEntry[];
}

export interface ProviderSection {
  providerId: string;
  ontologyUri: string;
  members: ResultEntry[];
}

export interface TimingRow {
  providerId: string;
  address: string;
  matchmakingMs: number;
  latencyMs: number;
}

export function renderValue(values: Scalar[]): string {
  return values.map((v) => String(v)).join(", ");
}

export interface Board {
  shown: Score[];
  hidden: Score[];
}

/**
 * Split a ranked board into displayable results and hard conflicts.
 *
 * The engine keeps conflicting supplies on the board and demotes them
 * through n_par, which is right for soft preferences: a constraint
 * weighted 3 still wants its violators listed, just lower.  A
 * full-confidence equality is different; it is the shape every
 * click-to-refine step produces, and a result whose asserted values
 * contradict it is exactly what the user asked not to see.  Those move
 * to `hidden` so the view can count them without listing them.
 *
 * Only provable violations hide: a result that asserts nothing for the
 * property stays shown (absence is potential, not conflict), and
 * operators other than eq keep their server-side ranking untouched.
 */
export function hideHardConflicts(demand: Demand, scores: Score[]): Board {
  const hardEq = demand.constraints.filter((c) => c.op === "eq" && c.confidence === 10);
  if (hardEq.length === 0) return { shown: scores, hidden: [] };
  const shown: Score[] = [];
  const hidden: Score[] = [];
  for (const score of scores) {
    const violates = hardEq.some((c) => {
      const asserted = score.values[c.property];
      return asserted !== undefined && asserted.length > 0 && !asserted.includes(c.value as Scalar);
    });
    (violates ? hidden : shown).push(score);
  }
  return { shown, hidden };
}

export function toEntry(score: Score): ResultEntry {
  return {
    instanceId: score.instance_id,
    rankText: score.rank.toFixed(4),
    rank: score.rank,
    nPar: score.n_par,
    nPot: score.n_pot,
    nAdd: score.n_add,
    providerBadge: score.provenance ? score.provenance.provider_id : null,
    details: Object.keys(score.values)
      .sort()
      .map((p) => [p, renderValue(score.values[p] ?? [])]),
  };
}

export function flatView(scores: Score[]): ResultEntry[] {
  return scores.map(toEntry);
}

export function groupedView(scores: Score[], order: OrderMode): GroupView[] {
  return groupByAdditional(scores, order).map((group: Group) => ({
    label: groupLabel(group),
    countText: `${group.members.length} result${group.members.length === 1 ? "" : "s"}`,
    members: group.members.map(toEntry),
  }));
}

/** One section per provider, in first-seen order, for fan-out payloads. */
export function providerSections(scores: Score[]): ProviderSection[] {
  const sections = new Map<string, ProviderSection>();
  for (const score of scores) {
    const tag = score.provenance;
    if (!tag) continue;
    let section = sections.get(tag.provider_id);
    if (!section) {
      section = { providerId: tag.provider_id, ontologyUri: tag.ontology_uri, members: [] };
      sections.set(tag.provider_id, section);
    }
    section.members.push(toEntry(score));
  }
  return [...sections.values()];
}

/** Rendered counts must equal payload counts; callers assert with this. */
export function totalCount(groups: GroupView[]): number {
  return groups.reduce((n, g) => n + g.members.length, 0);
}
