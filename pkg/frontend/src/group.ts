/**
 * Grouping by additional-property signature, mirroring the server's
 * presentation: groups order by signature cardinality (asc or desc),
 * ties by the comma-joined names, members keep ranked order.
 */

import type { Score } from "./rank.js";

export type OrderMode = "asc" | "desc";

export interface Group {
  signature: string[];
  members: Score[];
}

export function groupByAdditional(scores: Score[], orderMode: OrderMode = "asc"): Group[] {
  const buckets = new Map<string, Group>();
  for (const s of scores) {
    const key = s.additional_properties.join(",");
    let group = buckets.get(key);
    if (!group) {
      group = { signature: [...s.additional_properties], members: [] };
      buckets.set(key, group);
    }
    group.members.push(s);
  }
  const sign = orderMode === "desc" ? -1 : 1;
  return [...buckets.values()].sort((a, b) => {
    if (a.signature.length !== b.signature.length) {
      return sign * (a.signature.length - b.signature.length);
    }
    const aj = a.signature.join(",");
    const bj = b.signature.join(",");
    return aj < bj ? -1 : aj > bj ? 1 : 0;
  });
}

/** Header text naming the signature set, e.g. "Group (cost, model)". */
export function groupLabel(group: Group): string {
  if (group.signature.length === 0) return "Group (nothing additional)";
  return `Group (${group.signature.join(", ")})`;
}
