/** Push-inbox view: one line per notification with its source label. */

import type { InboxResponse } from "./wire.js";
import { renderValue } from "./results.js";

export interface InboxItem {
  instanceId: string;
  source: string;
  at: string;
  details: [string, string][];
}

export function inboxView(payload: InboxResponse): InboxItem[] {
  return payload.entries.map((e) => ({
    instanceId: e.instance_id,
    source: e.source,
    at: e.at,
    details: Object.keys(e.values)
      .sort()
      .map((p) => [p, renderValue(e.values[p] ?? [])]),
  }));
}
