/**
 * HTTP client for registry and provider nodes.
 *
 * Fan-out mirrors the reference client: check every provider's TBox
 * fingerprint before anything is timed, refuse to merge divergent
 * schemas, then collect raw counters sequentially (sync) or in
 * parallel (async) and normalize once.
 */

import { mergeResponses, type Score } from "./rank.js";
import {
  inboxResponseSchema,
  matchResponseSchema,
  parseWire,
  registrySearchSchema,
  tboxSummarySchema,
  type Demand,
  type InboxResponse,
  type MatchResponse,
  type RegistryEntry,
  type TBoxSummary,
} from "./wire.js";

export class HttpError extends Error {
  constructor(
    message: string,
    readonly status: number | null = null,
  ) {
    super(message);
  }
}

export class FanoutError extends Error {}

export type FanoutMode = "sync" | "async";

export interface ProviderTiming {
  providerId: string;
  address: string;
  matchmakingMs: number;
  latencyMs: number;
}

export interface FanoutResult {
  scores: Score[];
  timings: ProviderTiming[];
  failures: { address: string; error: string }[];
  totalWallMs: number;
}

const now = (): number =>
  typeof performance !== "undefined" ? performance.now() : Date.now();

function baseUrl(address: string): string {
  return address.startsWith("http://") || address.startsWith("https://")
    ? address.replace(/\/$/, "")
    : `http://${address}`;
}

async function getJson(url: string): Promise<unknown> {
  let response: Response;
  try {
    response = await fetch(url);
  } catch (err) {
    throw new HttpError(`${url} unreachable: ${String(err)}`);
  }
  if (!response.ok) {
    throw new HttpError(`${url} answered ${response.status}`, response.status);
  }
  return response.json();
}

async function postJson(url: string, body: unknown): Promise<unknown> {
  let response: Response;
  try {
    response = await fetch(url, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  } catch (err) {
    throw new HttpError(`${url} unreachable: ${String(err)}`);
  }
  if (!response.ok) {
    throw new HttpError(`${url} answered ${response.status}`, response.status);
  }
  return response.json();
}

export async function searchRegistry(
  registryUrl: string,
  keywords: string[],
): Promise<RegistryEntry[]> {
  const params = new URLSearchParams();
  for (const k of keywords) {
    if (k.trim()) params.append("keyword", k.trim());
  }
  const query = params.toString();
  const url = `${baseUrl(registryUrl)}/ontologies${query ? `?${query}` : ""}`;
  return parseWire(registrySearchSchema, await getJson(url), url);
}

export async function fetchTBox(address: string): Promise<TBoxSummary> {
  const url = `${baseUrl(address)}/tbox`;
  return parseWire(tboxSummarySchema, await getJson(url), url);
}

export async function matchOne(
  address: string,
  demand: Demand,
  requestId: string,
): Promise<MatchResponse> {
  const url = `${baseUrl(address)}/match`;
  const body = await postJson(url, { demand, request_id: requestId });
  return parseWire(matchResponseSchema, body, url);
}

export async function fetchInbox(address: string, userId: string): Promise<InboxResponse> {
  const url = `${baseUrl(address)}/subscriptions/${encodeURIComponent(userId)}/inbox`;
  return parseWire(inboxResponseSchema, await getJson(url), url);
}

/**
 * Send one demand to every address and merge the raw results.
 * Fingerprints are checked up front so a mixed net fails before any
 * matchmaking runs; individual failures downgrade to the failure list
 * as long as at least one provider answers.
 */
export async function fanout(
  addresses: string[],
  demand: Demand,
  mode: FanoutMode,
  requestId: string,
): Promise<FanoutResult> {
  const unique = [...new Set(addresses)];
  if (unique.length === 0) {
    throw new FanoutError("no providers to query");
  }

  const fingerprints = new Map<string, string>();
  const failures: { address: string; error: string }[] = [];
  for (const address of unique) {
    try {
      fingerprints.set(address, (await fetchTBox(address)).tbox_fingerprint);
    } catch (err) {
      failures.push({ address, error: String(err instanceof Error ? err.message : err) });
    }
  }
  const reachable = unique.filter((a) => fingerprints.has(a));
  if (reachable.length === 0) {
    throw new FanoutError(
      `no provider reachable: ${failures.map((f) => `${f.address}: ${f.error}`).join("; ")}`,
    );
  }
  const prints = new Set(fingerprints.values());
  if (prints.size > 1) {
    const detail = reachable
      .map((a) => `${a} advertises ${fingerprints.get(a)!.slice(0, 12)}...`)
      .join(", ");
    throw new FanoutError(`TBox mismatch: ${detail}; refusing to fan out`);
  }

  const timings: ProviderTiming[] = [];
  const responses: MatchResponse[] = [];
  const startedAt = now();

  const queryOne = async (address: string): Promise<void> => {
    const sentAt = now();
    try {
      const response = await matchOne(address, demand, requestId);
      const wall = now() - sentAt;
      responses.push(response);
      timings.push({
        providerId: response.provider_id,
        address,
        matchmakingMs: response.matchmaking_ms,
        latencyMs: Math.max(0, wall - response.matchmaking_ms),
      });
    } catch (err) {
      failures.push({ address, error: String(err instanceof Error ? err.message : err) });
    }
  };

  if (mode === "sync") {
    for (const address of reachable) {
      await queryOne(address);
    }
  } else {
    await Promise.all(reachable.map(queryOne));
  }
  const totalWallMs = now() - startedAt;

  if (responses.length === 0) {
    throw new FanoutError(
      `every provider failed: ${failures.map((f) => `${f.address}: ${f.error}`).join("; ")}`,
    );
  }
  return { scores: mergeResponses(responses), timings, failures, totalWallMs };
}
