/**
 * End-to-end run against real services: a registry and two providers
 * spawned from the installed CLI, driven through the same client
 * functions the page uses.  Skipped nothing, faked nothing; every
 * assertion observes live HTTP traffic.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { fanout, fetchTBox, searchRegistry } from "../src/client.js";
import { buildDemand, buildForm } from "../src/form.js";
import { groupByAdditional } from "../src/group.js";
import { refineFromValue } from "../src/refine.js";
import { hideHardConflicts } from "../src/results.js";
import type { Demand } from "../src/wire.js";

const procs: ChildProcess[] = [];
let workDir = "";
let registryUrl = "";
let addrA = "";
let addrB = "";

function launch(args: string[]): Promise<string> {
  return new Promise((resolve, reject) => {
    const proc = spawn("ontomatch", args, {
      stdio: ["ignore", "pipe", "pipe"],
      env: { ...process.env, PYTHONUNBUFFERED: "1" },
    });
    procs.push(proc);
    let seen = "";
    const timer = setTimeout(() => {
      reject(new Error(`service never bound: ontomatch ${args.join(" ")}\n${seen}`));
    }, 30_000);
    const sniff = (chunk: Buffer) => {
      seen += chunk.toString();
      const hit = seen.match(/listening on ([\d.]+:\d+)/);
      if (hit) {
        clearTimeout(timer);
        resolve(hit[1]!);
      }
    };
    proc.stdout!.on("data", sniff);
    proc.stderr!.on("data", sniff);
    proc.on("error", (err) => {
      clearTimeout(timer);
      reject(err);
    });
    proc.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`service exited early (${code}): ontomatch ${args.join(" ")}\n${seen}`));
    });
  });
}

/** Copy the laptop document under a new uri with re-tagged instance ids. */
function deriveOntology(tag: string): string {
  const source = JSON.parse(
    readFileSync(new URL("../../tests/fixtures/laptop.onto.json", import.meta.url), "utf-8"),
  );
  source.uri = `http://shopping.example.org/computer-${tag}.onto.json`;
  for (const instance of source.instances) {
    instance.id = `${tag}:${instance.id}`;
  }
  const path = join(workDir, `laptop-${tag}.onto.json`);
  writeFileSync(path, JSON.stringify(source));
  return path;
}

function whiteWarrantyDemand(ontologyUri: string): Demand {
  return {
    concept: "Laptop",
    concept_confidence: 10,
    constraints: [
      { property: "colour", op: "eq", value: "white", confidence: 10 },
      { property: "warrantyYears", op: "ge", value: 2, confidence: 10 },
    ],
    ontology_uri: ontologyUri,
  };
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "ontomatch-webui-e2e-"));
  const registryAddr = await launch(["serve-registry", "--listen", "127.0.0.1:0"]);
  registryUrl = `http://${registryAddr}`;
  addrA = await launch([
    "serve-provider",
    "--listen",
    "127.0.0.1:0",
    "--ontology",
    deriveOntology("a"),
    "--provider-id",
    "shopA",
    "--registry",
    registryUrl,
  ]);
  addrB = await launch([
    "serve-provider",
    "--listen",
    "127.0.0.1:0",
    "--ontology",
    deriveOntology("b"),
    "--provider-id",
    "shopB",
    "--registry",
    registryUrl,
  ]);
}, 120_000);

afterAll(async () => {
  await Promise.all(
    procs.map(
      (proc) =>
        new Promise<void>((resolve) => {
          if (proc.exitCode !== null) return resolve();
          proc.on("exit", () => resolve());
          proc.kill("SIGTERM");
          setTimeout(() => {
            if (proc.exitCode === null) proc.kill("SIGKILL");
            resolve();
          }, 5_000).unref();
        }),
    ),
  );
  if (workDir) rmSync(workDir, { recursive: true, force: true });
});

describe("live marketplace", () => {
  it("finds both shops through the registry", async () => {
    const entries = await searchRegistry(registryUrl, ["laptop"]);
    expect(entries).toHaveLength(2);
    const addresses = entries.map((e) => e.provider_address).sort();
    expect(addresses).toEqual([addrA, addrB].sort());
    // Same TBox on both sides, so one shared fingerprint.
    expect(new Set(entries.map((e) => e.tbox_fingerprint)).size).toBe(1);
  });

  it("builds the full query form from a live TBox", async () => {
    const form = buildForm(await fetchTBox(addrA));
    expect(form.rows).toHaveLength(6);
    expect(form.rows.map((r) => r.property)).toEqual([
      "model",
      "warrantyYears",
      "colour",
      "cost",
      "operatingSystem",
      "hasSerialNumber",
    ]);
    expect(form.concepts).toContain("Laptop");
  });

  it("fans out, refines away the MacOS laptop, and groups by signature", async () => {
    const tbox = await fetchTBox(addrA);
    const demand = whiteWarrantyDemand(tbox.ontology_uri);
    const wide = await fanout([addrA, addrB], demand, "sync", "e2e-wide");
    expect(wide.failures).toEqual([]);
    expect(wide.scores).toHaveLength(8);
    const wideIds = wide.scores.map((s) => s.instance_id);
    expect(wideIds).toContain("a:Laptop#2");
    expect(wideIds).toContain("b:Laptop#2");

    const refined = refineFromValue(demand, "operatingSystem", "ArchLinux 2009.02");
    expect(refined.changed).toBe(true);
    const narrow = await fanout([addrA, addrB], refined.demand, "sync", "e2e-narrow");
    // The engine keeps the MacOS laptops, demoted to the bottom with a
    // full conflict each; the display layer is what drops them.
    expect(narrow.scores).toHaveLength(8);
    const macs = narrow.scores.filter((s) => s.instance_id.endsWith("Laptop#2"));
    expect(macs).toHaveLength(2);
    for (const mac of macs) {
      expect(mac.n_par).toBe(1);
    }
    expect(narrow.scores.slice(6).map((s) => s.instance_id).sort()).toEqual([
      "a:Laptop#2",
      "b:Laptop#2",
    ]);

    const board = hideHardConflicts(refined.demand, narrow.scores);
    const shownIds = board.shown.map((s) => s.instance_id);
    expect(shownIds).toHaveLength(6);
    expect(shownIds.some((id) => id.endsWith("Laptop#2"))).toBe(false);
    for (const score of board.shown) {
      expect(score.values["operatingSystem"]).toEqual(["ArchLinux 2009.02"]);
    }
    expect(board.hidden.map((s) => s.instance_id).sort()).toEqual(["a:Laptop#2", "b:Laptop#2"]);

    const groups = groupByAdditional(wide.scores, "asc");
    expect(groups.map((g) => g.signature.join(","))).toEqual([
      "cost,model,operatingSystem",
      "cost,hasSerialNumber,model,operatingSystem",
    ]);
  });

  it("returns the same board sync and async", async () => {
    const tbox = await fetchTBox(addrA);
    const demand = whiteWarrantyDemand(tbox.ontology_uri);
    const [sync, async_] = await Promise.all([
      fanout([addrA, addrB], demand, "sync", "e2e-sync"),
      fanout([addrA, addrB], demand, "async", "e2e-async"),
    ]);
    const strip = (scores: typeof sync.scores) =>
      scores.map((s) => ({
        id: s.instance_id,
        rank: s.rank,
        provider: s.provenance?.provider_id,
      }));
    expect(strip(async_.scores)).toEqual(strip(sync.scores));
    expect(sync.timings).toHaveLength(2);
    expect(async_.timings).toHaveLength(2);
  });

  it("reports per-provider matchmaking and transport latency", async () => {
    const tbox = await fetchTBox(addrA);
    const result = await fanout(
      [addrA],
      whiteWarrantyDemand(tbox.ontology_uri),
      "sync",
      "e2e-timing",
    );
    expect(result.timings).toHaveLength(1);
    const row = result.timings[0]!;
    expect(row.providerId).toBe("shopA");
    expect(row.matchmakingMs).toBeGreaterThan(0);
    expect(row.latencyMs).toBeGreaterThanOrEqual(0);
    expect(result.totalWallMs).toBeGreaterThanOrEqual(row.matchmakingMs);
  });

  it("builds a demand from the live form and gets the same board as the handwritten one", async () => {
    const form = buildForm(await fetchTBox(addrA));
    const colour = form.rows.find((r) => r.property === "colour")!;
    colour.enabled = true;
    colour.value = "white";
    const warranty = form.rows.find((r) => r.property === "warrantyYears")!;
    warranty.enabled = true;
    warranty.op = "ge";
    warranty.value = "2";
    const demand = buildDemand(form);
    const viaForm = await fanout([addrA], demand, "sync", "e2e-form");
    const viaHand = await fanout(
      [addrA],
      whiteWarrantyDemand(demand.ontology_uri),
      "sync",
      "e2e-hand",
    );
    expect(viaForm.scores.map((s) => [s.instance_id, s.rank])).toEqual(
      viaHand.scores.map((s) => [s.instance_id, s.rank]),
    );
  });
});
