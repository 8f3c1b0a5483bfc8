/**
 * DOM shell wiring the pure models to a page.
 *
 * All network access goes through an injected `Net` so tests can drive
 * the page with fakes; `bootstrap()` plugs in the real client.  One
 * query may be in flight at a time, and expanding results only toggles
 * classes, never the query state.
 */

import { fanout, fetchInbox, fetchTBox, searchRegistry, type FanoutMode, type FanoutResult } from "./client.js";
import { buildDemand, buildForm, confidencePercent, type QueryForm } from "./form.js";
import { History, refineFromValue } from "./refine.js";
import {
  flatView,
  groupedView,
  hideHardConflicts,
  providerSections,
  totalCount,
  type ResultEntry,
} from "./results.js";
import { inboxView } from "./inbox.js";
import type { OrderMode } from "./group.js";
import type { Demand, InboxResponse, RegistryEntry, Scalar, TBoxSummary } from "./wire.js";

export interface Net {
  searchRegistry(registryUrl: string, keywords: string[]): Promise<RegistryEntry[]>;
  fetchTBox(address: string): Promise<TBoxSummary>;
  fanout(
    addresses: string[],
    demand: Demand,
    mode: FanoutMode,
    requestId: string,
  ): Promise<FanoutResult>;
  fetchInbox(address: string, userId: string): Promise<InboxResponse>;
}

interface AppState {
  registryUrl: string;
  entries: RegistryEntry[];
  checked: Set<string>;
  form: QueryForm | null;
  history: History;
  lastResult: FanoutResult | null;
  strategy: "flat" | "grouping";
  order: OrderMode;
  mode: FanoutMode;
  busy: boolean;
  requestCounter: number;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class App {
  readonly state: AppState;

  constructor(
    private readonly doc: Document,
    private readonly net: Net,
    registryUrl: string,
  ) {
    this.state = {
      registryUrl,
      entries: [],
      checked: new Set(),
      form: null,
      history: new History(),
      lastResult: null,
      strategy: "grouping",
      order: "asc",
      mode: "sync",
      busy: false,
      requestCounter: 0,
    };
  }

  private pane(id: string): HTMLElement {
    const node = this.doc.getElementById(id);
    if (!node) throw new Error(`missing pane #${id}`);
    return node;
  }

  banner(message: string | null): void {
    const pane = this.pane("banner");
    pane.textContent = message ?? "";
    pane.classList.toggle("visible", message !== null);
  }

  notice(message: string | null): void {
    const pane = this.pane("notice");
    pane.textContent = message ?? "";
  }

  async discover(keywords: string[]): Promise<void> {
    this.banner(null);
    try {
      this.state.entries = await this.net.searchRegistry(this.state.registryUrl, keywords);
      this.state.checked = new Set(this.state.entries.map((e) => e.provider_address));
    } catch (err) {
      this.state.entries = [];
      this.state.checked.clear();
      this.banner(err instanceof Error ? err.message : String(err));
    }
    this.renderProviders();
  }

  async loadForm(): Promise<void> {
    const first = [...this.state.checked][0];
    if (!first) {
      this.banner("no provider selected");
      return;
    }
    this.banner(null);
    try {
      this.state.form = buildForm(await this.net.fetchTBox(first));
    } catch (err) {
      this.state.form = null;
      this.banner(err instanceof Error ? err.message : String(err));
    }
    this.state.history = new History();
    this.state.lastResult = null;
    this.renderForm();
    this.renderResults();
  }

  /** Submit the current form; pushes onto history unless replaying. */
  async submit(): Promise<void> {
    if (!this.state.form) return;
    let demand: Demand;
    try {
      demand = buildDemand(this.state.form);
    } catch (err) {
      this.banner(err instanceof Error ? err.message : String(err));
      return;
    }
    this.state.history.push(demand);
    await this.runQuery(demand);
  }

  async runQuery(demand: Demand): Promise<void> {
    if (this.state.busy) {
      this.notice("a query is already running");
      return;
    }
    if (this.state.checked.size === 0) {
      this.banner("no provider selected");
      return;
    }
    this.state.busy = true;
    this.banner(null);
    this.notice(null);
    try {
      this.state.requestCounter += 1;
      this.state.lastResult = await this.net.fanout(
        [...this.state.checked],
        demand,
        this.state.mode,
        `ui-${this.state.requestCounter}`,
      );
    } catch (err) {
      this.state.lastResult = null;
      this.banner(err instanceof Error ? err.message : String(err));
    } finally {
      this.state.busy = false;
    }
    this.renderResults();
  }

  async refine(property: string, value: Scalar): Promise<void> {
    const current = this.state.history.current;
    if (!current) return;
    const outcome = refineFromValue(current, property, value);
    if (!outcome.changed) {
      this.notice(outcome.notice);
      return;
    }
    this.state.history.push(outcome.demand);
    await this.runQuery(outcome.demand);
  }

  async goBack(): Promise<void> {
    const previous = this.state.history.back();
    if (!previous) {
      this.notice("nothing to go back to");
      return;
    }
    await this.runQuery(previous);
  }

  async refreshInbox(userId: string): Promise<void> {
    const first = [...this.state.checked][0];
    const pane = this.pane("inbox-list");
    pane.replaceChildren();
    if (!first || !userId.trim()) {
      this.notice("pick a provider and a user id first");
      return;
    }
    try {
      const items = inboxView(await this.net.fetchInbox(first, userId.trim()));
      if (items.length === 0) {
        pane.append(el(this.doc, "li", "empty", "inbox empty"));
        return;
      }
      for (const item of items) {
        const li = el(this.doc, "li", "inbox-item");
        li.append(
          el(this.doc, "span", "inbox-at", item.at),
          el(this.doc, "strong", "inbox-id", item.instanceId),
          el(this.doc, "span", "inbox-source", `via ${item.source}`),
        );
        pane.append(li);
      }
    } catch (err) {
      this.banner(err instanceof Error ? err.message : String(err));
    }
  }

  renderProviders(): void {
    const pane = this.pane("providers");
    pane.replaceChildren();
    if (this.state.entries.length === 0) {
      pane.append(el(this.doc, "p", "empty", "no ontologies found"));
      return;
    }
    for (const entry of this.state.entries) {
      const row = el(this.doc, "label", "provider-row");
      const box = el(this.doc, "input") as HTMLInputElement;
      box.type = "checkbox";
      box.checked = this.state.checked.has(entry.provider_address);
      box.addEventListener("change", () => {
        if (box.checked) this.state.checked.add(entry.provider_address);
        else this.state.checked.delete(entry.provider_address);
      });
      row.append(
        box,
        el(this.doc, "span", "provider-uri", entry.ontology_uri),
        el(this.doc, "span", "provider-address", entry.provider_address),
        el(this.doc, "span", "provider-keywords", entry.keywords.join(", ")),
      );
      pane.append(row);
    }
  }

  renderForm(): void {
    const pane = this.pane("form-rows");
    const conceptSelect = this.pane("concept") as HTMLSelectElement;
    pane.replaceChildren();
    conceptSelect.replaceChildren();
    const form = this.state.form;
    if (!form) return;
    for (const concept of form.concepts) {
      const option = el(this.doc, "option", undefined, concept) as HTMLOptionElement;
      option.value = concept;
      conceptSelect.append(option);
    }
    conceptSelect.value = form.concept;
    conceptSelect.addEventListener("change", () => {
      form.concept = conceptSelect.value;
    });
    for (const row of form.rows) {
      const tr = el(this.doc, "div", "form-row");
      tr.dataset.property = row.property;

      const toggle = el(this.doc, "input") as HTMLInputElement;
      toggle.type = "checkbox";
      toggle.className = "row-enabled";
      toggle.checked = row.enabled;
      toggle.addEventListener("change", () => {
        row.enabled = toggle.checked;
      });

      const name = el(this.doc, "span", "row-name", row.property);
      name.title = row.kind === "object" ? `identifier of ${row.range}` : row.range;

      const opSelect = el(this.doc, "select", "row-op") as HTMLSelectElement;
      for (const op of row.operators) {
        const option = el(this.doc, "option", undefined, op) as HTMLOptionElement;
        option.value = op;
        opSelect.append(option);
      }
      opSelect.value = row.op;

      const value = el(this.doc, "input", "row-value") as HTMLInputElement;
      value.placeholder = row.kind === "object" ? `${row.range} id` : row.kind;
      value.addEventListener("input", () => {
        row.value = value.value;
      });

      const high = el(this.doc, "input", "row-high") as HTMLInputElement;
      high.placeholder = "high end";
      high.hidden = row.op !== "range";
      high.addEventListener("input", () => {
        row.high = high.value;
      });
      opSelect.addEventListener("change", () => {
        row.op = opSelect.value as typeof row.op;
        high.hidden = row.op !== "range";
      });

      const slider = el(this.doc, "input", "row-confidence") as HTMLInputElement;
      slider.type = "range";
      slider.min = "1";
      slider.max = "10";
      slider.value = String(row.confidence);
      const pct = el(this.doc, "span", "row-percent", confidencePercent(row.confidence));
      slider.addEventListener("input", () => {
        row.confidence = Number(slider.value);
        pct.textContent = confidencePercent(row.confidence);
      });

      tr.append(toggle, name, opSelect, value, high, slider, pct);
      pane.append(tr);
    }
  }

  private entryNode(entry: ResultEntry): HTMLElement {
    const li = el(this.doc, "li", "result");
    const head = el(this.doc, "div", "result-head");
    head.append(
      el(this.doc, "strong", "result-id", entry.instanceId),
      el(this.doc, "span", "result-rank", `rank ${entry.rankText}`),
    );
    if (entry.providerBadge) {
      head.append(el(this.doc, "span", "result-provider", entry.providerBadge));
    }
    const detail = el(this.doc, "dl", "result-detail");
    for (const [property, rendered] of entry.details) {
      const dt = el(this.doc, "dt", undefined, property);
      const dd = el(this.doc, "dd");
      const clickable = el(this.doc, "button", "value-chip", rendered);
      clickable.type = "button";
      clickable.dataset.property = property;
      clickable.dataset.value = rendered;
      clickable.addEventListener("click", () => {
        // Refine on the first raw value; multi-valued chips refine on the join.
        void this.refine(property, inferScalar(rendered));
      });
      dd.append(clickable);
      detail.append(dt, dd);
    }
    head.addEventListener("click", () => {
      li.classList.toggle("expanded");
    });
    li.append(head, detail);
    return li;
  }

  renderResults(): void {
    const pane = this.pane("results");
    pane.replaceChildren();
    const result = this.state.lastResult;
    if (!result) {
      pane.append(el(this.doc, "p", "empty", "run a query to see results"));
      return;
    }
    if (result.scores.length === 0) {
      pane.append(el(this.doc, "p", "empty", "no matches"));
      return;
    }
    const demand = this.state.history.current;
    const board = demand
      ? hideHardConflicts(demand, result.scores)
      : { shown: result.scores, hidden: [] };

    if (board.shown.length === 0) {
      pane.append(el(this.doc, "p", "empty", "no matches"));
    } else if (this.state.strategy === "grouping") {
      const groups = groupedView(board.shown, this.state.order);
      const countLine = el(
        this.doc,
        "p",
        "count-line",
        `${totalCount(groups)} results in ${groups.length} groups`,
      );
      pane.append(countLine);
      for (const group of groups) {
        const section = el(this.doc, "section", "group");
        section.append(
          el(this.doc, "h3", "group-label", `${group.label} - ${group.countText}`),
        );
        const list = el(this.doc, "ul", "group-members");
        for (const entry of group.members) list.append(this.entryNode(entry));
        section.append(list);
        pane.append(section);
      }
    } else {
      const entries = flatView(board.shown);
      pane.append(el(this.doc, "p", "count-line", `${entries.length} results`));
      const list = el(this.doc, "ul", "flat-list");
      for (const entry of entries) list.append(this.entryNode(entry));
      pane.append(list);
    }

    if (board.hidden.length > 0) {
      pane.append(
        el(
          this.doc,
          "p",
          "conflicts-hidden",
          `${board.hidden.length} conflicting result${board.hidden.length === 1 ? "" : "s"} hidden`,
        ),
      );
    }

    const sections = providerSections(board.shown);
    if (sections.length > 0) {
      const aside = el(this.doc, "section", "providers-aside");
      aside.append(el(this.doc, "h3", undefined, "By provider"));
      for (const section of sections) {
        aside.append(
          el(
            this.doc,
            "p",
            "provider-section",
            `${section.providerId} (${section.ontologyUri}): ${section.members.length} result${section.members.length === 1 ? "" : "s"}`,
          ),
        );
      }
      pane.append(aside);
    }

    const timing = el(this.doc, "section", "timing");
    timing.append(el(this.doc, "h3", undefined, "Timing"));
    for (const row of result.timings) {
      timing.append(
        el(
          this.doc,
          "p",
          "timing-row",
          `${row.providerId} (${row.address}): matchmaking ${row.matchmakingMs.toFixed(1)} ms, latency ${row.latencyMs.toFixed(1)} ms`,
        ),
      );
    }
    timing.append(
      el(this.doc, "p", "timing-total", `total ${result.totalWallMs.toFixed(1)} ms`),
    );
    for (const failure of result.failures) {
      timing.append(
        el(this.doc, "p", "timing-failure", `failed ${failure.address}: ${failure.error}`),
      );
    }
    pane.append(timing);
  }

  wireControls(): void {
    const doc = this.doc;
    (doc.getElementById("registry-url") as HTMLInputElement).value = this.state.registryUrl;
    doc.getElementById("discover")?.addEventListener("click", () => {
      this.state.registryUrl = (doc.getElementById("registry-url") as HTMLInputElement).value;
      const keywords = (doc.getElementById("keywords") as HTMLInputElement).value
        .split(/[,\s]+/)
        .filter(Boolean);
      void this.discover(keywords);
    });
    doc.getElementById("load-form")?.addEventListener("click", () => void this.loadForm());
    doc.getElementById("run-query")?.addEventListener("click", () => void this.submit());
    doc.getElementById("go-back")?.addEventListener("click", () => void this.goBack());
    const strategy = doc.getElementById("strategy") as HTMLSelectElement;
    strategy.addEventListener("change", () => {
      this.state.strategy = strategy.value as "flat" | "grouping";
      this.renderResults();
    });
    const order = doc.getElementById("group-order") as HTMLSelectElement;
    order.addEventListener("change", () => {
      this.state.order = order.value as OrderMode;
      this.renderResults();
    });
    const mode = doc.getElementById("query-mode") as HTMLSelectElement;
    mode.addEventListener("change", () => {
      this.state.mode = mode.value as FanoutMode;
    });
    doc.getElementById("inbox-refresh")?.addEventListener("click", () => {
      const userId = (doc.getElementById("inbox-user") as HTMLInputElement).value;
      void this.refreshInbox(userId);
    });
  }
}

/** Chips carry rendered text; recover numbers and booleans for the constraint. */
export function inferScalar(rendered: string): Scalar {
  if (rendered === "true") return true;
  if (rendered === "false") return false;
  if (/^[+-]?\d+$/.test(rendered)) return Number(rendered);
  if (/^[+-]?\d*\.\d+$/.test(rendered)) return Number(rendered);
  return rendered;
}

export function bootstrap(doc: Document = document): App {
  const params = new URLSearchParams(doc.defaultView?.location.search ?? "");
  const registry = params.get("registry") ?? "http://127.0.0.1:7000";
  const app = new App(doc, { searchRegistry, fetchTBox, fanout, fetchInbox }, registry);
  app.wireControls();
  return app;
}
