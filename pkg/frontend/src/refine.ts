/**
 * Click-to-refine: a value learned from an expanded result becomes an
 * equality constraint on a fresh demand, and the history stack keeps
 * every demand the user came through so back-navigation can replay it.
 */

import type { Constraint, Demand, Scalar } from "./wire.js";

export interface RefineOutcome {
  demand: Demand;
  /** False with a notice when the click would change nothing. */
  changed: boolean;
  notice: string | null;
}

function sameConstraint(c: Constraint, property: string, value: Scalar): boolean {
  return c.property === property && c.op === "eq" && c.value === value;
}

export function refineFromValue(demand: Demand, property: string, value: Scalar): RefineOutcome {
  if (demand.constraints.some((c) => sameConstraint(c, property, value))) {
    return {
      demand,
      changed: false,
      notice: `${property} = ${String(value)} is already in the query`,
    };
  }
  return {
    demand: {
      ...demand,
      constraints: [
        ...demand.constraints,
        { property, op: "eq", value, confidence: 10 },
      ],
    },
    changed: true,
    notice: null,
  };
}

/** Demands visited in order; the last entry is the one on screen. */
export class History {
  private stack: Demand[] = [];

  get depth(): number {
    return this.stack.length;
  }

  get current(): Demand | null {
    return this.stack.length ? this.stack[this.stack.length - 1]! : null;
  }

  push(demand: Demand): void {
    this.stack.push(demand);
  }

  /** Drop the current demand and return the previous one, if any. */
  back(): Demand | null {
    if (this.stack.length < 2) return null;
    this.stack.pop();
    return this.current;
  }

  /** Serializable copy, oldest first; replaying it rebuilds identical views. */
  entries(): Demand[] {
    return this.stack.map((d) => structuredClone(d));
  }

  static replay(entries: Demand[]): History {
    const history = new History();
    for (const d of entries) history.push(structuredClone(d));
    return history;
  }
}
