// Shared fixtures for the unit tests: a small synthetic adequacy report
// and document (deliberately not the bundled food model).

import type { AdequacyReport, ModelDocument, ScoreReport } from "../src/types.js";

export function adequacyFixture(): AdequacyReport {
  return {
    version: 1,
    kind: "adequacy",
    independences: {
      version: 1,
      kind: "independences",
      utility: "u",
      error_policy: "truncate",
      assumes_quasi_independence: true,
      count: 1,
      conditions: [
        {
          monomial: "t01 t12",
          factors: [
            { panel: "A", monomial: "t01" },
            { panel: "B", monomial: "t12" },
          ],
          sources: [1],
          text: "E(t01 t12) = E(t01) E(t12)",
        },
      ],
    },
    summaries: {
      version: 1,
      kind: "summaries",
      utility: "u",
      error_policy: "truncate",
      count: 3,
      summaries: [
        { panel: "A", monomial: "t01", policies: ["p0", "p1"] },
        { panel: "A", monomial: "psi1", policies: ["p0", "p1"] },
        { panel: "B", monomial: "t02 t12", policies: ["p0", "p1"] },
      ],
      max_orders: { t01: 1, t12: 1, psi1: 1 },
      panel_orders: { A: { t01: 1, psi1: 1 }, B: { t12: 1 } },
    },
  };
}

export function documentFixture(): ModelDocument {
  return {
    vertices: [1, 2],
    policies: ["p0", "p1"],
    utility: { u: {} },
    moments: {
      mode: "mean_variance",
      entries: {
        t01: { mean: { p0: 1, p1: 2 }, variance: 0.5 },
        t02: { mean: 3 },
        t12: { mean: -1 },
        psi1: { mean: 0.25 },
        psi2: { mean: 1 },
      },
    },
  };
}

export function scoreFixture(values: Record<string, number>, ranking: string[]): ScoreReport {
  return {
    version: 1,
    kind: "score",
    utility: "u",
    error_policy: "truncate",
    closure: "gaussian",
    scores: values,
    ranking,
    ties: [],
    recommendation: ranking,
  };
}
