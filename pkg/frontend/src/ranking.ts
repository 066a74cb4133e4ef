// Ranking view-model: rows in the service's recommended order, values
// copied verbatim from the most recent score report.

import type { ScoreReport } from "./types.js";

export interface RankingRow {
  readonly position: number;
  readonly policy: string;
  /** Headline value: normalized score when present, raw EU otherwise. */
  readonly value: number;
  /** Raw expected utility, always shown alongside. */
  readonly raw: number;
  /** Change of the headline value versus the previous scoring, if any. */
  readonly delta: number | null;
  readonly tied: boolean;
}

export interface RankingView {
  readonly utility: string;
  readonly usesNormalized: boolean;
  readonly rows: RankingRow[];
}

function headlineScores(report: ScoreReport): Record<string, number> {
  return report.normalized ? report.normalized.scores : report.scores;
}

function tieGroups(report: ScoreReport): string[][] {
  return report.normalized ? report.normalized.ties : report.ties;
}

export function buildRankingView(report: ScoreReport, previous: ScoreReport | null = null): RankingView {
  const scores = headlineScores(report);
  const before = previous ? headlineScores(previous) : null;
  const tied = new Set(tieGroups(report).flat());
  const rows = report.recommendation.map((policy, index) => {
    const value = scores[policy];
    const raw = report.scores[policy];
    if (value === undefined || raw === undefined) {
      throw new Error(`score report lacks policy ${policy}`);
    }
    const previousValue = before ? before[policy] : undefined;
    return {
      position: index + 1,
      policy,
      value,
      raw,
      delta: previousValue === undefined ? null : value - previousValue,
      tied: tied.has(policy),
    };
  });
  return {
    utility: report.utility,
    usesNormalized: report.normalized !== undefined,
    rows,
  };
}
