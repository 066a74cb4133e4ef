// Payload shapes of the scoring service. These mirror the JSON reports
// byte-for-byte; the console never recomputes any of these numbers.

export interface SessionResponse {
  readonly version: number;
  readonly session?: string;
  readonly diagnostics: string[];
}

export interface SummaryRow {
  readonly panel: string;
  readonly monomial: string;
  readonly policies: string[];
}

export interface ConditionFactor {
  readonly panel: string;
  readonly monomial: string;
}

export interface ConditionRow {
  readonly monomial: string;
  readonly factors: ConditionFactor[];
  readonly sources: number[];
  readonly text: string;
}

export interface IndependencesReport {
  readonly version: number;
  readonly kind: "independences";
  readonly utility: string;
  readonly error_policy: string;
  readonly assumes_quasi_independence: boolean;
  readonly count: number;
  readonly conditions: ConditionRow[];
}

export interface SummariesReport {
  readonly version: number;
  readonly kind: "summaries";
  readonly utility: string;
  readonly error_policy: string;
  readonly count: number;
  readonly summaries: SummaryRow[];
  readonly max_orders: Record<string, number>;
  readonly panel_orders: Record<string, Record<string, number>>;
}

export interface AdequacyReport {
  readonly version: number;
  readonly kind: "adequacy";
  readonly independences: IndependencesReport;
  readonly summaries: SummariesReport;
}

export interface NormalizedSection {
  readonly spread: number;
  readonly scores: Record<string, number>;
  readonly ranking: string[];
  readonly ties: string[][];
  readonly constant: Record<string, number>;
  readonly ranges: Record<string, { low: number; high: number; scale: number; shift: number }>;
}

export interface ScoreReport {
  readonly version: number;
  readonly kind: string;
  readonly utility: string;
  readonly error_policy: string;
  readonly closure: string;
  readonly scores: Record<string, number>;
  readonly ranking: string[];
  readonly ties: string[][];
  readonly normalized?: NormalizedSection;
  readonly recommendation: string[];
}

// Moment-table fragments of the model document.

export type PolicyValue = number | Record<string, number>;

export interface MeanVarianceEntry {
  mean?: PolicyValue;
  variance?: PolicyValue;
}

export interface MomentsSection {
  readonly mode: "mean_variance" | "direct";
  readonly entries: Record<string, MeanVarianceEntry | PolicyValue>;
}

export interface ModelDocument {
  readonly vertices: number[];
  readonly policies: string[];
  readonly moments: MomentsSection;
  readonly utility: Record<string, unknown>;
  readonly [key: string]: unknown;
}

export interface ScoreRequest {
  utility?: string;
  closure?: string;
  error_moments?: string;
  overrides?: { entries: Record<string, MeanVarianceEntry | PolicyValue> };
}
