// Schema-driven panel forms: generated from the adequacy report and the
// model document's moment table, never from hard-coded model knowledge.

import type { AdequacyReport, MeanVarianceEntry, ModelDocument, PolicyValue, SummaryRow } from "./types.js";

export type Statistic = "mean" | "variance" | "value";

export interface FormField {
  readonly key: string; // `${target}|${statistic}|${policy}`
  readonly panel: string;
  /** Symbol name in mean_variance mode; monomial text in direct mode. */
  readonly target: string;
  readonly statistic: Statistic;
  readonly policy: string;
  readonly varianceLike: boolean;
  baseline: number;
  value: number;
  dirty: boolean;
  error: string | null;
}

export interface PanelForm {
  readonly panel: string;
  readonly requirements: SummaryRow[];
  readonly fields: FormField[];
}

export function fieldKey(target: string, statistic: Statistic, policy: string): string {
  return `${target}|${statistic}|${policy}`;
}

/** Symbols of a monomial text like "t03^2 t23" -> ["t03", "t23"]. */
export function monomialSymbols(monomial: string): string[] {
  return monomial
    .split(/[\s*]+/)
    .filter((token) => token.length > 0)
    .map((token) => token.split("^")[0] ?? token);
}

function policyValue(value: PolicyValue | undefined, policy: string): number {
  if (value === undefined) return 0;
  if (typeof value === "number") return value;
  return value[policy] ?? 0;
}

function meanVarianceEntry(raw: MeanVarianceEntry | PolicyValue | undefined): MeanVarianceEntry {
  if (raw === undefined || typeof raw === "number") {
    return { mean: raw };
  }
  if ("mean" in raw || "variance" in raw) {
    return raw as MeanVarianceEntry;
  }
  return { mean: raw as Record<string, number> };
}

/**
 * Build one form per panel from the adequacy report.
 *
 * In mean_variance mode the editable fields are the mean and variance of
 * every symbol appearing in the panel's required summaries; in direct mode
 * each required monomial is itself a per-policy field.
 */
export function buildPanelForms(adequacy: AdequacyReport, document: ModelDocument): PanelForm[] {
  const policies = document.policies;
  const moments = document.moments;
  const byPanel = new Map<string, SummaryRow[]>();
  for (const row of adequacy.summaries.summaries) {
    const rows = byPanel.get(row.panel) ?? [];
    rows.push(row);
    byPanel.set(row.panel, rows);
  }
  const forms: PanelForm[] = [];
  for (const [panel, requirements] of byPanel) {
    const fields: FormField[] = [];
    if (moments.mode === "mean_variance") {
      const symbols = new Set<string>();
      for (const row of requirements) {
        for (const symbol of monomialSymbols(row.monomial)) {
          symbols.add(symbol);
        }
      }
      for (const symbol of [...symbols].sort()) {
        const entry = meanVarianceEntry(moments.entries[symbol]);
        for (const statistic of ["mean", "variance"] as const) {
          const source = statistic === "mean" ? entry.mean : entry.variance;
          for (const policy of policies) {
            const baseline = policyValue(source, policy);
            fields.push({
              key: fieldKey(symbol, statistic, policy),
              panel,
              target: symbol,
              statistic,
              policy,
              varianceLike: statistic === "variance" || symbol.startsWith("psi"),
              baseline,
              value: baseline,
              dirty: false,
              error: null,
            });
          }
        }
      }
    } else {
      for (const row of requirements) {
        for (const policy of row.policies) {
          const baseline = policyValue(
            moments.entries[row.monomial] as PolicyValue | undefined,
            policy,
          );
          fields.push({
            key: fieldKey(row.monomial, "value", policy),
            panel,
            target: row.monomial,
            statistic: "value",
            policy,
            varianceLike: false,
            baseline,
            value: baseline,
            dirty: false,
            error: null,
          });
        }
      }
    }
    forms.push({ panel, requirements, fields });
  }
  return forms;
}

/** Validate and apply a raw edit; returns the field's new error, if any. */
export function applyEdit(field: FormField, raw: string | number): string | null {
  const parsed = typeof raw === "number" ? raw : Number(raw.trim());
  if (raw === "" || Number.isNaN(parsed) || !Number.isFinite(parsed)) {
    field.error = "not a number";
    return field.error;
  }
  if (field.varianceLike && parsed < 0) {
    field.error = "must be non-negative";
    return field.error;
  }
  field.error = null;
  field.value = parsed;
  field.dirty = parsed !== field.baseline;
  return null;
}

/**
 * Collect the moment-table override implied by the dirty fields.
 *
 * A touched symbol is resubmitted as a complete entry (every policy, both
 * statistics) because overrides replace whole entries on the service side.
 */
export function buildOverrides(
  forms: PanelForm[],
): Record<string, MeanVarianceEntry | Record<string, number>> {
  const entries: Record<string, MeanVarianceEntry | Record<string, number>> = {};
  const touched = new Set<string>();
  for (const form of forms) {
    for (const field of form.fields) {
      if (field.dirty && !field.error) {
        touched.add(field.target);
      }
    }
  }
  for (const form of forms) {
    for (const field of form.fields) {
      if (!touched.has(field.target)) continue;
      if (field.statistic === "value") {
        const row = (entries[field.target] ?? {}) as Record<string, number>;
        row[field.policy] = field.value;
        entries[field.target] = row;
      } else {
        const entry = (entries[field.target] ?? { mean: {}, variance: {} }) as {
          mean: Record<string, number>;
          variance: Record<string, number>;
        };
        (field.statistic === "mean" ? entry.mean : entry.variance)[field.policy] = field.value;
        entries[field.target] = entry;
      }
    }
  }
  return entries;
}

export function findField(forms: PanelForm[], key: string): FormField | undefined {
  for (const form of forms) {
    const hit = form.fields.find((f) => f.key === key);
    if (hit) return hit;
  }
  return undefined;
}

/** Mark a field as failed from a service diagnostic that names its target. */
export function flagFieldsFromDiagnostics(forms: PanelForm[], diagnostics: string[]): string[] {
  const flagged: string[] = [];
  for (const diagnostic of diagnostics) {
    for (const form of forms) {
      for (const field of form.fields) {
        if (diagnostic.includes(field.target) && !flagged.includes(field.key)) {
          field.error = diagnostic;
          flagged.push(field.key);
        }
      }
    }
  }
  return flagged;
}
