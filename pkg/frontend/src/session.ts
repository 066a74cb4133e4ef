// The what-if session: debounced re-scoring with last-write-wins ordering
// and an undo history over field edits.

import { ServiceClient, ServiceError } from "./client.js";
import {
  PanelForm,
  applyEdit,
  buildOverrides,
  buildPanelForms,
  findField,
  flagFieldsFromDiagnostics,
} from "./forms.js";
import { RankingView, buildRankingView } from "./ranking.js";
import type { ModelDocument, ScoreReport } from "./types.js";

export interface SessionOptions {
  utility?: string;
  closure?: string;
  errorMoments?: string;
  debounceMs?: number;
  onUpdate?: (view: RankingView, report: ScoreReport) => void;
  onError?: (diagnostics: string[], flaggedFields: string[]) => void;
}

interface EditRecord {
  readonly key: string;
  readonly previous: number;
}

export class WhatIfSession {
  readonly forms: PanelForm[];
  board: ScoreReport | null = null;
  view: RankingView | null = null;
  /** Total number of score requests actually sent. */
  requestsSent = 0;

  private nextSequence = 0;
  private lastApplied = -1;
  private pendingTimer: ReturnType<typeof setTimeout> | null = null;
  private readonly history: EditRecord[] = [];

  constructor(
    private readonly client: ServiceClient,
    readonly sessionId: string,
    readonly document: ModelDocument,
    forms: PanelForm[],
    private readonly options: SessionOptions = {},
  ) {
    this.forms = forms;
  }

  /** Apply one field edit; schedules exactly one re-score per quiet period. */
  edit(fieldKey: string, raw: string | number): string | null {
    const field = findField(this.forms, fieldKey);
    if (!field) {
      return `unknown field ${fieldKey}`;
    }
    const previous = field.value;
    const error = applyEdit(field, raw);
    if (error) {
      return error;
    }
    if (field.value !== previous) {
      this.history.push({ key: fieldKey, previous });
      this.scheduleRescore();
    }
    return null;
  }

  get canUndo(): boolean {
    return this.history.length > 0;
  }

  undo(): boolean {
    const record = this.history.pop();
    if (!record) return false;
    const field = findField(this.forms, record.key);
    if (field) {
      applyEdit(field, record.previous);
      this.scheduleRescore();
    }
    return true;
  }

  private scheduleRescore(): void {
    if (this.pendingTimer !== null) {
      clearTimeout(this.pendingTimer);
    }
    const delay = this.options.debounceMs ?? 200;
    this.pendingTimer = setTimeout(() => {
      this.pendingTimer = null;
      void this.rescore();
    }, delay);
  }

  /** Send a score request now; stale responses are dropped (last write wins). */
  async rescore(): Promise<ScoreReport | null> {
    const sequence = this.nextSequence++;
    const overrides = buildOverrides(this.forms);
    this.requestsSent += 1;
    try {
      const report = await this.client.postScores(this.sessionId, {
        ...(this.options.utility ? { utility: this.options.utility } : {}),
        ...(this.options.closure ? { closure: this.options.closure } : {}),
        ...(this.options.errorMoments ? { error_moments: this.options.errorMoments } : {}),
        overrides: { entries: overrides },
      });
      if (sequence < this.lastApplied) {
        return null; // a newer response already arrived
      }
      this.lastApplied = sequence;
      const view = buildRankingView(report, this.board);
      this.board = report;
      this.view = view;
      this.options.onUpdate?.(view, report);
      return report;
    } catch (error) {
      if (error instanceof ServiceError) {
        const flagged = flagFieldsFromDiagnostics(this.forms, error.diagnostics);
        this.options.onError?.(error.diagnostics, flagged);
        return null;
      }
      throw error;
    }
  }

  /** Wait out any pending debounce and return the latest board. */
  async settle(): Promise<ScoreReport | null> {
    if (this.pendingTimer !== null) {
      clearTimeout(this.pendingTimer);
      this.pendingTimer = null;
      return this.rescore();
    }
    return this.board;
  }
}

export interface LoadedConsole {
  readonly sessionId: string;
  readonly session: WhatIfSession;
  readonly adequacy: import("./types.js").AdequacyReport;
}

/** Submit a model document, fetch adequacy, and build the console state. */
export async function loadSession(
  client: ServiceClient,
  document: ModelDocument,
  options: SessionOptions = {},
): Promise<LoadedConsole> {
  const sessionId = await client.postModel(document);
  const adequacy = await client.getAdequacy(sessionId, options.utility);
  const forms = buildPanelForms(adequacy, document);
  const session = new WhatIfSession(client, sessionId, document, forms, options);
  return { sessionId, session, adequacy };
}
