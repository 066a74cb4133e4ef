// Thin typed client over the scoring service endpoints.

import type { AdequacyReport, ScoreReport, ScoreRequest, SessionResponse } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly diagnostics: string[],
  ) {
    super(diagnostics.join("; ") || `service error ${status}`);
  }
}

async function readDiagnostics(response: Response): Promise<string[]> {
  try {
    const body = (await response.json()) as { diagnostics?: string[] };
    return body.diagnostics ?? [];
  } catch {
    return [];
  }
}

export class ServiceClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async health(): Promise<boolean> {
    try {
      const response = await this.fetchImpl(this.url("/healthz"));
      return response.ok;
    } catch {
      return false;
    }
  }

  async postModel(document: unknown): Promise<string> {
    const response = await this.fetchImpl(this.url("/models"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(document),
    });
    if (response.status !== 201) {
      throw new ServiceError(response.status, await readDiagnostics(response));
    }
    const body = (await response.json()) as SessionResponse;
    if (!body.session) {
      throw new ServiceError(response.status, body.diagnostics);
    }
    return body.session;
  }

  async getAdequacy(session: string, utility?: string): Promise<AdequacyReport> {
    const query = utility ? `?utility=${encodeURIComponent(utility)}` : "";
    const response = await this.fetchImpl(this.url(`/models/${session}/adequacy${query}`));
    if (!response.ok) {
      throw new ServiceError(response.status, await readDiagnostics(response));
    }
    return (await response.json()) as AdequacyReport;
  }

  async postScores(session: string, request: ScoreRequest): Promise<ScoreReport> {
    const response = await this.fetchImpl(this.url(`/models/${session}/scores`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!response.ok) {
      throw new ServiceError(response.status, await readDiagnostics(response));
    }
    return (await response.json()) as ScoreReport;
  }
}
