/** Thin typed client for the synthesis service. All engine effects flow
 * through these calls and nothing else; the only mutating verb is the
 * documented POST /api/synthesize. */

import type { ExemplarInfo, HealthInfo, JobResult, SynthesisRequest } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(message: string, public readonly status: number) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let message = `HTTP ${resp.status}`;
  try {
    const body = (await resp.json()) as { error?: string };
    if (body.error) message = body.error;
  } catch {
    /* non-JSON error body; keep the status text */
  }
  return new ApiError(message, resp.status);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path);
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  health(): Promise<HealthInfo> {
    return this.get("/api/health");
  }

  exemplars(): Promise<ExemplarInfo[]> {
    return this.get("/api/exemplars");
  }

  result(jobId: string): Promise<JobResult> {
    return this.get(`/api/result/${jobId}`);
  }

  async synthesize(request: SynthesisRequest): Promise<string> {
    const resp = await this.fetchFn(this.baseUrl + "/api/synthesize", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!resp.ok) throw await parseError(resp);
    const body = (await resp.json()) as { job_id: string };
    return body.job_id;
  }
}
