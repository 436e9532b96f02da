/** Job polling: one tracked job at a time; responses for superseded job
 * ids are discarded, so a re-run can never be overwritten by a stale poll. */

import type { ApiClient } from "./api.js";
import type { JobResult } from "./types.js";

export const POLL_INTERVAL_MS = 1000;

export class JobPoller {
  private currentJobId: string | null = null;
  private inFlight = false;

  constructor(
    private readonly api: ApiClient,
    private readonly onUpdate: (jobId: string, result: JobResult) => void,
    private readonly onError: (err: unknown) => void = () => {},
  ) {}

  track(jobId: string): void {
    this.currentJobId = jobId;
  }

  get tracking(): string | null {
    return this.currentJobId;
  }

  /** One poll step; main.ts calls this on a 1 s interval. */
  async tick(): Promise<void> {
    const jobId = this.currentJobId;
    if (jobId === null || this.inFlight) return;
    this.inFlight = true;
    try {
      const result = await this.api.result(jobId);
      if (jobId !== this.currentJobId) return; // superseded while in flight
      if (result.status !== "running") this.currentJobId = null;
      this.onUpdate(jobId, result);
    } catch (err) {
      if (jobId === this.currentJobId) {
        this.currentJobId = null;
        this.onError(err);
      }
    } finally {
      this.inFlight = false;
    }
  }
}
