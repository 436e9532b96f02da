import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { JobPoller } from "../src/poll.js";
import type { JobResult } from "../src/types.js";
import { MockService, makeGridResult } from "./mock_service.js";

function setup() {
  const service = new MockService();
  const api = new ApiClient("", service.fetch);
  const updates: Array<{ jobId: string; result: JobResult }> = [];
  const errors: unknown[] = [];
  const poller = new JobPoller(
    api,
    (jobId, result) => updates.push({ jobId, result }),
    (err) => errors.push(err),
  );
  return { service, poller, updates, errors };
}

describe("JobPoller", () => {
  it("keeps polling while the job runs, then stops on completion", async () => {
    const { service, poller, updates } = setup();
    service.results.set("job-1", { status: "running" });
    poller.track("job-1");
    await poller.tick();
    expect(updates).toEqual([{ jobId: "job-1", result: { status: "running" } }]);
    expect(poller.tracking).toBe("job-1");

    service.results.set("job-1", makeGridResult([1], [1]));
    await poller.tick();
    expect(updates[1]?.result.status).toBe("done");
    expect(poller.tracking).toBeNull();

    await poller.tick(); // nothing tracked: no further requests
    expect(service.requests.length).toBe(2);
  });

  it("discards responses for a superseded job id", async () => {
    const { service, poller, updates } = setup();
    service.results.set("job-1", makeGridResult([1], [1], "old"));
    service.results.set("job-2", { status: "running" });

    // a slow in-flight poll for job-1 resolves after job-2 took over
    let release: (r: Response) => void = () => {};
    const slow = new Promise<Response>((resolve) => (release = resolve));
    const realFetch = service.fetch;
    const api = new ApiClient("", (url, init) =>
      url.endsWith("/api/result/job-1") ? slow : realFetch(url, init),
    );
    const slowPoller = new JobPoller(api, (jobId, result) => updates.push({ jobId, result }));
    slowPoller.track("job-1");
    const inFlight = slowPoller.tick();
    slowPoller.track("job-2");
    release(
      new Response(JSON.stringify(makeGridResult([9], [9], "old")), {
        status: 200,
        headers: { "Content-Type": "application/json" },
      }),
    );
    await inFlight;
    expect(updates).toEqual([]); // stale result dropped
    expect(slowPoller.tracking).toBe("job-2");
  });

  it("reports polling failures once and stops tracking", async () => {
    const { service, poller, errors } = setup();
    poller.track("gone");
    await poller.tick(); // 404 from the mock
    expect(errors.length).toBe(1);
    expect(poller.tracking).toBeNull();
  });
});
