/**
 * REST client for the render service. One in-flight render job at a time;
 * polling at a fixed 500 ms interval. Error bodies are surfaced verbatim.
 */

import type { SceneManifest, TrajectoryDict, Waypoint } from "./state.js";

export const POLL_INTERVAL_MS = 500;

export interface JobStatus {
  job_id: string;
  status: "queued" | "running" | "done" | "failed";
  frames?: string[];
  depths?: string[];
  error?: string;
}

export interface PreviewResponse {
  schema_version: number;
  trajectory: TrajectoryDict;
  path_pixels: ([number, number] | null)[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: string,
  ) {
    super(`HTTP ${status}: ${body}`);
  }
}

async function checked(resp: Response): Promise<Response> {
  if (!resp.ok) {
    throw new ApiError(resp.status, await resp.text());
  }
  return resp;
}

export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  async getScene(): Promise<SceneManifest> {
    const resp = await checked(await this.fetchFn(`${this.base}/scene`));
    return (await resp.json()) as SceneManifest;
  }

  /** Server-side trajectory interpolation; the client does no geometry. */
  async preview(waypoints: Waypoint[], nFrames: number): Promise<PreviewResponse> {
    const resp = await checked(
      await this.fetchFn(`${this.base}/preview`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({
          schema_version: 1,
          waypoints,
          n_frames: nFrames,
        }),
      }),
    );
    return (await resp.json()) as PreviewResponse;
  }

  /** Submit pre-serialized canonical bytes so they match the CLI exactly. */
  async submitRender(canonicalBody: string): Promise<string> {
    const resp = await checked(
      await this.fetchFn(`${this.base}/render`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: canonicalBody,
      }),
    );
    const data = (await resp.json()) as { job_id: string };
    return data.job_id;
  }

  async getJob(jobId: string): Promise<JobStatus> {
    const resp = await checked(await this.fetchFn(`${this.base}/jobs/${jobId}`));
    return (await resp.json()) as JobStatus;
  }

  async fetchFramePng(jobId: string, t: number): Promise<Uint8Array> {
    const resp = await checked(
      await this.fetchFn(`${this.base}/jobs/${jobId}/frames/${t}.png`),
    );
    return new Uint8Array(await resp.arrayBuffer());
  }

  /** Poll until the job leaves the queue; resolves on done, rejects on failed. */
  async waitForJob(
    jobId: string,
    sleep: (ms: number) => Promise<void> = (ms) => new Promise((r) => setTimeout(r, ms)),
  ): Promise<JobStatus> {
    for (;;) {
      const status = await this.getJob(jobId);
      if (status.status === "done") return status;
      if (status.status === "failed") {
        throw new ApiError(500, status.error ?? "job failed");
      }
      await sleep(POLL_INTERVAL_MS);
    }
  }
}
