import type { AnnotationDoc, JobRecord, PeaksResponse, Region } from "./types.js";
import { parseAnnotation } from "./annotation.js";

/** Error body returned by the service, surfaced verbatim. */
export class ServiceError extends Error {
  constructor(
    readonly kind: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

/** A polled job ended in the failed state. */
export class JobFailed extends Error {
  constructor(readonly kind: string, message: string) {
    super(message);
  }
}

export class PollTimeout extends Error {}

export interface ClientOptions {
  baseUrl?: string;
  authToken?: string;
  /** Injectable for tests; defaults to the global fetch. */
  fetchFn?: typeof fetch;
  pollMs?: number;
  timeoutMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) =>
  new Promise<void>((resolve) => setTimeout(resolve, ms));

export class ServiceClient {
  private readonly baseUrl: string;
  private readonly authToken?: string;
  private readonly fetchFn: typeof fetch;
  readonly pollMs: number;
  readonly timeoutMs: number;
  private readonly sleep: (ms: number) => Promise<void>;

  constructor(opts: ClientOptions = {}) {
    this.baseUrl = (opts.baseUrl ?? "").replace(/\/+$/, "");
    this.authToken = opts.authToken;
    this.fetchFn = opts.fetchFn ?? fetch;
    this.pollMs = opts.pollMs ?? 250;
    this.timeoutMs = opts.timeoutMs ?? 60_000;
    this.sleep = opts.sleep ?? defaultSleep;
  }

  private async request(path: string, init: RequestInit = {}): Promise<Response> {
    const headers = new Headers(init.headers);
    if (this.authToken !== undefined) headers.set("x-auth-token", this.authToken);
    const resp = await this.fetchFn(this.baseUrl + path, { ...init, headers });
    if (!resp.ok) {
      let kind = `HTTP${resp.status}`;
      let message = resp.statusText || `request failed with status ${resp.status}`;
      try {
        const body = (await resp.json()) as { error?: { kind?: string; message?: string } };
        if (body.error?.message !== undefined) {
          kind = body.error.kind ?? kind;
          message = body.error.message;
        }
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ServiceError(kind, message, resp.status);
    }
    return resp;
  }

  async getJob(id: string): Promise<JobRecord> {
    const resp = await this.request(`/jobs/${id}`);
    return (await resp.json()) as JobRecord;
  }

  async getArtifactText(id: string, name: string): Promise<string> {
    const resp = await this.request(`/jobs/${id}/artifacts/${name}`);
    return await resp.text();
  }

  async getAnnotation(id: string): Promise<AnnotationDoc> {
    return parseAnnotation(await this.getArtifactText(id, "alignment.json"));
  }

  async getPeaks(id: string, bins = 800): Promise<PeaksResponse> {
    const resp = await this.request(`/jobs/${id}/peaks?bins=${bins}`);
    return (await resp.json()) as PeaksResponse;
  }

  /** Submit a region re-alignment; `words: null` requests identity. */
  async postRealign(
    id: string,
    region: Region,
    words: string[] | null,
  ): Promise<{ id: string; state: string }> {
    const payload: Record<string, unknown> = { start: region.t0, end: region.t1 };
    if (words !== null) payload.words = words;
    const resp = await this.request(`/jobs/${id}/realign`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    return (await resp.json()) as { id: string; state: string };
  }

  /** Poll until the job is done; throws JobFailed / PollTimeout otherwise. */
  async waitForJob(id: string): Promise<JobRecord> {
    const deadline = Date.now() + this.timeoutMs;
    for (;;) {
      const record = await this.getJob(id);
      if (record.state === "done") return record;
      if (record.state === "failed") {
        const err = record.error ?? { kind: "JobFailed", message: "job failed" };
        throw new JobFailed(err.kind, err.message);
      }
      if (Date.now() >= deadline) {
        throw new PollTimeout(`job ${id} still ${record.state} after ${this.timeoutMs} ms`);
      }
      await this.sleep(this.pollMs);
    }
  }
}
