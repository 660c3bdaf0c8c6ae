/** Thin typed client for the task service; the UI talks to nothing else. */

import type {
  ApiErrorBody,
  JobStatus,
  LandingPayload,
  NextPageResult,
  SubmissionAck,
  VideoTiming,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(body.message || `request failed with ${status}`);
  }

  get code(): string {
    return this.body.code;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function parseError(response: Response): Promise<ApiError> {
  let body: ApiErrorBody = { code: "error", message: response.statusText };
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    // non-JSON error body: keep the status text
  }
  return new ApiError(response.status, body);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.url(path), init);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  createSession(workerId: string, jobId: string): Promise<LandingPayload> {
    return this.request("/v1/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ worker_id: workerId, job_id: jobId }),
    });
  }

  nextPage(sessionId: string): Promise<NextPageResult> {
    return this.request(`/v1/sessions/${sessionId}/page`);
  }

  /**
   * Submit a page's selections. One retry on network failure; the service
   * acknowledges resubmitted page ids with the original ack, so the retry
   * can never double-record.
   */
  async submitPage(
    sessionId: string,
    pageId: string,
    selected: string[],
    clientTimings: Record<string, VideoTiming>,
  ): Promise<SubmissionAck> {
    const init: RequestInit = {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ selected, client_timings: clientTimings }),
    };
    const path = `/v1/sessions/${sessionId}/page/${pageId}`;
    try {
      return await this.request<SubmissionAck>(path, init);
    } catch (error) {
      if (error instanceof ApiError) {
        throw error; // the server answered; do not retry
      }
      return await this.request<SubmissionAck>(path, init);
    }
  }

  jobStatus(jobId: string): Promise<JobStatus> {
    return this.request(`/v1/jobs/${jobId}/status`);
  }
}
