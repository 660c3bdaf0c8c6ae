/** Payload shapes of the task service's /v1 JSON API. */

export interface LandingPayload {
  session_id: string;
  worker_id: string;
  job_id: string;
  stage: "selection" | "agreement";
  status: string;
  assigned: number;
  target: number;
  instructions: string;
  example_refs: string[];
}

export interface VideoDescriptor {
  id: string;
  media: string;
  duration_s: number | null;
}

export interface PagePayload {
  done: false;
  session_id: string;
  page_id: string;
  videos: VideoDescriptor[];
  needed_remaining: number;
  pool_remaining: number;
  selected_so_far: number;
  issued_at: string;
  deadline: string;
  page_seconds: number;
}

export interface CompletionPayload {
  done: true;
  session: { session_id: string; status: string };
}

export type NextPageResult = PagePayload | CompletionPayload;

export interface SubmissionAck {
  page_id: string;
  status: "accepted" | "expired";
  accepted: string[];
  rejected: Record<string, string>;
}

/** Per-video interaction timings reported back on submit. */
export interface VideoTiming {
  hover_ms: number;
  selected: boolean;
  unplayable?: boolean;
}

export interface JobStatus {
  job_id: string;
  phase: string;
  theme: string;
  r1_kept: number;
  r2: { slots: StageSlot[]; selected_total: number; complete: boolean };
  r3: {
    pool: number;
    pending: number;
    batches: number;
    slots: StageSlot[];
    complete: boolean;
  };
  output: {
    videos: string[];
    consent_counts: Record<string, number>;
    under_supplied: boolean;
  } | null;
}

export interface StageSlot {
  slot: number;
  worker: string | null;
  assigned: number;
  seen: number;
  selected: number;
  select_cap: number | null;
  completed: boolean;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details?: Record<string, unknown>;
}
