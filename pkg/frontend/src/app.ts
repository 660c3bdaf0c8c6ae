/**
 * Worker app: session bootstrap, landing page, then the page loop.
 *
 * A refresh mid-page restores the same open page from sessionStorage
 * (selections included); submissions are idempotent by page id on the
 * server, so a restored page can never double-record.
 */

import { ApiClient } from "./api.js";
import { renderCompletion, renderErrorBanner, renderLanding } from "./landing.js";
import {
  TaskPageView,
  clearStoredPage,
  loadStoredPage,
  persistPage,
} from "./taskpage.js";
import type { LandingPayload, PagePayload, VideoTiming } from "./types.js";

export interface WorkerAppOptions {
  workerId: string;
  jobId: string;
  surveyUrl?: string;
  clock?: () => number;
  viewportWidth?: number;
  viewportHeight?: number;
}

export class WorkerApp {
  private landing: LandingPayload | null = null;
  private view: TaskPageView | null = null;

  constructor(
    private readonly container: HTMLElement,
    private readonly api: ApiClient,
    private readonly options: WorkerAppOptions,
  ) {}

  async start(): Promise<void> {
    this.landing = await this.api.createSession(
      this.options.workerId,
      this.options.jobId,
    );
    const stored = loadStoredPage();
    if (stored && stored.page.session_id === this.landing.session_id) {
      // Mid-page refresh: resume the open page instead of showing the landing.
      this.showPage(stored.page);
      return;
    }
    renderLanding(this.container, this.landing, { onStart: () => void this.advance() });
  }

  private async advance(): Promise<void> {
    if (!this.landing) {
      return;
    }
    let result;
    try {
      result = await this.api.nextPage(this.landing.session_id);
    } catch (error) {
      renderErrorBanner(this.container, `Could not fetch the next page: ${error}`);
      return;
    }
    if (result.done) {
      clearStoredPage();
      renderCompletion(this.container, this.options.surveyUrl ?? "#survey");
      return;
    }
    persistPage(result);
    this.showPage(result);
  }

  private showPage(page: PagePayload): void {
    this.view?.dispose();
    this.view = new TaskPageView(this.container, page, {
      instructions: this.landing?.instructions ?? "",
      clock: this.options.clock,
      viewportWidth: this.options.viewportWidth,
      viewportHeight: this.options.viewportHeight,
      onSubmit: (selected, timings) => void this.submit(page, selected, timings),
    });
  }

  private async submit(
    page: PagePayload,
    selected: string[],
    timings: Record<string, VideoTiming>,
  ): Promise<void> {
    if (!this.landing) {
      return;
    }
    try {
      await this.api.submitPage(this.landing.session_id, page.page_id, selected, timings);
    } catch (error) {
      // Selections stay in sessionStorage; the worker can retry from where
      // they left off after the connection recovers.
      renderErrorBanner(this.container, `Submission failed: ${error}. Reload to retry.`);
      return;
    }
    clearStoredPage();
    await this.advance();
  }
}

export function bootFromQuery(container: HTMLElement, baseUrl = ""): WorkerApp {
  const params = new URLSearchParams(window.location.search);
  const app = new WorkerApp(container, new ApiClient(baseUrl), {
    workerId: params.get("worker") ?? "anonymous",
    jobId: params.get("job") ?? "",
    surveyUrl: params.get("survey") ?? undefined,
  });
  void app.start();
  return app;
}
