/** Read-only curator view: streaming per-stage counts and the final output. */

import type { ApiClient } from "./api.js";
import type { JobStatus } from "./types.js";

export class CuratorView {
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly container: HTMLElement,
    private readonly api: ApiClient,
    private readonly jobId: string,
    private readonly pollMs = 5000,
  ) {}

  async start(): Promise<void> {
    await this.refresh();
    this.timer = setInterval(() => void this.refresh(), this.pollMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async refresh(): Promise<void> {
    const status = await this.api.jobStatus(this.jobId);
    this.render(status);
    if (status.phase === "finalized") {
      this.stop();
    }
  }

  private line(text: string): HTMLElement {
    const p = document.createElement("p");
    p.textContent = text;
    return p;
  }

  private render(status: JobStatus): void {
    this.container.textContent = "";
    this.container.className = "curator";

    const title = document.createElement("h1");
    title.textContent = `${status.theme || status.job_id} - ${status.phase}`;
    this.container.appendChild(title);

    this.container.appendChild(
      this.line(`Prefilter kept ${status.r1_kept} videos`),
    );
    this.container.appendChild(
      this.line(
        `Selection stage: ${status.r2.selected_total} selected by ` +
          `${status.r2.slots.filter((s) => s.worker).length} worker(s)` +
          (status.r2.complete ? " (complete)" : ""),
      ),
    );
    this.container.appendChild(
      this.line(
        `Agreement pool: ${status.r3.pool} videos in ${status.r3.batches} batch(es)` +
          (status.r3.complete ? " (complete)" : ""),
      ),
    );

    if (status.output) {
      const heading = this.line(
        `Final compilation (${status.output.videos.length} videos` +
          (status.output.under_supplied ? ", under-supplied" : "") +
          "):",
      );
      heading.className = "output-heading";
      this.container.appendChild(heading);
      const list = document.createElement("ol");
      list.className = "output";
      for (const videoId of status.output.videos) {
        const item = document.createElement("li");
        item.textContent = videoId;
        list.appendChild(item);
      }
      this.container.appendChild(list);
    }
  }
}
