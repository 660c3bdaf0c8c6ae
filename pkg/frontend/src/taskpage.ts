/**
 * One timed task page: header with instructions, progress, and countdown,
 * plus the no-scroll video grid. Selection state lives here and is the
 * single source of truth for what gets submitted.
 */

import { Countdown, type MonotonicClock } from "./countdown.js";
import { computeGridLayout } from "./layout.js";
import { createTile, type Tile } from "./tiles.js";
import type { PagePayload, VideoTiming } from "./types.js";

export interface TaskPageOptions {
  instructions: string;
  onSubmit(selected: string[], timings: Record<string, VideoTiming>): void;
  clock?: MonotonicClock;
  viewportWidth?: number;
  viewportHeight?: number;
}

export class TaskPageView {
  readonly page: PagePayload;
  private readonly tiles = new Map<string, Tile>();
  private readonly selected = new Set<string>();
  private readonly hoverMs = new Map<string, number>();
  private hoverStarted: { videoId: string; at: number } | null = null;
  private audible: string | null = null;
  private submitted = false;
  private readonly countdown: Countdown;
  private readonly clock: MonotonicClock;
  private readonly onSubmit: TaskPageOptions["onSubmit"];
  private countdownEl!: HTMLElement;
  private progressFillEl!: HTMLElement;
  private progressTextEl!: HTMLElement;

  constructor(
    private readonly container: HTMLElement,
    page: PagePayload,
    options: TaskPageOptions,
  ) {
    this.page = page;
    this.onSubmit = options.onSubmit;
    this.clock = options.clock ?? (() => performance.now());
    this.countdown = new Countdown(
      page.page_seconds,
      (left) => this.renderCountdown(left),
      () => this.submit(),
      this.clock,
    );
    this.render(options);
    for (const videoId of restoreableSelection(page)) {
      if (this.tiles.has(videoId)) {
        this.toggle(videoId, true);
      }
    }
    this.countdown.start();
  }

  private render(options: TaskPageOptions): void {
    const width = options.viewportWidth ?? window.innerWidth;
    const height = options.viewportHeight ?? window.innerHeight;
    const layout = computeGridLayout(width, height, this.page.videos.length);

    this.container.textContent = "";
    this.container.className = "task-page";
    this.container.style.overflow = "hidden";
    this.container.style.height = `${height}px`;

    const header = document.createElement("header");
    header.style.height = `${layout.headerHeight}px`;
    header.style.overflow = "hidden";

    const instructions = document.createElement("p");
    instructions.className = "instructions";
    instructions.textContent = options.instructions;
    header.appendChild(instructions);

    const progress = document.createElement("div");
    progress.className = "progress";
    this.progressTextEl = document.createElement("span");
    this.progressTextEl.className = "progress-text";
    const bar = document.createElement("div");
    bar.className = "progress-bar";
    this.progressFillEl = document.createElement("div");
    this.progressFillEl.className = "progress-fill";
    bar.appendChild(this.progressFillEl);
    progress.appendChild(this.progressTextEl);
    progress.appendChild(bar);
    header.appendChild(progress);

    this.countdownEl = document.createElement("div");
    this.countdownEl.className = "countdown";
    header.appendChild(this.countdownEl);

    const next = document.createElement("button");
    next.className = "next-button";
    next.type = "button";
    next.textContent = "Next page";
    next.addEventListener("click", () => this.submit());
    header.appendChild(next);

    this.container.appendChild(header);

    const grid = document.createElement("div");
    grid.className = "grid";
    grid.style.display = "grid";
    grid.style.gap = `${layout.gap}px`;
    grid.style.gridTemplateColumns = `repeat(${layout.columns}, ${layout.tileWidth}px)`;
    grid.style.gridAutoRows = `${layout.tileHeight}px`;
    for (const descriptor of this.page.videos) {
      const tile = createTile(descriptor, {
        onHoverStart: (id) => this.hoverStart(id),
        onHoverEnd: (id) => this.hoverEnd(id),
        onToggle: (id) => this.toggle(id),
      });
      tile.element.style.width = `${layout.tileWidth}px`;
      tile.element.style.height = `${layout.tileHeight}px`;
      tile.element.style.overflow = "hidden";
      this.tiles.set(descriptor.id, tile);
      grid.appendChild(tile.element);
    }
    this.container.appendChild(grid);
    this.renderProgress();
  }

  private renderCountdown(secondsLeft: number): void {
    this.countdownEl.textContent = `${secondsLeft}s`;
  }

  private renderProgress(): void {
    const needed = Math.max(0, this.page.needed_remaining - this.selected.size);
    this.progressTextEl.textContent =
      `${needed} still needed - ${this.page.pool_remaining} left in the pool - ` +
      `${this.page.selected_so_far + this.selected.size} selected`;
    const target = this.page.selected_so_far + this.page.needed_remaining;
    const fraction = target > 0
      ? Math.min(1, (this.page.selected_so_far + this.selected.size) / target)
      : 1;
    this.progressFillEl.style.width = `${Math.round(fraction * 100)}%`;
  }

  private hoverStart(videoId: string): void {
    if (this.submitted) {
      return;
    }
    if (this.hoverStarted) {
      this.hoverEnd(this.hoverStarted.videoId);
    }
    this.hoverStarted = { videoId, at: this.clock() };
    if (this.audible !== null && this.audible !== videoId) {
      this.tiles.get(this.audible)?.setAudible(false);
    }
    this.audible = videoId;
    this.tiles.get(videoId)?.setAudible(true);
  }

  private hoverEnd(videoId: string): void {
    if (this.hoverStarted && this.hoverStarted.videoId === videoId) {
      const elapsed = this.clock() - this.hoverStarted.at;
      this.hoverMs.set(videoId, (this.hoverMs.get(videoId) ?? 0) + elapsed);
      this.hoverStarted = null;
    }
    if (this.audible === videoId) {
      this.tiles.get(videoId)?.setAudible(false);
      this.audible = null;
    }
  }

  private toggle(videoId: string, forceOn = false): void {
    if (this.submitted) {
      return;
    }
    if (this.selected.has(videoId) && !forceOn) {
      this.selected.delete(videoId);
    } else {
      this.selected.add(videoId);
    }
    this.tiles.get(videoId)?.setSelected(this.selected.has(videoId));
    this.renderProgress();
    persistSelection(this.page, [...this.selected]);
  }

  /** The highlighted set, in page order. */
  selectedIds(): string[] {
    return this.page.videos.map((v) => v.id).filter((id) => this.selected.has(id));
  }

  audibleId(): string | null {
    return this.audible;
  }

  timings(): Record<string, VideoTiming> {
    const timings: Record<string, VideoTiming> = {};
    for (const descriptor of this.page.videos) {
      const tile = this.tiles.get(descriptor.id);
      timings[descriptor.id] = {
        hover_ms: Math.round(this.hoverMs.get(descriptor.id) ?? 0),
        selected: this.selected.has(descriptor.id),
        ...(tile?.unplayable ? { unplayable: true } : {}),
      };
    }
    return timings;
  }

  submit(): void {
    if (this.submitted) {
      return;
    }
    this.submitted = true;
    if (this.hoverStarted) {
      this.hoverEnd(this.hoverStarted.videoId);
    }
    this.countdown.stop();
    this.onSubmit(this.selectedIds(), this.timings());
  }

  dispose(): void {
    this.countdown.stop();
  }
}

// -- open-page persistence ----------------------------------------------------
// The open page and its highlighted set live in sessionStorage so a refresh
// restores the same page (by page_id) instead of re-requesting or
// re-submitting; the service additionally acknowledges duplicate page ids
// with the original ack.

const STORAGE_KEY = "sifter-open-page";

export interface StoredPage {
  page: PagePayload;
  selected: string[];
}

export function persistPage(page: PagePayload): void {
  const stored: StoredPage = { page, selected: [] };
  sessionStorage.setItem(STORAGE_KEY, JSON.stringify(stored));
}

function persistSelection(page: PagePayload, selected: string[]): void {
  const stored = loadStoredPage();
  if (stored && stored.page.page_id === page.page_id) {
    stored.selected = selected;
    sessionStorage.setItem(STORAGE_KEY, JSON.stringify(stored));
  }
}

export function loadStoredPage(): StoredPage | null {
  const raw = sessionStorage.getItem(STORAGE_KEY);
  if (!raw) {
    return null;
  }
  try {
    return JSON.parse(raw) as StoredPage;
  } catch {
    return null;
  }
}

export function clearStoredPage(): void {
  sessionStorage.removeItem(STORAGE_KEY);
}

function restoreableSelection(page: PagePayload): string[] {
  const stored = loadStoredPage();
  if (stored && stored.page.page_id === page.page_id) {
    return stored.selected;
  }
  return [];
}
