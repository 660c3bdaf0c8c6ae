/**
 * Video tiles: autoplaying muted loops with hover audio and click-to-select.
 * Interaction is mouse-only; looping restarts after at most ten seconds so a
 * long video never hides its opening while the worker scans the grid.
 */

import type { VideoDescriptor } from "./types.js";

export const LOOP_CAP_SECONDS = 10;

export interface TileHandlers {
  onHoverStart(videoId: string): void;
  onHoverEnd(videoId: string): void;
  onToggle(videoId: string): void;
}

export interface Tile {
  videoId: string;
  element: HTMLElement;
  video: HTMLVideoElement;
  unplayable: boolean;
  setSelected(selected: boolean): void;
  setAudible(audible: boolean): void;
}

function beginPlayback(video: HTMLVideoElement): void {
  try {
    const result = video.play();
    if (result && typeof result.catch === "function") {
      result.catch(() => undefined); // autoplay rejection is fine: tile stays muted
    }
  } catch {
    // jsdom and some browsers throw instead of rejecting
  }
}

export function createTile(descriptor: VideoDescriptor, handlers: TileHandlers): Tile {
  const element = document.createElement("div");
  element.className = "tile";
  element.dataset.videoId = descriptor.id;

  const video = document.createElement("video");
  video.src = descriptor.media;
  video.muted = true;
  video.autoplay = true;
  video.loop = true;
  video.playsInline = true;
  video.preload = "auto";
  element.appendChild(video);

  const tile: Tile = {
    videoId: descriptor.id,
    element,
    video,
    unplayable: false,
    setSelected(selected: boolean): void {
      element.classList.toggle("selected", selected);
    },
    setAudible(audible: boolean): void {
      video.muted = !audible;
      element.classList.toggle("audible", audible);
    },
  };

  video.addEventListener("timeupdate", () => {
    const cap = Math.min(
      Number.isFinite(video.duration) && video.duration > 0
        ? video.duration
        : LOOP_CAP_SECONDS,
      LOOP_CAP_SECONDS,
    );
    if (video.currentTime >= cap) {
      video.currentTime = 0;
    }
  });
  video.addEventListener("error", () => {
    tile.unplayable = true;
    element.classList.add("unplayable");
    element.textContent = "unavailable";
  });

  element.addEventListener("mouseenter", () => handlers.onHoverStart(descriptor.id));
  element.addEventListener("mouseleave", () => handlers.onHoverEnd(descriptor.id));
  element.addEventListener("click", () => handlers.onToggle(descriptor.id));

  beginPlayback(video);
  return tile;
}
