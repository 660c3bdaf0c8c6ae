/** jsdom lacks media playback; give <video> a quiet play() and a settable duration. */

import { beforeEach } from "vitest";

Object.defineProperty(HTMLMediaElement.prototype, "play", {
  configurable: true,
  writable: true,
  value: () => Promise.resolve(),
});
Object.defineProperty(HTMLMediaElement.prototype, "pause", {
  configurable: true,
  writable: true,
  value: () => undefined,
});

beforeEach(() => {
  sessionStorage.clear();
  document.body.innerHTML = "";
});

export function setMediaClock(video: HTMLVideoElement, currentTime: number, duration: number): void {
  Object.defineProperty(video, "duration", { configurable: true, value: duration });
  video.currentTime = currentTime;
}
