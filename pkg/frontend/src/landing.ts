/** Landing page: instructions plus example players from a published compilation. */

import type { LandingPayload } from "./types.js";

export interface LandingOptions {
  onStart(): void;
  mediaFor?(ref: string): string;
}

export function renderLanding(
  container: HTMLElement,
  landing: LandingPayload,
  options: LandingOptions,
): void {
  container.textContent = "";
  container.className = "landing";

  const instructions = document.createElement("p");
  instructions.className = "instructions";
  instructions.textContent = landing.instructions;
  container.appendChild(instructions);

  if (landing.example_refs.length > 0) {
    const heading = document.createElement("p");
    heading.className = "examples-heading";
    heading.textContent = "Examples from a published compilation:";
    container.appendChild(heading);

    const examples = document.createElement("div");
    examples.className = "examples";
    for (const ref of landing.example_refs) {
      const video = document.createElement("video");
      video.className = "example";
      video.src = options.mediaFor ? options.mediaFor(ref) : ref;
      video.muted = true;
      video.autoplay = true;
      video.loop = true;
      video.playsInline = true;
      examples.appendChild(video);
    }
    container.appendChild(examples);
  }

  const start = document.createElement("button");
  start.className = "start-button";
  start.type = "button";
  start.textContent = "Start";
  start.addEventListener("click", () => options.onStart());
  container.appendChild(start);
}

export function renderCompletion(container: HTMLElement, surveyUrl: string): void {
  container.textContent = "";
  container.className = "completion";

  const thanks = document.createElement("p");
  thanks.className = "thanks";
  thanks.textContent = "All done - thank you for sifting!";
  container.appendChild(thanks);

  const survey = document.createElement("a");
  survey.className = "survey-link";
  survey.href = surveyUrl;
  survey.textContent = "Tell us about your strategy (short survey)";
  container.appendChild(survey);
}

export function renderErrorBanner(container: HTMLElement, message: string): HTMLElement {
  let banner = container.querySelector<HTMLElement>(".error-banner");
  if (!banner) {
    banner = document.createElement("div");
    banner.className = "error-banner";
    container.prepend(banner);
  }
  banner.textContent = message;
  return banner;
}
