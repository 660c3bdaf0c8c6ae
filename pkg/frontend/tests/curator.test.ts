import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { CuratorView } from "../src/curator.js";
import type { JobStatus } from "../src/types.js";

function statusFetch(status: JobStatus): (url: string) => Promise<Response> {
  return async () =>
    new Response(JSON.stringify(status), {
      status: 200,
      headers: { "Content-Type": "application/json" },
    });
}

const base: JobStatus = {
  job_id: "j1",
  phase: "r3_running",
  theme: "Magic Wins",
  r1_kept: 329,
  r2: {
    slots: [{ slot: 0, worker: "w1", assigned: 329, seen: 100, selected: 33, select_cap: 33, completed: false }],
    selected_total: 33,
    complete: false,
  },
  r3: { pool: 33, pending: 0, batches: 1, slots: [], complete: false },
  output: null,
};

describe("curator view", () => {
  it("renders streaming per-stage counts", async () => {
    const container = document.createElement("main");
    const view = new CuratorView(container, new ApiClient("", statusFetch(base)), "j1");
    await view.refresh();
    expect(container.textContent).toContain("Magic Wins");
    expect(container.textContent).toContain("329");
    expect(container.textContent).toContain("33 selected");
    expect(container.querySelector(".output")).toBeNull();
    view.stop();
  });

  it("lists the final compilation once finalized", async () => {
    const finalized: JobStatus = {
      ...base,
      phase: "finalized",
      output: {
        videos: ["v1", "v2"],
        consent_counts: { v1: 3, v2: 3 },
        under_supplied: true,
      },
    };
    const container = document.createElement("main");
    const view = new CuratorView(container, new ApiClient("", statusFetch(finalized)), "j1");
    await view.refresh();
    const items = [...container.querySelectorAll(".output li")].map((li) => li.textContent);
    expect(items).toEqual(["v1", "v2"]);
    expect(container.textContent).toContain("under-supplied");
    view.stop();
  });
});
