import { describe, expect, it } from "vitest";

import { computeGridLayout, layoutHeight, layoutWidth } from "../src/layout.js";
import { TaskPageView } from "../src/taskpage.js";
import type { PagePayload } from "../src/types.js";
import { stubVideos } from "./stub.js";

describe("grid layout", () => {
  it("fits eight tiles inside 1280x800 with no vertical overflow", () => {
    const layout = computeGridLayout(1280, 800, 8);
    expect(layout.columns).toBe(4);
    expect(layout.rows).toBe(2);
    expect(layoutHeight(layout)).toBeLessThanOrEqual(800);
    expect(layoutWidth(layout)).toBeLessThanOrEqual(1280);
  });

  it("fits any page size from one to eight at common viewports", () => {
    for (const [w, h] of [[1280, 800], [1440, 900], [1920, 1080]] as const) {
      for (let count = 1; count <= 8; count++) {
        const layout = computeGridLayout(w, h, count);
        expect(layout.columns * layout.rows).toBeGreaterThanOrEqual(count);
        expect(layoutHeight(layout)).toBeLessThanOrEqual(h);
        expect(layoutWidth(layout)).toBeLessThanOrEqual(w);
      }
    }
  });

  it("applies explicit pixel sizes so the rendered page cannot scroll", () => {
    const container = document.createElement("main");
    document.body.appendChild(container);
    const page: PagePayload = {
      done: false,
      session_id: "s1",
      page_id: "p1",
      videos: stubVideos(8),
      needed_remaining: 2,
      pool_remaining: 0,
      selected_so_far: 0,
      issued_at: new Date().toISOString(),
      deadline: new Date(Date.now() + 30_000).toISOString(),
      page_seconds: 30,
    };
    const view = new TaskPageView(container, page, {
      instructions: "go",
      viewportWidth: 1280,
      viewportHeight: 800,
      onSubmit: () => undefined,
    });
    expect(container.style.overflow).toBe("hidden");
    expect(container.style.height).toBe("800px");

    const header = container.querySelector<HTMLElement>("header")!;
    const headerHeight = parseInt(header.style.height, 10);
    const tiles = [...container.querySelectorAll<HTMLElement>(".tile")];
    expect(tiles).toHaveLength(8);
    const tileHeight = parseInt(tiles[0].style.height, 10);
    const tileWidth = parseInt(tiles[0].style.width, 10);
    const layout = computeGridLayout(1280, 800, 8);
    expect(tileHeight).toBe(layout.tileHeight);
    expect(tileWidth).toBe(layout.tileWidth);
    // Two rows of tiles plus header plus gaps stay within the viewport.
    expect(headerHeight + 2 * tileHeight + 3 * layout.gap).toBeLessThanOrEqual(800);
    view.dispose();
  });
});
