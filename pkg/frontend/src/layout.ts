/**
 * No-scroll grid sizing: every tile gets explicit pixel dimensions computed
 * from the viewport, so the page never exceeds it vertically.
 */

export interface GridLayout {
  columns: number;
  rows: number;
  tileWidth: number;
  tileHeight: number;
  gap: number;
  headerHeight: number;
}

export const HEADER_HEIGHT = 120;
export const GRID_GAP = 8;

export function computeGridLayout(
  viewportWidth: number,
  viewportHeight: number,
  count: number,
  headerHeight: number = HEADER_HEIGHT,
  gap: number = GRID_GAP,
): GridLayout {
  const tiles = Math.max(1, count);
  const columns = Math.min(4, Math.max(1, Math.ceil(tiles / 2)));
  const rows = Math.ceil(tiles / columns);
  const usableWidth = viewportWidth - gap * (columns + 1);
  const usableHeight = viewportHeight - headerHeight - gap * (rows + 1);
  return {
    columns,
    rows,
    tileWidth: Math.max(1, Math.floor(usableWidth / columns)),
    tileHeight: Math.max(1, Math.floor(usableHeight / rows)),
    gap,
    headerHeight,
  };
}

/** Total pixel height the header plus grid occupies under a layout. */
export function layoutHeight(layout: GridLayout): number {
  return (
    layout.headerHeight + layout.rows * layout.tileHeight + layout.gap * (layout.rows + 1)
  );
}

export function layoutWidth(layout: GridLayout): number {
  return layout.columns * layout.tileWidth + layout.gap * (layout.columns + 1);
}
