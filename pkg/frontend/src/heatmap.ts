/** Canvas heatmap of a lattice map with explored / next-point overlays. */

import { MapResponse } from "./api.js";

export interface ColorStop {
  t: number;
  rgb: [number, number, number];
}

// dark blue -> teal -> yellow, readable on the dark console background
const DEFAULT_STOPS: ColorStop[] = [
  { t: 0.0, rgb: [20, 11, 52] },
  { t: 0.33, rgb: [64, 67, 135] },
  { t: 0.66, rgb: [41, 170, 139] },
  { t: 1.0, rgb: [250, 230, 85] },
];

function lerp(a: number, b: number, t: number): number {
  return a + (b - a) * t;
}

/** Map a value in [lo, hi] to an rgb triple along the gradient. */
export function colorFor(
  value: number,
  lo: number,
  hi: number,
  stops: ColorStop[] = DEFAULT_STOPS,
): [number, number, number] {
  const t = hi > lo ? Math.min(1, Math.max(0, (value - lo) / (hi - lo))) : 0.5;
  for (let i = 1; i < stops.length; i++) {
    if (t <= stops[i].t) {
      const span = stops[i].t - stops[i - 1].t;
      const u = span > 0 ? (t - stops[i - 1].t) / span : 0;
      return [
        Math.round(lerp(stops[i - 1].rgb[0], stops[i].rgb[0], u)),
        Math.round(lerp(stops[i - 1].rgb[1], stops[i].rgb[1], u)),
        Math.round(lerp(stops[i - 1].rgb[2], stops[i].rgb[2], u)),
      ];
    }
  }
  return stops[stops.length - 1].rgb;
}

export function valueRange(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!isFinite(lo)) return [0, 1];
  return [lo, hi];
}

export interface Marker {
  row: number;
  col: number;
}

/** Convert an absolute grid index to lattice cell coordinates, or null if
 * it falls outside the candidate lattice. */
export function toCell(
  map: Pick<MapResponse, "rows" | "cols" | "row_offset" | "col_offset">,
  marker: Marker,
): { r: number; c: number } | null {
  const r = marker.row - map.row_offset;
  const c = marker.col - map.col_offset;
  if (r < 0 || c < 0 || r >= map.rows || c >= map.cols) return null;
  return { r, c };
}

export function drawHeatmap(
  canvas: HTMLCanvasElement,
  map: MapResponse,
  nextPoint: Marker | null = null,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const cell = Math.max(
    1,
    Math.floor(Math.min(canvas.width / map.cols, canvas.height / map.rows)),
  );
  const [lo, hi] = valueRange(map.values);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (let r = 0; r < map.rows; r++) {
    for (let c = 0; c < map.cols; c++) {
      const [red, green, blue] = colorFor(map.values[r * map.cols + c], lo, hi);
      ctx.fillStyle = `rgb(${red},${green},${blue})`;
      ctx.fillRect(c * cell, r * cell, cell, cell);
    }
  }
  const dot = (m: Marker, style: string, radius: number) => {
    const pos = toCell(map, m);
    if (!pos) return;
    ctx.fillStyle = style;
    ctx.beginPath();
    ctx.arc((pos.c + 0.5) * cell, (pos.r + 0.5) * cell, radius, 0, 2 * Math.PI);
    ctx.fill();
  };
  for (const m of map.explored) dot(m, "#3fbf4a", Math.max(1.5, cell * 0.25));
  if (nextPoint) dot(nextPoint, "#e03c31", Math.max(2.5, cell * 0.4));
}
