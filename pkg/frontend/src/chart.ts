/** Line chart of the pending spectrum with the current target overlaid.
 *
 * Both curves are drawn on a shared 0 to 1 vertical axis so their shapes
 * can be compared directly; the horizontal axis is the bias sweep.
 */

export interface ChartPoint {
  x: number;
  y: number;
}

/** Map series values to canvas pixel coordinates on a fixed 0..1 y axis. */
export function toPixels(
  bias: number[],
  values: number[],
  width: number,
  height: number,
  pad = 8,
): ChartPoint[] {
  if (bias.length === 0 || bias.length !== values.length) return [];
  let bLo = bias[0];
  let bHi = bias[0];
  for (const b of bias) {
    if (b < bLo) bLo = b;
    if (b > bHi) bHi = b;
  }
  const span = bHi > bLo ? bHi - bLo : 1;
  const w = width - 2 * pad;
  const h = height - 2 * pad;
  return bias.map((b, i) => ({
    x: pad + ((b - bLo) / span) * w,
    y: pad + (1 - Math.min(1, Math.max(0, values[i]))) * h,
  }));
}

function stroke(
  ctx: CanvasRenderingContext2D,
  pts: ChartPoint[],
  style: string,
  width: number,
  dashed: boolean,
): void {
  if (pts.length < 2) return;
  ctx.strokeStyle = style;
  ctx.lineWidth = width;
  ctx.setLineDash(dashed ? [6, 4] : []);
  ctx.beginPath();
  ctx.moveTo(pts[0].x, pts[0].y);
  for (let i = 1; i < pts.length; i++) ctx.lineTo(pts[i].x, pts[i].y);
  ctx.stroke();
  ctx.setLineDash([]);
}

export function drawChart(
  canvas: HTMLCanvasElement,
  bias: number[],
  spectrum: number[],
  target: number[] | null,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#444";
  ctx.lineWidth = 1;
  ctx.strokeRect(0.5, 0.5, canvas.width - 1, canvas.height - 1);
  if (target && target.length === bias.length) {
    stroke(ctx, toPixels(bias, target, canvas.width, canvas.height), "#e8a33d", 1.5, true);
  }
  stroke(ctx, toPixels(bias, spectrum, canvas.width, canvas.height), "#5ab0f0", 2, false);
}
