// Canvas drawing: the received PNG as the backdrop, detection boxes
// stroked on top client-side so hit-testing matches exactly what is drawn.

import { ClientState, boxColor } from "./state.js";

export function drawBoxes(
  ctx: CanvasRenderingContext2D,
  state: ClientState,
  now: number,
): void {
  const frame = state.displayed;
  if (!frame) {
    return;
  }
  const highlighted = state.activeHighlight(now);
  for (const det of frame.meta.detections) {
    const color = boxColor(det.state, highlighted.has(det.class));
    if (!color) {
      continue;
    }
    const [x, y, w, h] = det.bbox;
    ctx.lineWidth = det.track === state.selectedTrack ? 4 : 2;
    ctx.strokeStyle = color;
    ctx.strokeRect(x + 1, y + 1, w - 2, h - 2);
    ctx.font = "10px sans-serif";
    ctx.fillStyle = color;
    ctx.fillText(`${det.class} (${det.state})`, x + 2, Math.max(10, y - 2));
  }
}

export async function drawFrame(
  canvas: HTMLCanvasElement,
  state: ClientState,
  now: number,
): Promise<void> {
  const frame = state.displayed;
  const ctx = canvas.getContext("2d");
  if (!frame || !ctx || !frame.png) {
    return;
  }
  const blob = new Blob([frame.png.buffer as ArrayBuffer], { type: "image/png" });
  const bitmap = await createImageBitmap(blob);
  canvas.width = bitmap.width;
  canvas.height = bitmap.height;
  ctx.drawImage(bitmap, 0, 0);
  bitmap.close();
  drawBoxes(ctx, state, now);
}
