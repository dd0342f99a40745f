import type { SchematicObject } from "./types.js";

// Top-down schematic: floor-plane footprints straight from the API, walls as
// outlines, landmarks highlighted, the task's object emphasized.

export interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
}

/** World-to-canvas transform fitting all footprints with a margin. Pure so it
 * can be tested without a canvas. */
export function fitViewport(
  objects: SchematicObject[],
  width: number,
  height: number,
  margin = 20,
): Viewport {
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const obj of objects) {
    for (const [x, y] of obj.corners) {
      minX = Math.min(minX, x);
      minY = Math.min(minY, y);
      maxX = Math.max(maxX, x);
      maxY = Math.max(maxY, y);
    }
  }
  if (!Number.isFinite(minX)) {
    return { scale: 1, offsetX: 0, offsetY: 0 };
  }
  const spanX = Math.max(maxX - minX, 1e-6);
  const spanY = Math.max(maxY - minY, 1e-6);
  const scale = Math.min((width - 2 * margin) / spanX, (height - 2 * margin) / spanY);
  // y flipped so +y in the scene points up on screen
  return {
    scale,
    offsetX: margin - minX * scale + (width - 2 * margin - spanX * scale) / 2,
    offsetY: height - margin + minY * scale - (height - 2 * margin - spanY * scale) / 2,
  };
}

export function toCanvas(viewport: Viewport, x: number, y: number): [number, number] {
  return [x * viewport.scale + viewport.offsetX, -y * viewport.scale + viewport.offsetY];
}

const COLORS = {
  background: "#fafafa",
  wall: "#9e9e9e",
  object: "#b0bec5",
  objectStroke: "#546e7a",
  landmark: "#ffd54f",
  landmarkStroke: "#b8860b",
  target: "#ef5350",
  targetStroke: "#b71c1c",
  label: "#263238",
};

export function drawSchematic(
  canvas: HTMLCanvasElement,
  objects: SchematicObject[],
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const viewport = fitViewport(objects, canvas.width, canvas.height);
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  const walls = objects.filter((o) => o.wall);
  const furniture = objects.filter((o) => !o.wall);
  for (const obj of [...walls, ...furniture]) {
    ctx.beginPath();
    obj.corners.forEach(([x, y], i) => {
      const [cx, cy] = toCanvas(viewport, x, y);
      if (i === 0) ctx.moveTo(cx, cy);
      else ctx.lineTo(cx, cy);
    });
    ctx.closePath();
    if (obj.wall) {
      ctx.strokeStyle = COLORS.wall;
      ctx.lineWidth = 2;
      ctx.stroke();
      continue;
    }
    if (obj.target) {
      ctx.fillStyle = COLORS.target;
      ctx.strokeStyle = COLORS.targetStroke;
    } else if (obj.landmark) {
      ctx.fillStyle = COLORS.landmark;
      ctx.strokeStyle = COLORS.landmarkStroke;
    } else {
      ctx.fillStyle = COLORS.object;
      ctx.strokeStyle = COLORS.objectStroke;
    }
    ctx.lineWidth = obj.target ? 2.5 : 1.5;
    ctx.fill();
    ctx.stroke();
  }
  ctx.fillStyle = COLORS.label;
  ctx.font = "11px system-ui, sans-serif";
  ctx.textAlign = "center";
  for (const obj of furniture) {
    const cx = obj.corners.reduce((s, c) => s + c[0], 0) / obj.corners.length;
    const cy = obj.corners.reduce((s, c) => s + c[1], 0) / obj.corners.length;
    const [px, py] = toCanvas(viewport, cx, cy);
    ctx.fillText(obj.key, px, py + 4);
  }
}
