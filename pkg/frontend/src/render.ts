/**
 * Canvas renderers: a side-view skeleton viewport playing the generated
 * motion and a top-down trajectory plot of the root path. Observed keyframes
 * draw in blue, generated frames in yellow.
 */

import type { SkeletonSpec } from "./types.js";
import type { KeyframeDiff } from "./overlay.js";

export const KEYFRAME_COLOR = "#4d9de0";
export const GENERATED_COLOR = "#e8c547";

interface Camera {
  scale: number;
  cx: number;
  cy: number;
}

function fitCamera(
  points: number[][],
  width: number,
  height: number,
  xi: number,
  yi: number,
): Camera {
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  for (const p of points) {
    minX = Math.min(minX, p[xi]); maxX = Math.max(maxX, p[xi]);
    minY = Math.min(minY, p[yi]); maxY = Math.max(maxY, p[yi]);
  }
  const spanX = Math.max(maxX - minX, 0.5);
  const spanY = Math.max(maxY - minY, 0.5);
  const scale = 0.85 * Math.min(width / spanX, height / spanY);
  return { scale, cx: (minX + maxX) / 2, cy: (minY + maxY) / 2 };
}

/** Draw one frame's skeleton, orthographic x/y (side view). */
export function drawSkeletonFrame(
  ctx: CanvasRenderingContext2D,
  joints: number[][],
  skeleton: SkeletonSpec,
  isKeyframe: boolean,
  allFrames: number[][][],
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  const flat = allFrames.flat();
  const cam = fitCamera(flat, width, height, 0, 1);
  const px = (p: number[]) => [
    width / 2 + (p[0] - cam.cx) * cam.scale,
    height / 2 - (p[1] - cam.cy) * cam.scale,
  ];
  ctx.strokeStyle = isKeyframe ? KEYFRAME_COLOR : GENERATED_COLOR;
  ctx.fillStyle = ctx.strokeStyle;
  ctx.lineWidth = 2;
  for (let j = 0; j < skeleton.joint_names.length; j++) {
    const parent = skeleton.parent_index[j];
    const [x, y] = px(joints[j]);
    if (parent >= 0) {
      const [px0, py0] = px(joints[parent]);
      ctx.beginPath();
      ctx.moveTo(px0, py0);
      ctx.lineTo(x, y);
      ctx.stroke();
    }
    ctx.beginPath();
    ctx.arc(x, y, 2.5, 0, 2 * Math.PI);
    ctx.fill();
  }
}

/** Top-down (x/z) root trajectory with keyframe targets and error labels. */
export function drawTrajectory(
  ctx: CanvasRenderingContext2D,
  rootXZ: [number, number][],
  diffs: KeyframeDiff[],
  playhead: number,
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  if (rootXZ.length === 0) return;
  const pts = [...rootXZ, ...diffs.map((d) => d.target)];
  const cam = fitCamera(pts as number[][], width, height, 0, 1);
  const px = (p: [number, number] | number[]) => [
    width / 2 + (p[0] - cam.cx) * cam.scale,
    height / 2 - (p[1] - cam.cy) * cam.scale,
  ];

  ctx.strokeStyle = GENERATED_COLOR;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  rootXZ.forEach((p, i) => {
    const [x, y] = px(p);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();

  ctx.fillStyle = KEYFRAME_COLOR;
  ctx.font = "11px sans-serif";
  for (const d of diffs) {
    const [tx, ty] = px(d.target);
    ctx.beginPath();
    ctx.arc(tx, ty, 4, 0, 2 * Math.PI);
    ctx.fill();
    const [gx, gy] = px(d.generated);
    ctx.strokeStyle = "#999";
    ctx.setLineDash([3, 3]);
    ctx.beginPath();
    ctx.moveTo(tx, ty);
    ctx.lineTo(gx, gy);
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillText(`${(d.errorM * 100).toFixed(1)} cm`, tx + 6, ty - 6);
  }

  const [hx, hy] = px(rootXZ[Math.min(playhead, rootXZ.length - 1)]);
  ctx.fillStyle = "#fff";
  ctx.beginPath();
  ctx.arc(hx, hy, 3, 0, 2 * Math.PI);
  ctx.fill();
}
