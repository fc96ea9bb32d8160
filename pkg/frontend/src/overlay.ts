/**
 * Client-side recomputation of the per-keyframe root error, shown as an
 * overlay next to the timeline. Matches the server metric: Euclidean
 * distance between generated and target root ground-plane positions, in
 * meters.
 */

import type { GenerateResponse } from "./types.js";
import type { TimelineState } from "./timeline.js";

export interface KeyframeDiff {
  frame: number;
  generated: [number, number];
  target: [number, number];
  errorM: number;
}

/** Extract the target root (x, z) of a keyframe entry, if it was edited. */
export function targetRootXZ(
  values: Record<string, number[]>,
): [number, number] | null {
  if (values["root"] && values["root"].length === 4) {
    return [values["root"][1], values["root"][2]];
  }
  if (values["root_xz"] && values["root_xz"].length === 2) {
    return [values["root_xz"][0], values["root_xz"][1]];
  }
  if (values["all"] && values["all"].length >= 4) {
    return [values["all"][1], values["all"][2]];
  }
  return null;
}

export function diffOverlay(
  rootXZ: [number, number][],
  timeline: TimelineState,
): KeyframeDiff[] {
  const out: KeyframeDiff[] = [];
  for (const k of timeline.keyframes) {
    const target = targetRootXZ(k.values);
    if (target === null || k.frame >= rootXZ.length) continue;
    const gen = rootXZ[k.frame];
    const errorM = Math.hypot(gen[0] - target[0], gen[1] - target[1]);
    out.push({ frame: k.frame, generated: gen, target, errorM });
  }
  return out;
}

export function meanError(diffs: KeyframeDiff[]): number {
  if (diffs.length === 0) return 0;
  return diffs.reduce((acc, d) => acc + d.errorM, 0) / diffs.length;
}

/** Root ground-plane positions, either from inline features or joints. */
export function rootTrackFromResponse(res: GenerateResponse): [number, number][] {
  if (res.features) {
    return res.features.map((row) => [row[1], row[2]] as [number, number]);
  }
  // joint_positions are [N][J][3] world coordinates, root first
  return res.joint_positions.map(
    (frame) => [frame[0][0], frame[0][2]] as [number, number],
  );
}
