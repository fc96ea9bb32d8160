/**
 * Editable timeline state: keyframe entries pinned to unique frame indices.
 *
 * Every joint selection implicitly contains the root (pose features are
 * stored relative to it, so a partial keyframe without the root would be
 * meaningless); the helpers here enforce that rule so the UI can never send
 * a violating request.
 */

export interface KeyframeEntry {
  frame: number;
  /** null means a full-pose keyframe ("all"). */
  joints: string[] | null;
  /** Edited values keyed like the request schema (e.g. "root" -> 4 numbers). */
  values: Record<string, number[]>;
}

export interface TimelineState {
  length: number;
  fps: number;
  keyframes: KeyframeEntry[];
  playhead: number;
}

export class TimelineError extends Error {}

export function createTimeline(length: number, fps: number): TimelineState {
  if (length < 1) throw new TimelineError("timeline needs at least one frame");
  return { length, fps, keyframes: [], playhead: 0 };
}

export function withRoot(joints: string[] | null): string[] | null {
  if (joints === null) return null;
  return joints.includes("root") ? [...joints] : ["root", ...joints];
}

export function addKeyframe(
  state: TimelineState,
  frame: number,
  joints: string[] | null = null,
  values: Record<string, number[]> = {},
): TimelineState {
  if (!Number.isInteger(frame) || frame < 0 || frame >= state.length) {
    throw new TimelineError(`frame ${frame} outside [0, ${state.length})`);
  }
  if (state.keyframes.some((k) => k.frame === frame)) {
    throw new TimelineError(`frame ${frame} already has a keyframe`);
  }
  const entry: KeyframeEntry = { frame, joints: withRoot(joints), values };
  const keyframes = [...state.keyframes, entry].sort((a, b) => a.frame - b.frame);
  return { ...state, keyframes };
}

export function removeKeyframe(state: TimelineState, frame: number): TimelineState {
  return { ...state, keyframes: state.keyframes.filter((k) => k.frame !== frame) };
}

export function updateKeyframeValues(
  state: TimelineState,
  frame: number,
  values: Record<string, number[]>,
): TimelineState {
  const keyframes = state.keyframes.map((k) =>
    k.frame === frame ? { ...k, values: { ...k.values, ...values } } : k,
  );
  return { ...state, keyframes };
}

/** Capture the generated pose at a frame as an editable full keyframe. */
export function captureKeyframeFromFeatures(
  state: TimelineState,
  frame: number,
  featureRow: number[],
): TimelineState {
  return addKeyframe(state, frame, null, { all: [...featureRow] });
}

export function setPlayhead(state: TimelineState, frame: number): TimelineState {
  const clamped = Math.max(0, Math.min(state.length - 1, Math.floor(frame)));
  return { ...state, playhead: clamped };
}

/** Invariant check used by tests and before every request. */
export function validateTimeline(state: TimelineState): void {
  const seen = new Set<number>();
  for (const k of state.keyframes) {
    if (k.frame < 0 || k.frame >= state.length) {
      throw new TimelineError(`keyframe at ${k.frame} outside the timeline`);
    }
    if (seen.has(k.frame)) throw new TimelineError(`duplicate keyframe ${k.frame}`);
    seen.add(k.frame);
    if (k.joints !== null && !k.joints.includes("root")) {
      throw new TimelineError(`keyframe ${k.frame} omits the root joint`);
    }
  }
}
