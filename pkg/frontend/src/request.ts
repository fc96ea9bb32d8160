/** Builds generation requests from the editor state. */

import type { ConfigEcho, GenerateRequest, KeyframeFrame } from "./types.js";
import { TimelineState, validateTimeline } from "./timeline.js";

export interface SessionState {
  prompt: string;
  strategy: string;
  w: number;
  wr: number;
  C: number;
  seed: number;
}

export const DEFAULT_SESSION: SessionState = {
  prompt: "",
  strategy: "cond",
  w: 2.5,
  wr: 20.0,
  C: 1,
  seed: 0,
};

export function buildRequest(
  timeline: TimelineState,
  session: SessionState,
): GenerateRequest {
  validateTimeline(timeline);
  const frames: KeyframeFrame[] = timeline.keyframes.map((k) => ({
    index: k.frame,
    joints: k.joints === null ? "all" : k.joints,
    values: k.values,
  }));
  return {
    prompt: session.prompt.trim() === "" ? null : session.prompt,
    length: timeline.length,
    keyframes: { frames },
    strategy: session.strategy,
    w: session.w,
    wr: session.wr,
    C: session.C,
    seed: session.seed,
  };
}

/** Rebuild the exact request from a response's config echo (repro button). */
export function requestFromEcho(echo: ConfigEcho): GenerateRequest {
  return {
    prompt: echo.prompt,
    length: echo.length,
    keyframes: echo.keyframes,
    strategy: echo.strategy,
    w: echo.w,
    wr: echo.w_r,
    C: echo.C,
    seed: echo.seed,
  };
}
