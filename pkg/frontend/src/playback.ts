/** Playback clock: advances the playhead at the clip's native rate. */

export interface PlaybackState {
  frame: number;
  frameCount: number;
  fps: number;
  playing: boolean;
  loop: boolean;
}

export function createPlayback(frameCount: number, fps: number): PlaybackState {
  return { frame: 0, frameCount, fps, playing: false, loop: true };
}

/** Advance by wall-clock milliseconds; returns the new state. */
export function tick(state: PlaybackState, elapsedMs: number): PlaybackState {
  if (!state.playing || state.frameCount < 1) return state;
  const advance = Math.floor((elapsedMs / 1000) * state.fps);
  if (advance < 1) return state;
  let frame = state.frame + advance;
  if (frame >= state.frameCount) {
    if (state.loop) frame %= state.frameCount;
    else return { ...state, frame: state.frameCount - 1, playing: false };
  }
  return { ...state, frame };
}

export function scrub(state: PlaybackState, frame: number): PlaybackState {
  const clamped = Math.max(0, Math.min(state.frameCount - 1, Math.floor(frame)));
  return { ...state, frame: clamped, playing: false };
}

export function togglePlay(state: PlaybackState): PlaybackState {
  return { ...state, playing: !state.playing };
}
