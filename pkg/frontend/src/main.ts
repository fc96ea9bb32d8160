/** Keyframe studio: wires the editor state to the DOM and the service. */

import { getHealth, getSkeleton, postGenerate, ApiError } from "./api.js";
import { diffOverlay, meanError, rootTrackFromResponse } from "./overlay.js";
import { createPlayback, scrub, tick, togglePlay } from "./playback.js";
import { DEFAULT_SESSION, buildRequest, requestFromEcho } from "./request.js";
import { drawSkeletonFrame, drawTrajectory } from "./render.js";
import {
  TimelineError,
  addKeyframe,
  createTimeline,
  removeKeyframe,
  setPlayhead,
  updateKeyframeValues,
} from "./timeline.js";
import type { GenerateRequest, GenerateResponse, SkeletonSpec } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

let skeleton: SkeletonSpec | null = null;
let timeline = createTimeline(48, 20);
let session = { ...DEFAULT_SESSION };
let lastResponse: GenerateResponse | null = null;
let playback = createPlayback(timeline.length, timeline.fps);
let inflight: AbortController | null = null;

function banner(message: string, isError = true): void {
  const el = $("banner");
  el.textContent = message;
  el.className = message ? (isError ? "banner error" : "banner info") : "banner";
}

function syncSessionFromControls(): void {
  session = {
    prompt: ($("prompt") as HTMLInputElement).value,
    strategy: ($("strategy") as HTMLSelectElement).value,
    w: Number(($("cfg-w") as HTMLInputElement).value),
    wr: Number(($("cfg-wr") as HTMLInputElement).value),
    C: Number(($("cfg-c") as HTMLInputElement).value),
    seed: Number(($("seed") as HTMLInputElement).value),
  };
}

function renderKeyframeList(): void {
  const list = $("keyframe-list");
  list.innerHTML = "";
  const diffs = lastResponse
    ? diffOverlay(rootTrackFromResponse(lastResponse), timeline)
    : [];
  for (const k of timeline.keyframes) {
    const li = document.createElement("li");
    const joints = k.joints === null ? "all joints" : k.joints.join(", ");
    const err = diffs.find((d) => d.frame === k.frame);
    const label = err ? ` - err ${(err.errorM * 100).toFixed(1)} cm` : "";
    li.textContent = `frame ${k.frame} (${joints})${label}`;
    const rm = document.createElement("button");
    rm.textContent = "✕";
    rm.onclick = () => {
      timeline = removeKeyframe(timeline, k.frame);
      renderAll();
    };
    li.appendChild(rm);
    list.appendChild(li);
  }
  const diffsMean = meanError(diffs);
  $("mean-error").textContent = diffs.length
    ? `mean keyframe error: ${(diffsMean * 100).toFixed(2)} cm`
    : "";
}

function renderCanvases(): void {
  const viewport = ($("viewport") as HTMLCanvasElement).getContext("2d");
  const topview = ($("topview") as HTMLCanvasElement).getContext("2d");
  if (!viewport || !topview) return;
  if (!lastResponse || !skeleton) {
    viewport.clearRect(0, 0, viewport.canvas.width, viewport.canvas.height);
    topview.clearRect(0, 0, topview.canvas.width, topview.canvas.height);
    return;
  }
  const frames = lastResponse.joint_positions;
  const frame = Math.min(playback.frame, frames.length - 1);
  const isKeyframe = timeline.keyframes.some((k) => k.frame === frame);
  drawSkeletonFrame(viewport, frames[frame], skeleton, isKeyframe, frames);
  const track = rootTrackFromResponse(lastResponse);
  drawTrajectory(topview, track, diffOverlay(track, timeline), frame);
  $("frame-label").textContent = `frame ${frame + 1} / ${frames.length}`;
}

function renderAll(): void {
  renderKeyframeList();
  renderCanvases();
  ($("length") as HTMLInputElement).value = String(timeline.length);
  ($("scrubber") as HTMLInputElement).max = String(timeline.length - 1);
  ($("scrubber") as HTMLInputElement).value = String(playback.frame);
}

async function generate(request: GenerateRequest): Promise<void> {
  if (inflight) inflight.abort();
  inflight = new AbortController();
  banner("generating...", false);
  $("generate").setAttribute("disabled", "1");
  try {
    const res = await postGenerate(request, inflight.signal);
    lastResponse = res;
    playback = createPlayback(res.frames, res.fps);
    banner(`done in ${(res.timing_ms / 1000).toFixed(1)} s `
      + `(${res.denoiser_evals} denoiser evals)`, false);
  } catch (e) {
    if (e instanceof ApiError) banner(e.message);
    else if ((e as Error).name !== "AbortError") banner(String(e));
  } finally {
    inflight = null;
    $("generate").removeAttribute("disabled");
    renderAll();
  }
}

function onGenerate(): void {
  syncSessionFromControls();
  try {
    void generate(buildRequest(timeline, session));
  } catch (e) {
    if (e instanceof TimelineError) banner(e.message);
    else throw e;
  }
}

function onRepro(): void {
  if (!lastResponse) {
    banner("nothing to replay yet");
    return;
  }
  void generate(requestFromEcho(lastResponse.config));
}

function onAddKeyframe(): void {
  const frame = playback.frame;
  try {
    if (lastResponse && lastResponse.features) {
      // capture the generated pose, then let the user edit the root
      timeline = addKeyframe(timeline, frame, null, {
        all: [...lastResponse.features[frame]],
      });
    } else {
      const x = Number(($("kf-x") as HTMLInputElement).value) || 0;
      const z = Number(($("kf-z") as HTMLInputElement).value) || 0;
      timeline = addKeyframe(timeline, frame, ["root"], {
        root: [0, x, z, 0.9],
      });
    }
    banner("");
  } catch (e) {
    if (e instanceof TimelineError) banner(e.message);
    else throw e;
  }
  renderAll();
}

function onEditRoot(): void {
  const frame = playback.frame;
  if (!timeline.keyframes.some((k) => k.frame === frame)) return;
  const x = Number(($("kf-x") as HTMLInputElement).value) || 0;
  const z = Number(($("kf-z") as HTMLInputElement).value) || 0;
  timeline = updateKeyframeValues(timeline, frame, { root: [0, x, z, 0.9] });
  renderAll();
}

function loop(last: number): void {
  requestAnimationFrame((now) => {
    const next = tick(playback, now - last);
    if (next.frame !== playback.frame) {
      playback = next;
      timeline = setPlayhead(timeline, playback.frame);
      renderCanvases();
      ($("scrubber") as HTMLInputElement).value = String(playback.frame);
      loop(now);
    } else {
      playback = next;
      loop(playback.playing ? now : last);
    }
  });
}

export async function start(): Promise<void> {
  try {
    const health = await getHealth();
    skeleton = await getSkeleton();
    timeline = createTimeline(Math.min(48, health.max_frames), 20);
    playback = createPlayback(timeline.length, timeline.fps);
    banner(`model ${health.model_digest.slice(0, 8)} @ step ${health.train_step}`,
      false);
  } catch (e) {
    banner(`service unreachable: ${String(e)}`);
    return;
  }
  $("generate").onclick = onGenerate;
  $("repro").onclick = onRepro;
  $("add-keyframe").onclick = onAddKeyframe;
  $("edit-root").onclick = onEditRoot;
  $("play").onclick = () => {
    playback = togglePlay(playback);
  };
  ($("scrubber") as HTMLInputElement).oninput = (ev) => {
    playback = scrub(playback, Number((ev.target as HTMLInputElement).value));
    renderCanvases();
  };
  ($("length") as HTMLInputElement).onchange = (ev) => {
    const n = Number((ev.target as HTMLInputElement).value);
    timeline = createTimeline(Math.max(1, n), timeline.fps);
    playback = createPlayback(timeline.length, timeline.fps);
    lastResponse = null;
    renderAll();
  };
  renderAll();
  loop(performance.now());
}

if (typeof document !== "undefined" && document.getElementById("generate")) {
  void start();
}
