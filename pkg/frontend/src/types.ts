/** Wire types mirroring the generation service's JSON contracts. */

export interface SkeletonSpec {
  name: string;
  joint_names: string[];
  parent_index: number[];
  rest_offset: number[][];
  left_foot_ids: number[];
  right_foot_ids: number[];
  root_joint_id: number;
  vr_joint_names: string[];
}

export interface KeyframeFrame {
  index: number;
  joints: string[] | "all";
  values: Record<string, number[]>;
}

export interface KeyframeDoc {
  frames: KeyframeFrame[];
}

export interface GenerateRequest {
  prompt: string | null;
  length: number;
  keyframes: KeyframeDoc;
  strategy: string;
  w: number;
  wr: number;
  C: number;
  seed: number;
}

export interface ConfigEcho {
  strategy: string;
  w: number;
  w_r: number;
  C: number;
  gradient_mode: string;
  seed: number;
  prompt: string | null;
  length: number;
  keyframes: KeyframeDoc;
  fmt: string;
  model_digest: string;
}

export interface GenerateResponse {
  features?: number[][];
  features_mseq_b64?: string;
  joint_positions: number[][][];
  frames: number;
  fps: number;
  timing_ms: number;
  denoiser_evals: number;
  config: ConfigEcho;
}

export interface HealthResponse {
  status: string;
  version: string;
  model_digest: string;
  train_step: number;
  max_frames: number;
}
