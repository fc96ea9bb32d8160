/** Thin fetch client for the generation service. */

import type {
  GenerateRequest,
  GenerateResponse,
  HealthResponse,
  SkeletonSpec,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public errors: { path: string; message: string }[],
  ) {
    super(errors.map((e) => `${e.path}: ${e.message}`).join("; ") || `HTTP ${status}`);
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(path, init);
  if (!res.ok) {
    const body = await res.json().catch(() => ({ errors: [] }));
    throw new ApiError(res.status, body.errors ?? []);
  }
  return res.json() as Promise<T>;
}

export function getHealth(): Promise<HealthResponse> {
  return request<HealthResponse>("/health");
}

export function getSkeleton(): Promise<SkeletonSpec> {
  return request<SkeletonSpec>("/skeleton");
}

export function postGenerate(
  body: GenerateRequest,
  signal?: AbortSignal,
): Promise<GenerateResponse> {
  return request<GenerateResponse>("/generate?fmt=json", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
    signal,
  });
}
