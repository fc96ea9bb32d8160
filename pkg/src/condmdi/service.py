"""HTTP generation service.

Endpoints:

* ``GET /health``: service and model identity.
* ``GET /skeleton``: the checkpoint's skeleton description.
* ``POST /generate``: run the sampler for one request. Responses carry the
  raw features (base64 MSEQ1 by default, inline arrays with ``?fmt=json``),
  recovered world-space joint positions, timing, and the fully resolved
  config so any run can be reproduced from its response alone.

Malformed requests return 400 with machine-readable field paths; a strategy
the checkpoint cannot serve returns 422; 503 signals a full worker queue. The
model snapshot is read-only and shared by a bounded worker pool.
"""
from __future__ import annotations

import base64
import os
import threading
import time
from typing import Any, Literal

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import __version__
from .checkpoint import LoadedCheckpoint, load_checkpoint
from .keyframes import KeyframeValidationError, parse_keyframes
from .masks import ObservationSpec
from .motion import recover_joint_positions
from .mseq import mseq_bytes
from .sampling import SamplerConfig, SamplerError, sample_batch


class KeyframeFrame(BaseModel):
    index: int
    joints: list[str] | Literal["all"] = "all"
    values: dict[str, list[float]] = Field(default_factory=dict)


class KeyframeDoc(BaseModel):
    frames: list[KeyframeFrame] = Field(default_factory=list)


class GenerateRequest(BaseModel):
    prompt: str | None = None
    length: int = Field(gt=0)
    keyframes: KeyframeDoc = Field(default_factory=KeyframeDoc)
    strategy: str = "cond"
    w: float = 2.5
    wr: float = 20.0
    C: int = 1
    seed: int = 0


class GenerateResponse(BaseModel):
    features_mseq_b64: str | None = None
    features: list[list[float]] | None = None
    joint_positions: list[list[list[float]]]
    frames: int
    fps: float
    timing_ms: float
    denoiser_evals: int
    config: dict[str, Any]


class FieldErrorResponse(JSONResponse):
    def __init__(self, status_code: int, errors: list[dict[str, str]]):
        super().__init__(status_code=status_code, content={"errors": errors})


def _mseq_b64(seq) -> str:
    return base64.b64encode(mseq_bytes(seq)).decode()


def create_app(checkpoint: LoadedCheckpoint | str,
               max_workers: int | None = None,
               queue_limit: int | None = None,
               ui_dir: str | None = None) -> FastAPI:
    ckpt = (checkpoint if isinstance(checkpoint, LoadedCheckpoint)
            else load_checkpoint(checkpoint))
    workers = max_workers or (os.cpu_count() or 1)
    backlog = queue_limit if queue_limit is not None else 4 * workers
    admission = threading.Semaphore(workers + backlog)
    compute = threading.Semaphore(workers)

    app = FastAPI(title="condmdi generation service", version=__version__)
    app.state.admission = admission

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        errors = []
        for err in exc.errors():
            loc = ".".join(str(x) for x in err["loc"] if x != "body")
            errors.append({"path": loc, "message": err["msg"]})
        return FieldErrorResponse(400, errors)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__,
                "model_digest": ckpt.digest(), "train_step": ckpt.state.step,
                "strategy_input_mode": ckpt.config.input_mode,
                "max_frames": ckpt.config.max_frames}

    @app.get("/skeleton")
    def skeleton():
        return ckpt.layout.skeleton.to_dict()

    @app.post("/generate", response_model=GenerateResponse,
              response_model_exclude_none=True)
    def generate(req: GenerateRequest, fmt: str = Query("mseq")):
        if not admission.acquire(blocking=False):
            return JSONResponse(status_code=503,
                                content={"errors": [{"path": "", "message": "queue full"}]})
        try:
            return _generate(req, fmt)
        finally:
            admission.release()

    def _generate(req: GenerateRequest, fmt: str):
        layout = ckpt.layout
        N = ckpt.config.max_frames
        if req.length > N:
            return FieldErrorResponse(400, [{
                "path": "length",
                "message": f"length {req.length} exceeds model maximum {N}"}])
        try:
            obs_small = parse_keyframes(req.keyframes.model_dump(), layout, req.length)
        except KeyframeValidationError as e:
            return FieldErrorResponse(400, [{"path": e.path, "message": e.detail}])

        mask = np.zeros((N, layout.total_width), dtype=np.float32)
        signal = np.zeros_like(mask)
        mask[:req.length] = obs_small.mask
        signal[:req.length] = obs_small.signal
        obs = ObservationSpec.from_values(signal, mask)

        try:
            cfg = SamplerConfig(strategy=req.strategy, cfg_weight=req.w,
                                reconstruction_weight=req.wr, stop_step=req.C,
                                seed=req.seed)
        except (SamplerError, ValueError) as e:
            return FieldErrorResponse(400, [{"path": "strategy", "message": str(e)}])

        started = time.perf_counter()
        with compute:
            try:
                result = sample_batch(cfg, [req.prompt], [obs], [req.length], ckpt)
            except SamplerError as e:
                return FieldErrorResponse(422, [{"path": "strategy", "message": str(e)}])
        seq = result.sequences[0]
        positions = recover_joint_positions(seq, layout.skeleton)[:req.length]
        total_ms = (time.perf_counter() - started) * 1000.0

        echo = {**cfg.to_dict(), "prompt": req.prompt, "length": req.length,
                "keyframes": req.keyframes.model_dump(), "fmt": fmt,
                "model_digest": ckpt.digest()}
        payload = dict(
            joint_positions=positions.tolist(),
            frames=req.length,
            fps=ckpt.fps,
            timing_ms=total_ms,
            denoiser_evals=result.denoiser_evals,
            config=echo,
        )
        if fmt == "json":
            payload["features"] = seq.data[:req.length].tolist()
        else:
            payload["features_mseq_b64"] = _mseq_b64(seq)
        return GenerateResponse(**payload)

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app
