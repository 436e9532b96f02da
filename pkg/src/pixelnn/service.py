"""JSON-over-HTTP service exposing the engine to the control UI.

Endpoints:
  GET  /api/health               liveness + database summary
  GET  /api/exemplars            id, name, tags, inline thumbnail PNG
  POST /api/synthesize           SynthesisRequest -> {"job_id": ...}
  GET  /api/result/{job_id}      poll; candidates inline as base64 PNGs

Jobs run on a worker thread so the UI can poll while a grid is computed;
the job store is in-memory only. All error bodies are {"error": string}.
"""

from __future__ import annotations

import base64
import colorsys
import io
import threading
import uuid

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field
from starlette.exceptions import HTTPException as StarletteHTTPException

from .database import ExemplarDatabase, subset
from .descriptor import compute_field
from .image import ImageRGB, load_png, png_bytes
from .synthesis import generate_candidates, stage1

DEFAULT_KS = tuple(range(1, 11))
DEFAULT_TS = (1, 3, 5, 10, 96)


class SynthesisRequest(BaseModel):
    """Wire format of POST /api/synthesize."""

    input_png_base64: str | None = None
    input_path: str | None = None
    stage1: str = "bicubic"
    ids: list[int] | None = None
    tags: list[str] | None = None
    ks: list[int] = Field(default_factory=lambda: list(DEFAULT_KS))
    ts: list[int] = Field(default_factory=lambda: list(DEFAULT_TS))
    seed: int = 0


def exemplar_id_color(ex_id: int) -> tuple[int, int, int]:
    """Deterministic, well-separated color for an exemplar id (golden-angle hue)."""
    hue = (ex_id * 0.61803398875) % 1.0
    r, g, b = colorsys.hsv_to_rgb(hue, 0.65, 0.95)
    return int(r * 255), int(g * 255), int(b * 255)


def _id_map_png(exemplar_ids: np.ndarray) -> bytes:
    """Colorize a per-pixel exemplar-id map as a PNG."""
    h, w = exemplar_ids.shape
    rgb = np.zeros((h, w, 3), dtype=np.float32)
    for ex_id in np.unique(exemplar_ids):
        color = exemplar_id_color(int(ex_id))
        rgb[exemplar_ids == ex_id] = [c / 255.0 for c in color]
    return png_bytes(ImageRGB(rgb))


def _b64(raw: bytes) -> str:
    return base64.b64encode(raw).decode("ascii")


def create_app(db: ExemplarDatabase) -> FastAPI:
    app = FastAPI(title="pixelnn", docs_url=None, redoc_url=None)
    jobs: dict[str, dict] = {}
    jobs_lock = threading.Lock()

    @app.exception_handler(StarletteHTTPException)
    async def _http_error(request: Request, exc: StarletteHTTPException):
        return JSONResponse({"error": str(exc.detail)}, status_code=exc.status_code)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse({"error": str(exc)}, status_code=400)

    @app.get("/api/health")
    def health():
        w, h = db.image_size
        return {"status": "ok", "exemplar_count": db.count, "image_size": [w, h]}

    @app.get("/api/exemplars")
    def exemplars():
        return [
            {
                "id": e.id,
                "name": e.name,
                "tags": sorted(e.tags),
                "thumbnail_png_base64": _b64(png_bytes(e.target)),
            }
            for e in db.exemplars
        ]

    def _run_job(job_id: str, f_x, active_db, ks, ts, seed) -> None:
        try:
            field = compute_field(f_x, active_db.descriptor_config)
            candidates = generate_candidates(f_x, field, active_db, ks, ts)
            payload = []
            for cand in candidates:
                palette = {
                    int(ex_id): "#%02x%02x%02x" % exemplar_id_color(int(ex_id))
                    for ex_id in np.unique(cand.correspondence.exemplar_ids)
                }
                payload.append(
                    {
                        "k": cand.config.k_global,
                        "t": cand.config.window,
                        "clamped_pixel_count": cand.clamped_pixel_count,
                        "image_png_base64": _b64(png_bytes(cand.image)),
                        "id_map_png_base64": _b64(
                            _id_map_png(cand.correspondence.exemplar_ids)
                        ),
                        "palette": palette,
                    }
                )
            manifest = {
                "ks": sorted({int(k) for k in ks}),
                "ts": sorted({int(t) for t in ts}),
                "seed": seed,
                "exemplar_ids": [e.id for e in active_db.exemplars],
                "candidate_count": len(payload),
            }
            with jobs_lock:
                jobs[job_id] = {
                    "status": "done",
                    "manifest": manifest,
                    "candidates": payload,
                }
        except Exception as exc:  # surface worker failures to the poller
            with jobs_lock:
                jobs[job_id] = {"status": "error", "error": str(exc)}

    @app.post("/api/synthesize")
    def synthesize(req: SynthesisRequest):
        if not req.ks or not req.ts:
            raise StarletteHTTPException(400, "Ks and Ts must be non-empty")
        if min(req.ks) < 1 or min(req.ts) < 1:
            raise StarletteHTTPException(400, "all K and T values must be >= 1")
        if db.descriptor_config is None:
            raise StarletteHTTPException(
                400, "database uses external descriptors; the service cannot "
                "compute query fields for it"
            )
        try:
            if req.input_png_base64 is not None:
                source = load_png(io.BytesIO(base64.b64decode(req.input_png_base64)))
            elif req.input_path is not None:
                source = load_png(req.input_path)
            else:
                raise ValueError("request needs input_png_base64 or input_path")
            active_db = db
            if req.ids is not None or req.tags is not None:
                active_db = subset(db, ids=req.ids, tags=req.tags)
            f_x = stage1(source, req.stage1, db.image_size)
        except (ValueError, FileNotFoundError) as exc:
            message = str(exc)
            if "empty exemplar selection" in message:
                message = "empty exemplar selection"
            raise StarletteHTTPException(400, message) from exc
        job_id = uuid.uuid4().hex
        with jobs_lock:
            jobs[job_id] = {"status": "running"}
        worker = threading.Thread(
            target=_run_job,
            args=(job_id, f_x, active_db, list(req.ks), list(req.ts), req.seed),
            daemon=True,
        )
        worker.start()
        return {"job_id": job_id}

    @app.get("/api/result/{job_id}")
    def result(job_id: str):
        with jobs_lock:
            job = jobs.get(job_id)
        if job is None:
            raise StarletteHTTPException(404, f"unknown job {job_id}")
        return job

    return app


def serve(db: ExemplarDatabase, host: str = "127.0.0.1", port: int = 8400) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(db), host=host, port=port, log_level="warning")
