"""REST serving layer: multipart image upload in, six-key JSON scores out.

The endpoint path (``/re-tagger``), the multipart field name (``image``),
and the response key set are wire contracts; responses always carry the six
class keys in canonical order with 4 fractional digits.
"""

from __future__ import annotations

import asyncio
import logging
import time
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, File, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from .inference import ImageDecodeError, format_scores_json, predict

logger = logging.getLogger(__name__)

ENDPOINT_PATH = "/re-tagger"
UPLOAD_FIELD = "image"
DEFAULT_MAX_UPLOAD_BYTES = 10 * 1024 * 1024


@dataclass(frozen=True)
class ServiceConfig:
    """Bind address, bundle location, and request-handling limits."""

    host: str = "127.0.0.1"
    port: int = 5000
    bundle_path: Path | None = None
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD_BYTES
    request_timeout_seconds: float = 30.0
    worker_concurrency: int = 0  # 0 = unlimited in-flight requests
    cors_origins: tuple[str, ...] = ("*",)

    def __post_init__(self):
        if self.max_upload_bytes < 1:
            raise ValueError("max_upload_bytes must be positive")
        if self.request_timeout_seconds <= 0:
            raise ValueError("request_timeout_seconds must be positive")
        if self.bundle_path is not None:
            object.__setattr__(self, "bundle_path", Path(self.bundle_path))


def create_app(config: ServiceConfig = ServiceConfig(), bundle=None) -> FastAPI:
    """Build the application; the bundle loads at startup unless passed in."""

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if app.state.bundle is None and config.bundle_path is not None:
            from .bundle import load_bundle

            logger.info("loading bundle from %s", config.bundle_path)
            app.state.bundle = load_bundle(config.bundle_path)
            logger.info("bundle ready: %s", app.state.bundle.bundle_id)
        yield

    app = FastAPI(
        title="room-image tagging service",
        docs_url=None,
        redoc_url=None,
        lifespan=lifespan,
    )
    app.state.config = config
    app.state.bundle = bundle

    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def multipart_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": f"multipart form field '{UPLOAD_FIELD}' is required"},
        )

    @app.middleware("http")
    async def request_logging(request: Request, call_next):
        started = time.perf_counter()
        try:
            response = await asyncio.wait_for(
                call_next(request), timeout=config.request_timeout_seconds
            )
        except asyncio.TimeoutError:
            logger.error("request timed out: %s %s", request.method, request.url.path)
            return JSONResponse(status_code=504, content={"error": "request timed out"})
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        logger.info(
            "request method=%s path=%s status=%d elapsed_ms=%.1f",
            request.method,
            request.url.path,
            response.status_code,
            elapsed_ms,
        )
        return response

    @app.get("/healthz")
    async def healthz():
        if app.state.bundle is None:
            return JSONResponse(status_code=503, content={"status": "loading"})
        return {"status": "ok", "bundle_version": app.state.bundle.version}

    @app.post(ENDPOINT_PATH)
    async def tag_image(request: Request, image: UploadFile = File(...)):
        declared = request.headers.get("content-length")
        if declared and declared.isdigit() and int(declared) > config.max_upload_bytes + 4096:
            return JSONResponse(
                status_code=413,
                content={"error": f"payload exceeds {config.max_upload_bytes} bytes"},
            )
        data = await image.read()
        if len(data) > config.max_upload_bytes:
            return JSONResponse(
                status_code=413,
                content={"error": f"payload exceeds {config.max_upload_bytes} bytes"},
            )
        bundle = app.state.bundle
        if bundle is None:
            return JSONResponse(status_code=503, content={"status": "loading"})
        try:
            scores = await asyncio.get_event_loop().run_in_executor(
                None, predict, bundle, data
            )
        except ImageDecodeError as exc:
            return JSONResponse(status_code=415, content={"error": str(exc)})
        except Exception:
            error_id = uuid.uuid4().hex
            logger.exception("prediction failed (error_id=%s)", error_id)
            return JSONResponse(
                status_code=500,
                content={"error": "internal error", "error_id": error_id},
            )
        return Response(
            content=format_scores_json(scores), media_type="application/json"
        )

    return app


def run_server(config: ServiceConfig, bundle=None) -> None:
    """Serve until interrupted; SIGTERM/SIGINT shut down gracefully (exit 0)."""
    import signal
    import socket
    import threading

    import uvicorn

    # Fail fast with a clear message when the port is taken (the probe keeps
    # SO_REUSEADDR off so an active listener is always detected).
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((config.host, config.port))
    finally:
        probe.close()

    # After a graceful stop uvicorn restores the original signal handlers and
    # re-raises whatever it captured; the default SIGTERM disposition would
    # then kill the process, so park a no-op handler first.
    if threading.current_thread() is threading.main_thread():
        signal.signal(signal.SIGTERM, lambda signum, frame: None)

    app = create_app(config, bundle=bundle)
    try:
        uvicorn.run(
            app,
            host=config.host,
            port=config.port,
            limit_concurrency=config.worker_concurrency or None,
            log_level="info",
        )
    except KeyboardInterrupt:
        logger.info("interrupted; shutting down")
