"""HTTP session service over the grading engine.

Stateless between requests except the persisted session documents. All
errors come back as machine-readable bodies: {"error": {"code", "message"}}.
"""

from __future__ import annotations

from pathlib import Path

import cv2
from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse, Response
from pydantic import BaseModel

from .engine import GradingEngine
from .errors import (
    BackendError,
    CinegradeError,
    InputError,
    SessionNotFoundError,
    SessionStateError,
)


class CreateSessionBody(BaseModel):
    source: str
    curve: str
    gamut: str
    directive: str | None = None


class FeedbackBody(BaseModel):
    text: str


def _status_for(exc: CinegradeError) -> int:
    if isinstance(exc, SessionNotFoundError):
        return 404
    if isinstance(exc, SessionStateError):
        return 409
    if isinstance(exc, InputError):
        return 400
    if isinstance(exc, BackendError):
        return 502
    return 500


def create_app(engine: GradingEngine) -> FastAPI:
    app = FastAPI(title="cinegrade", version="0.1.0")

    @app.exception_handler(CinegradeError)
    async def handle_engine_error(request: Request, exc: CinegradeError):
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        session = engine.create_session(
            body.source, body.curve, body.gamut, body.directive
        )
        return session.to_dict()

    @app.post("/sessions/{session_id}/grade")
    def grade(session_id: str):
        return engine.run_automatic_grade(session_id).to_dict()

    @app.post("/sessions/{session_id}/feedback")
    def feedback(session_id: str, body: FeedbackBody):
        if not body.text.strip():
            raise InputError("feedback text must be non-empty")
        return engine.post_feedback(session_id, body.text).to_dict()

    @app.get("/sessions/{session_id}/state")
    def state(session_id: str):
        return engine.state(session_id)

    @app.get("/sessions/{session_id}/tree")
    def tree(session_id: str):
        return engine.tree(session_id)

    @app.get("/sessions/{session_id}/preview")
    def preview(session_id: str, iteration: int | None = None, size: int | None = None):
        path = engine.preview_path(session_id, iteration)
        if size:
            # Reduced-size thumbnails keep the UI loop snappy.
            img = cv2.imread(str(path), cv2.IMREAD_COLOR)
            h, w = img.shape[:2]
            scale = size / max(h, w)
            if scale < 1.0:
                img = cv2.resize(
                    img,
                    (max(1, round(w * scale)), max(1, round(h * scale))),
                    interpolation=cv2.INTER_AREA,
                )
            ok, buf = cv2.imencode(".png", img)
            return Response(content=buf.tobytes(), media_type="image/png")
        return FileResponse(path, media_type="image/png")

    @app.get("/sessions/{session_id}/export/cube")
    def export_cube(session_id: str, iteration: int | None = None):
        paths = engine.export_artifacts(session_id, iteration)
        return PlainTextResponse(
            Path(paths.cube).read_text(),
            headers={
                "Content-Disposition": f'attachment; filename="{Path(paths.cube).name}"'
            },
        )

    @app.get("/sessions/{session_id}/export/cdl")
    def export_cdl(session_id: str, iteration: int | None = None):
        paths = engine.export_artifacts(session_id, iteration)
        return PlainTextResponse(
            Path(paths.cdl).read_text(),
            media_type="application/xml",
            headers={
                "Content-Disposition": f'attachment; filename="{Path(paths.cdl).name}"'
            },
        )

    @app.get("/sessions/{session_id}/export/report")
    def export_report(session_id: str, iteration: int | None = None):
        paths = engine.export_artifacts(session_id, iteration)
        return Response(
            Path(paths.report).read_bytes(), media_type="application/json"
        )

    return app
