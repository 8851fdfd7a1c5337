"""Grading session state machine and its on-disk persistence.

One JSON document per session, written atomically (temp file + rename),
carrying the full parameter history and per-iteration audits so a
restart loses nothing. History is append-only and linear.
"""

from __future__ import annotations

import json
import os
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .cdl import CdlParams
from .errors import SessionNotFoundError, SessionStateError
from .perception import SceneState

STATUS_ACTIVE = "active"
STATUS_APPROVED = "approved"
STATUS_EXHAUSTED = "exhausted"
STATUS_FAILED = "failed"

_TERMINAL = {STATUS_APPROVED, STATUS_EXHAUSTED, STATUS_FAILED}

DEFAULT_MAX_ITERATIONS = 5


@dataclass
class GradingSession:
    id: str
    anchor_path: str
    curve: str
    gamut: str
    directive: str | None = None
    scene: SceneState | None = None
    params_history: list[CdlParams] = field(default_factory=list)
    audits: list[dict] = field(default_factory=list)
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    status: str = STATUS_ACTIVE
    degraded: bool = False
    failures: list[str] = field(default_factory=list)
    created_at: float = field(default_factory=time.time)

    @staticmethod
    def create(anchor_path, curve, gamut, directive=None, max_iterations=DEFAULT_MAX_ITERATIONS):
        return GradingSession(
            id=uuid.uuid4().hex[:12],
            anchor_path=str(anchor_path),
            curve=curve,
            gamut=gamut,
            directive=directive,
            max_iterations=max_iterations,
        )

    @property
    def iteration(self) -> int:
        return len(self.params_history) - 1

    @property
    def graded(self) -> bool:
        return bool(self.params_history)

    def require_active(self) -> None:
        if self.status != STATUS_ACTIVE:
            raise SessionStateError(
                f"session {self.id} is {self.status}, not active"
            )

    def append_grade(self, params: CdlParams, audit: dict) -> None:
        self.params_history.append(params)
        self.audits.append(audit)
        if self.iteration >= self.max_iterations:
            self.status = STATUS_EXHAUSTED

    def mark_approved(self) -> None:
        self.require_active()
        self.status = STATUS_APPROVED

    def mark_failed(self, reason: str) -> None:
        self.failures.append(reason)
        self.status = STATUS_FAILED

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "anchor_path": self.anchor_path,
            "curve": self.curve,
            "gamut": self.gamut,
            "directive": self.directive,
            "scene": self.scene.to_dict() if self.scene else None,
            "params_history": [p.to_dict() for p in self.params_history],
            "audits": self.audits,
            "iteration": self.iteration,
            "max_iterations": self.max_iterations,
            "status": self.status,
            "degraded": self.degraded,
            "failures": self.failures,
            "created_at": self.created_at,
        }

    @staticmethod
    def from_dict(d: dict) -> "GradingSession":
        return GradingSession(
            id=d["id"],
            anchor_path=d["anchor_path"],
            curve=d["curve"],
            gamut=d["gamut"],
            directive=d.get("directive"),
            scene=SceneState.from_dict(d["scene"]) if d.get("scene") else None,
            params_history=[CdlParams.from_dict(p) for p in d["params_history"]],
            audits=d.get("audits", []),
            max_iterations=d.get("max_iterations", DEFAULT_MAX_ITERATIONS),
            status=d.get("status", STATUS_ACTIVE),
            degraded=d.get("degraded", False),
            failures=d.get("failures", []),
            created_at=d.get("created_at", 0.0),
        )


class SessionStore:
    """Atomic JSON persistence under a sessions directory."""

    def __init__(self, sessions_dir: str | Path):
        self.dir = Path(sessions_dir)
        self.dir.mkdir(parents=True, exist_ok=True)

    def session_dir(self, session_id: str) -> Path:
        d = self.dir / session_id
        d.mkdir(parents=True, exist_ok=True)
        return d

    def path(self, session_id: str) -> Path:
        return self.session_dir(session_id) / "session.json"

    def save(self, session: GradingSession) -> None:
        target = self.path(session.id)
        tmp = target.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(session.to_dict(), indent=2, sort_keys=True))
        os.replace(tmp, target)

    def load(self, session_id: str) -> GradingSession:
        target = self.dir / session_id / "session.json"
        if not target.exists():
            raise SessionNotFoundError(f"no such session: {session_id}")
        return GradingSession.from_dict(json.loads(target.read_text()))

    def list_ids(self) -> list[str]:
        return sorted(
            p.parent.name for p in self.dir.glob("*/session.json")
        )
