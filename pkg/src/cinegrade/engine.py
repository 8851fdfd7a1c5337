"""The grading engine: sessions, automatic grading, reflection, exports.

Ties perception, retrieval, search, LUT compilation, and reflection into
the session state machine. The CLI and HTTP service are both thin
wrappers over this class, so they cannot drift apart.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .backends import HttpChatBackend, ScriptedFixture
from .cdl import CdlParams
from .colorspace import CAMERA_LOG, Colorimetry, Frame, get_curve, get_gamut
from .config import MODE_SCRIPTED, EngineConfig
from .errors import InputError, SearchError, SemanticStreamError, SessionStateError
from .frameio import (
    downscale,
    list_clip_frames,
    middle_frame,
    read_image,
    write_image,
)
from .knowledge import HashedBagEmbedder, HttpEmbedBackend, load_store, retrieve_topk
from .lut import apply_lut_trilinear, compile_lut, cube_text, export_cdl_xml
from .perception import analyze_scene, build_retrieval_query, degraded_scene_state
from .reasoning import beam_search, tree_to_dict
from .reflection import APPROVAL, ReflectionParseError, apply_update, parse_feedback
from .session import GradingSession, SessionStore


@dataclass
class ExportPaths:
    cube: Path
    cdl: Path
    report: Path

    def to_dict(self) -> dict:
        return {"cube": str(self.cube), "cdl": str(self.cdl), "report": str(self.report)}


class GradingEngine:
    def __init__(self, config: EngineConfig):
        self.config = config.validate()
        self.sessions = SessionStore(config.sessions_dir)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self.fixture: ScriptedFixture | None = None
        if config.mode == MODE_SCRIPTED:
            self.fixture = ScriptedFixture.load(config.fixture_path)
        if config.embed_endpoint:
            self.embedder = HttpEmbedBackend(
                endpoint=config.embed_endpoint, model="default", dim=1536
            )
        else:
            self.embedder = HashedBagEmbedder()
        self._store = None

    # -- plumbing ----------------------------------------------------------

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def backend(self, role: str):
        if self.fixture is not None:
            return self.fixture.backend(role)
        cfg = self.config
        if role in ("analyst", "critic"):
            endpoint = cfg.vlm_endpoint or cfg.llm_endpoint
            key = cfg.vlm_key or cfg.llm_key
            model = cfg.vlm_model
        else:
            endpoint, key, model = cfg.llm_endpoint, cfg.llm_key, cfg.llm_model
        return HttpChatBackend(endpoint=endpoint, api_key=key, model=model, role=role)

    @property
    def store(self):
        if self._store is None:
            self._store = load_store(self.config.store_path, self.embedder)
        return self._store

    def _load_anchor(self, session: GradingSession) -> Frame:
        pixels = read_image(session.anchor_path)
        return Frame(
            pixels, Colorimetry(CAMERA_LOG, curve=session.curve, gamut=session.gamut)
        )

    # -- session lifecycle -------------------------------------------------

    def create_session(
        self,
        source: str | Path,
        curve: str,
        gamut: str,
        directive: str | None = None,
    ) -> GradingSession:
        get_curve(curve)  # reject unknown names up front
        get_gamut(gamut)
        source = Path(source)
        if source.is_dir():
            anchor = middle_frame(source)
        elif source.is_file():
            anchor = source
        else:
            raise InputError(f"unreadable anchor source: {source}")
        read_image(anchor)  # fail fast on unreadable pixels
        session = GradingSession.create(
            anchor, curve, gamut, directive, self.config.max_iterations
        )
        self.sessions.save(session)
        return session

    def get_session(self, session_id: str) -> GradingSession:
        return self.sessions.load(session_id)

    def run_automatic_grade(self, session_id: str) -> GradingSession:
        with self._lock(session_id):
            session = self.sessions.load(session_id)
            session.require_active()
            if session.graded:
                raise SessionStateError(
                    f"session {session_id} already has a grade; use feedback to refine"
                )
            anchor = self._load_anchor(session)
            curve = get_curve(session.curve)
            gamut = get_gamut(session.gamut)

            try:
                scene = analyze_scene(
                    anchor, curve, gamut, self.backend("analyst"), session.anchor_path
                )
            except SemanticStreamError as exc:
                session.failures.append(str(exc))
                session.degraded = True
                scene = degraded_scene_state(anchor, curve, gamut, session.anchor_path)
            session.scene = scene

            heuristics = []
            if self.config.use_rag:
                query = build_retrieval_query(scene, session.directive)
                heuristics = retrieve_topk(
                    self.store, query, self.config.search.rag_k, self.embedder
                )
            try:
                best, nodes = beam_search(
                    anchor,
                    curve,
                    gamut,
                    scene,
                    heuristics,
                    session.directive,
                    self.backend("expander"),
                    self.backend("critic"),
                    self.config.search,
                    self.config.rolloff,
                )
            except SearchError as exc:
                session.mark_failed(str(exc))
                self.sessions.save(session)
                raise
            evaluated = [n for n in nodes if n.score is not None]
            best_node = min(evaluated, key=lambda n: (-n.score, n.id))
            audit = {
                "kind": "search",
                "tree": tree_to_dict(nodes, best_node.id),
                "retrieved": [
                    {"id": h.id, "score": s, "text": h.text} for h, s in heuristics
                ],
            }
            session.append_grade(best, audit)
            self._render_preview(session, session.iteration)
            self.sessions.save(session)
            return session

    def post_feedback(self, session_id: str, text: str) -> GradingSession:
        with self._lock(session_id):
            session = self.sessions.load(session_id)
            session.require_active()
            if not session.graded:
                raise SessionStateError(
                    f"session {session_id} has no grade yet; run the automatic grade first"
                )
            if session.scene is None:
                raise SessionStateError(f"session {session_id} is missing scene state")
            current = session.params_history[-1]
            try:
                update = parse_feedback(
                    text,
                    current,
                    session.scene,
                    self.backend("reflector"),
                    self.config.magnitude_caps,
                )
            except ReflectionParseError as exc:
                # Iteration aborted: history and counter unchanged.
                session.failures.append(str(exc))
                self.sessions.save(session)
                raise
            if update is APPROVAL:
                session.mark_approved()
                self.sessions.save(session)
                return session
            new_params = apply_update(current, update)
            audit = {"kind": "feedback", "feedback": text, "update": update.to_dict()}
            session.append_grade(new_params, audit)
            self._render_preview(session, session.iteration)
            self.sessions.save(session)
            return session

    # -- rendering and export ----------------------------------------------

    def _normalized_preview(self, session: GradingSession) -> Frame:
        from .colorspace import normalize_to_rec709

        anchor = self._load_anchor(session)
        normalized = normalize_to_rec709(
            anchor, get_curve(session.curve), get_gamut(session.gamut)
        )
        return Frame(
            downscale(normalized.pixels, self.config.search.preview_long_edge),
            normalized.colorimetry,
        )

    def _lut_for(self, session: GradingSession, iteration: int):
        params = self._params_at(session, iteration)
        title = f"session-{session.id}-iter{iteration}"
        return compile_lut(
            params,
            self.config.rolloff,
            self.config.search.lut_size,
            title=title,
            adaptive=self.config.search.adaptive_lift,
        )

    def _params_at(self, session: GradingSession, iteration: int) -> CdlParams:
        if not session.graded:
            raise SessionStateError(f"session {session.id} has no grade yet")
        if not (0 <= iteration <= session.iteration):
            raise InputError(
                f"iteration {iteration} out of range 0..{session.iteration}"
            )
        return session.params_history[iteration]

    def _render_preview(self, session: GradingSession, iteration: int) -> Path:
        base = self._normalized_preview(session)
        graded = apply_lut_trilinear(base, self._lut_for(session, iteration))
        path = self.sessions.session_dir(session.id) / f"preview_iter{iteration}.png"
        write_image(path, graded.pixels, bit_depth=8)
        return path

    def preview_path(self, session_id: str, iteration: int | None = None) -> Path:
        session = self.sessions.load(session_id)
        if iteration is None:
            iteration = session.iteration
        self._params_at(session, iteration)  # range check
        path = self.sessions.session_dir(session_id) / f"preview_iter{iteration}.png"
        if not path.exists():
            path = self._render_preview(session, iteration)
        return path

    def export_artifacts(
        self, session_id: str, iteration: int | None = None
    ) -> ExportPaths:
        session = self.sessions.load(session_id)
        if iteration is None:
            iteration = session.iteration
        params = self._params_at(session, iteration)
        out_dir = self.sessions.session_dir(session_id)
        lut = self._lut_for(session, iteration)
        cube_path = out_dir / f"grade_iter{iteration}.cube"
        cube_path.write_text(cube_text(lut), newline="")
        cdl_path = out_dir / f"grade_iter{iteration}.cdl"
        cdl_path.write_text(
            export_cdl_xml(params, correction_id=f"{session.id}-iter{iteration}")
        )
        report = {
            "generator": f"cinegrade {__version__}",
            "session": session.to_dict(),
            "iteration": iteration,
            "params": params.to_dict(),
            "tree_summary": self._tree_summary(session),
        }
        report_path = out_dir / f"report_iter{iteration}.json"
        report_path.write_text(json.dumps(report, indent=2, sort_keys=True))
        return ExportPaths(cube=cube_path, cdl=cdl_path, report=report_path)

    def _tree_summary(self, session: GradingSession) -> list[dict]:
        summary = []
        for audit in session.audits:
            if audit.get("kind") == "search":
                nodes = audit["tree"]["nodes"]
                summary.append(
                    {
                        "kind": "search",
                        "evaluated_nodes": sum(
                            1 for n in nodes if n["score"] is not None
                        ),
                        "best_id": audit["tree"]["best_id"],
                    }
                )
            else:
                summary.append(
                    {
                        "kind": "feedback",
                        "targeted": sorted(audit["update"]["targeted"]),
                        "magnitude": audit["update"]["magnitude_class"],
                    }
                )
        return summary

    def render_clip(
        self,
        session_id: str,
        iteration: int | None,
        clip_dir: str | Path,
        out_dir: str | Path,
        normalize: bool = True,
        workers: int = 4,
    ) -> tuple[int, list[str]]:
        """Apply the iteration's LUT to every frame of a clip directory.

        With normalize=True each frame is decoded and transformed to the
        LUT's Rec.709 input domain first; normalize=False treats frames as
        already normalized. Returns (rendered count, per-frame errors).
        """
        session = self.sessions.load(session_id)
        if iteration is None:
            iteration = session.iteration
        lut = self._lut_for(session, iteration)
        curve = get_curve(session.curve)
        gamut = get_gamut(session.gamut)
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        frames = list_clip_frames(clip_dir)
        errors: list[str] = []

        def render_one(path: Path) -> bool:
            try:
                pixels = read_image(path)
                frame = Frame(
                    pixels,
                    Colorimetry(CAMERA_LOG, curve=session.curve, gamut=session.gamut),
                )
                if normalize:
                    from .colorspace import normalize_to_rec709

                    frame = normalize_to_rec709(frame, curve, gamut)
                else:
                    frame = Frame(pixels, Colorimetry("rec709-display"))
                graded = apply_lut_trilinear(frame, lut)
                write_image(out_dir / (path.stem + ".png"), graded.pixels, bit_depth=16)
                return True
            except Exception as exc:
                errors.append(f"{path.name}: {exc}")
                return False

        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            results = list(pool.map(render_one, frames))
        return sum(results), errors

    def tree(self, session_id: str) -> dict:
        session = self.sessions.load(session_id)
        for audit in reversed(session.audits):
            if audit.get("kind") == "search":
                return audit["tree"]
        return {"nodes": [], "best_id": None}

    def state(self, session_id: str) -> dict:
        return self.sessions.load(session_id).to_dict()
