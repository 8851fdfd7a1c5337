"""Scene reading: the physical and semantic streams behind every prompt.

The physical stream is deterministic (log decode, CST to Rec.709, IRE
percentiles). The semantic stream asks a vision model to describe
lighting, narrative, subjects, and protected-tone hue ranges over the
NORMALIZED frame; log-encoded pixels are never transmitted, because flat
log imagery is exactly what vision models misread.
"""

from __future__ import annotations

import hashlib
import importlib.resources
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .backends import ChatBackend, ImageAttachment, extract_json
from .colorspace import Chromaticity, Frame, LogCurve, normalize_to_rec709
from .errors import InputError, SemanticStreamError
from .framestats import ExposureProfile, HueRange, exposure_profile
from .frameio import encode_png_bytes

MAX_ANALYST_ATTEMPTS = 3
DEGRADED_QUERY = "balanced cinematic grade"

_ASSETS = importlib.resources.files("cinegrade") / "assets"


def load_asset(name: str) -> str:
    return (_ASSETS / name).read_text()


@dataclass(frozen=True)
class SemanticAnalysis:
    lighting_mood: str
    genre: str
    emotion: str
    subjects: tuple[str, ...]
    protected_tones: tuple[HueRange, ...]

    def to_dict(self) -> dict:
        return {
            "lighting_mood": self.lighting_mood,
            "narrative": {"genre": self.genre, "emotion": self.emotion},
            "subjects": list(self.subjects),
            "protected_tones": {
                r.name: [r.low_deg, r.high_deg] for r in self.protected_tones
            },
        }

    @staticmethod
    def from_dict(d: dict) -> "SemanticAnalysis":
        narrative = d.get("narrative", {})
        return SemanticAnalysis(
            lighting_mood=d["lighting_mood"],
            genre=narrative.get("genre", ""),
            emotion=narrative.get("emotion", ""),
            subjects=tuple(d.get("subjects", ())),
            protected_tones=tuple(
                HueRange(name, float(rng[0]), float(rng[1]))
                for name, rng in d.get("protected_tones", {}).items()
            ),
        )


DEGRADED_SEMANTIC = SemanticAnalysis(
    lighting_mood="unknown",
    genre="",
    emotion="",
    subjects=(),
    protected_tones=(HueRange("skin", 15.0, 45.0),),
)


@dataclass(frozen=True)
class SceneState:
    """Decoupled perception output; serializes losslessly to JSON."""

    exposure: ExposureProfile
    semantic: SemanticAnalysis
    anchor_path: str
    anchor_hash: str
    degraded: bool = False
    semantic_retry_count: int = 0

    def to_dict(self) -> dict:
        return {
            "exposure": self.exposure.to_dict(),
            "semantic": self.semantic.to_dict(),
            "anchor_frame_ref": {"path": self.anchor_path, "sha256": self.anchor_hash},
            "degraded": self.degraded,
            "semantic_retry_count": self.semantic_retry_count,
        }

    def to_doc(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @staticmethod
    def from_dict(d: dict) -> "SceneState":
        ref = d["anchor_frame_ref"]
        return SceneState(
            exposure=ExposureProfile.from_dict(d["exposure"]),
            semantic=SemanticAnalysis.from_dict(d["semantic"]),
            anchor_path=ref["path"],
            anchor_hash=ref["sha256"],
            degraded=bool(d.get("degraded", False)),
            semantic_retry_count=int(d.get("semantic_retry_count", 0)),
        )


def _validate_analysis(payload) -> tuple[SemanticAnalysis | None, str]:
    """Schema check of the analyst reply; returns (analysis, complaint)."""
    if not isinstance(payload, dict):
        return None, "reply must be a JSON object"
    mood = payload.get("lighting_mood")
    if not mood or not isinstance(mood, str):
        return None, "missing non-empty string field 'lighting_mood'"
    narrative = payload.get("narrative")
    if not isinstance(narrative, dict):
        return None, "missing object field 'narrative' with 'genre' and 'emotion'"
    subjects = payload.get("subjects", [])
    if not isinstance(subjects, list) or not all(isinstance(s, str) for s in subjects):
        return None, "'subjects' must be a list of strings"
    tones = payload.get("protected_tones", {})
    if not isinstance(tones, dict):
        return None, "'protected_tones' must be an object of name -> [low, high]"
    ranges = []
    for name, rng in tones.items():
        if (
            not isinstance(rng, (list, tuple))
            or len(rng) != 2
            or not all(isinstance(v, (int, float)) for v in rng)
        ):
            return None, f"protected tone {name!r} must be a [low_deg, high_deg] pair"
        try:
            ranges.append(HueRange(str(name), float(rng[0]), float(rng[1])))
        except InputError as exc:
            return None, f"protected tone {name!r}: {exc}"
    return (
        SemanticAnalysis(
            lighting_mood=mood,
            genre=str(narrative.get("genre", "")),
            emotion=str(narrative.get("emotion", "")),
            subjects=tuple(subjects),
            protected_tones=tuple(ranges),
        ),
        "",
    )


def analyze_scene(
    anchor: Frame,
    curve: LogCurve,
    gamut: Chromaticity,
    vlm: ChatBackend,
    anchor_path: str = "",
) -> SceneState:
    """Run both perception streams over the anchor frame.

    The semantic stream retries up to 2 times with the validator's
    complaint appended; three invalid replies raise SemanticStreamError
    (callers may degrade to physical-only grading).
    """
    normalized = normalize_to_rec709(anchor, curve, gamut)
    exposure = exposure_profile(normalized)
    anchor_hash = hashlib.sha256(anchor.pixels.tobytes()).hexdigest()

    image = ImageAttachment(
        png_bytes=encode_png_bytes(normalized.pixels),
        colorimetry=normalized.colorimetry.kind,
        width=normalized.width,
        height=normalized.height,
    )
    prompt = load_asset("scene_analyst.txt")
    complaint = ""
    for attempt in range(MAX_ANALYST_ATTEMPTS):
        reply = vlm.complete(prompt + complaint, image=image)
        try:
            payload = extract_json(reply)
        except ValueError as exc:
            complaint = f"\n\nYour previous reply was invalid: {exc}. Reply with only the JSON object."
            continue
        analysis, problem = _validate_analysis(payload)
        if analysis is not None:
            return SceneState(
                exposure=exposure,
                semantic=analysis,
                anchor_path=anchor_path,
                anchor_hash=anchor_hash,
                semantic_retry_count=attempt,
            )
        complaint = f"\n\nYour previous reply was invalid: {problem}. Reply with only the JSON object."
    raise SemanticStreamError(
        f"scene analyst produced {MAX_ANALYST_ATTEMPTS} consecutive invalid replies"
    )


def degraded_scene_state(
    anchor: Frame, curve: LogCurve, gamut: Chromaticity, anchor_path: str = ""
) -> SceneState:
    """Physical-only fallback state when the semantic stream hard-fails."""
    normalized = normalize_to_rec709(anchor, curve, gamut)
    return SceneState(
        exposure=exposure_profile(normalized),
        semantic=DEGRADED_SEMANTIC,
        anchor_path=anchor_path,
        anchor_hash=hashlib.sha256(anchor.pixels.tobytes()).hexdigest(),
        degraded=True,
        semantic_retry_count=MAX_ANALYST_ATTEMPTS,
    )


def load_retrieval_rules(path: str | Path | None = None) -> list[dict]:
    text = Path(path).read_text() if path else load_asset("retrieval_rules.yaml")
    rules = yaml.safe_load(text)
    if not isinstance(rules, list):
        raise InputError("retrieval rule table must be a list")
    return rules


def build_retrieval_query(
    state: SceneState,
    directive: str | None = None,
    rules: list[dict] | None = None,
) -> str:
    """The RAG query: a directive verbatim, else the rule table, else a template."""
    if directive:
        return directive
    if state.degraded:
        return DEGRADED_QUERY
    if rules is None:
        rules = load_retrieval_rules()
    mood = state.semantic.lighting_mood
    genre = state.semantic.genre
    exact = [r for r in rules if r["mood"] == mood and r["genre"] == genre]
    if exact:
        return exact[0]["query"]
    wildcard = [r for r in rules if r["mood"] == mood and r["genre"] == "*"]
    if wildcard:
        return wildcard[0]["query"]
    subjects = " ".join(state.semantic.subjects[:3])
    query = f"cinematic grade for a {mood} scene"
    if subjects:
        query += f" featuring {subjects}"
    return query
