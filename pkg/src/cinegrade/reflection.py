"""Natural-language refinement with structural parameter locking.

A directive like "make the shadows slightly cooler" is parsed by a
language model into a small set of targeted field updates; every
unmentioned field is locked and carried over bit-identically. Step sizes
come from the model's own reading of the intensity wording, bounded by
per-magnitude caps so a "slight" request can never move a field far.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .backends import ChatBackend, extract_json
from .cdl import FIELD_PATHS, CdlParams, validate_params
from .errors import BackendError, ReflectionParseError
from .perception import SceneState, load_asset

MAX_REFLECTOR_ATTEMPTS = 3

DEFAULT_MAGNITUDE_CAPS = {"slight": 0.02, "moderate": 0.05, "heavy": 0.10}


@dataclass(frozen=True)
class FeedbackUpdate:
    """A validated, locked parameter transition."""

    targeted: dict[str, float]  # field path -> new absolute value
    locked: frozenset[str]
    magnitude_class: str
    rationale: str

    def to_dict(self) -> dict:
        return {
            "targeted": dict(self.targeted),
            "locked": sorted(self.locked),
            "magnitude_class": self.magnitude_class,
            "rationale": self.rationale,
        }


APPROVAL = object()  # sentinel returned by parse_feedback on terminal approval


def _validate_update(payload, current: CdlParams, caps: dict[str, float]):
    """Returns (FeedbackUpdate | APPROVAL, complaint)."""
    if not isinstance(payload, dict):
        return None, "reply must be a JSON object"
    action = payload.get("action")
    if action == "approve":
        return APPROVAL, ""
    if action != "update":
        return None, "'action' must be 'approve' or 'update'"
    magnitude = payload.get("magnitude")
    if magnitude not in caps:
        return None, f"'magnitude' must be one of {sorted(caps)}"
    targeted_raw = payload.get("targeted")
    if not isinstance(targeted_raw, dict) or not targeted_raw:
        return None, "'targeted' must be a non-empty object of field path -> new value"
    targeted: dict[str, float] = {}
    cap = caps[magnitude]
    for path, value in targeted_raw.items():
        if path not in FIELD_PATHS:
            return None, f"unknown field path {path!r}"
        if not isinstance(value, (int, float)):
            return None, f"value for {path!r} must be a number"
        delta = abs(float(value) - current.get_path(path))
        if delta > cap + 1e-12:
            return None, (
                f"{path!r} moves by {delta:.4f}, above the {magnitude} cap {cap}"
            )
        targeted[path] = float(value)
    candidate = current.with_path_values(targeted)
    violations = validate_params(candidate)
    if violations:
        detail = "; ".join(str(v) for v in violations)
        return None, f"targeted values leave parameters out of range: {detail}"
    return (
        FeedbackUpdate(
            targeted=targeted,
            locked=frozenset(p for p in FIELD_PATHS if p not in targeted),
            magnitude_class=magnitude,
            rationale=str(payload.get("rationale", "")),
        ),
        "",
    )


def parse_feedback(
    text: str,
    current: CdlParams,
    scene: SceneState,
    llm: ChatBackend,
    caps: dict[str, float] | None = None,
):
    """Parse director feedback into a FeedbackUpdate, or APPROVAL.

    Invalid replies are re-prompted with the validator's complaint, up to
    two retries; a third failure raises ReflectionParseError and leaves
    the session's parameters untouched.
    """
    caps = caps or DEFAULT_MAGNITUDE_CAPS
    prompt = load_asset("reflector.txt").format(
        params=json.dumps(current.to_dict(), indent=2),
        scene=scene.to_doc(),
        feedback=text,
        cap_slight=caps["slight"],
        cap_moderate=caps["moderate"],
        cap_heavy=caps["heavy"],
    )
    complaint = ""
    last_problem = ""
    for _ in range(MAX_REFLECTOR_ATTEMPTS):
        try:
            reply = llm.complete(prompt + complaint)
        except BackendError as exc:
            raise ReflectionParseError(f"reflection backend failure: {exc}") from exc
        try:
            payload = extract_json(reply)
        except ValueError as exc:
            last_problem = str(exc)
            complaint = f"\n\nYour previous reply was invalid: {exc}. Reply with only the JSON object."
            continue
        update, problem = _validate_update(payload, current, caps)
        if update is not None:
            return update
        last_problem = problem
        complaint = f"\n\nYour previous reply was invalid: {problem}. Reply with only the JSON object."
    raise ReflectionParseError(
        f"reflector produced {MAX_REFLECTOR_ATTEMPTS} invalid replies: {last_problem}"
    )


def apply_update(current: CdlParams, update: FeedbackUpdate) -> CdlParams:
    """Targeted fields take their new values; locked fields stay bit-identical."""
    overlap = set(update.targeted) & update.locked
    if overlap:
        raise AssertionError(
            f"update touches locked fields {sorted(overlap)}; this is a programming error"
        )
    result = current.with_path_values(update.targeted)
    for path in update.locked:
        if result.get_path(path) != current.get_path(path):
            raise AssertionError(f"locked field {path!r} changed during apply_update")
    return result
