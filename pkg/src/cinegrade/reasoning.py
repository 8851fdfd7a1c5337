"""The Look Developer agent: beam search over the CDL parameter space.

Candidate grades are proposed by a language model, rendered through a
proxy LUT onto a downscaled anchor preview, and scored 1-5 by a vision
critic that sees the actual render (never parameters alone). Pruning is
rank-based: after each depth, only the top-scoring nodes survive. The
final answer is the global argmax over every evaluated node, at any
depth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .backends import ChatBackend, ImageAttachment
from .cdl import CdlParams, RolloffConfig, validate_params
from .colorspace import Chromaticity, Frame, LogCurve, normalize_to_rec709
from .errors import BackendError, ExpansionError, SearchError
from .frameio import downscale, encode_png_bytes
from .framestats import protected_tone_shift
from .knowledge import Heuristic
from .lut import apply_lut_trilinear, compile_lut
from .perception import SceneState, load_asset

MAX_BACKEND_ATTEMPTS = 3
FAILED_CRITIC_SCORE = 1.0


@dataclass
class ToTNode:
    id: int
    depth: int
    params: CdlParams
    rationale: str
    score: float | None = None
    critique: str = ""
    parent_id: int | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "depth": self.depth,
            "params": self.params.to_dict(),
            "rationale": self.rationale,
            "score": self.score,
            "critique": self.critique,
            "parent_id": self.parent_id,
        }


@dataclass(frozen=True)
class SearchConfig:
    branching: int = 3
    max_depth: int = 2
    beam_width: int = 2
    rag_k: int = 3
    preview_long_edge: int = 768
    lut_size: int = 33
    adaptive_lift: bool = True
    use_protected_tones: bool = True

    def __post_init__(self):
        for name in ("branching", "max_depth", "beam_width", "rag_k", "preview_long_edge"):
            if getattr(self, name) < 1:
                raise ValueError(f"SearchConfig.{name} must be >= 1")


def format_heuristics(heuristics: list[tuple[Heuristic, float]]) -> str:
    if not heuristics:
        return "(none retrieved)"
    lines = []
    for h, score in heuristics:
        hint = ""
        if h.action_hint:
            hint = "; action hint: " + ", ".join(
                f"{p}:{d:+g}" for p, d in h.action_hint.items()
            )
        lines.append(f"- [{h.id}] {h.text}{hint} (similarity {score:.2f})")
    return "\n".join(lines)


def _parse_candidates(payload, parent: CdlParams, branching: int):
    """Validate an expander reply into exactly b (params, rationale) pairs."""
    if not isinstance(payload, dict) or not isinstance(payload.get("candidates"), list):
        return None, "reply must be a JSON object with a 'candidates' list"
    raw = payload["candidates"]
    if len(raw) != branching:
        return None, f"expected exactly {branching} candidates, got {len(raw)}"
    out = []
    for index, cand in enumerate(raw):
        if not isinstance(cand, dict):
            return None, f"candidate {index} must be an object"
        rationale = cand.get("rationale")
        if not rationale or not isinstance(rationale, str):
            return None, f"candidate {index} is missing a 'rationale' string"
        try:
            if "delta" in cand:
                deltas = {
                    path: parent.get_path(path) + float(d)
                    for path, d in cand["delta"].items()
                }
                params = parent.with_path_values(deltas)
            else:
                params = CdlParams.from_dict(cand["params"])
        except (KeyError, TypeError, ValueError) as exc:
            return None, f"candidate {index} has malformed parameters: {exc}"
        violations = validate_params(params)
        if violations:
            detail = "; ".join(str(v) for v in violations)
            return None, f"candidate {index} is out of range: {detail}"
        out.append((params, rationale))
    return out, ""


def expand_node(
    node: ToTNode,
    scene: SceneState,
    heuristics: list[tuple[Heuristic, float]],
    directive: str | None,
    expander: ChatBackend,
    cfg: SearchConfig,
    next_id,
) -> list[ToTNode]:
    """Ask the expander for b children; out-of-range replies are re-prompted."""
    from .backends import extract_json

    directive_line = (
        f"Creative directive from the user: {directive}" if directive else ""
    )
    prompt = load_asset("expander.txt").format(
        scene=scene.to_doc(),
        heuristics=format_heuristics(heuristics),
        parent_rationale=node.rationale or "(root: automatic base grade)",
        parent_params=json.dumps(node.params.to_dict()),
        directive_line=directive_line,
        branching=cfg.branching,
    )
    complaint = ""
    last_problem = ""
    for _ in range(MAX_BACKEND_ATTEMPTS):
        reply = expander.complete(prompt + complaint)
        try:
            payload = extract_json(reply)
        except ValueError as exc:
            last_problem = str(exc)
            complaint = f"\n\nYour previous reply was invalid: {exc}. Reply with only the JSON object."
            continue
        candidates, problem = _parse_candidates(payload, node.params, cfg.branching)
        if candidates is not None:
            return [
                ToTNode(
                    id=next_id(),
                    depth=node.depth + 1,
                    params=params,
                    rationale=rationale,
                    parent_id=node.id,
                )
                for params, rationale in candidates
            ]
        last_problem = problem
        complaint = f"\n\nYour previous reply was invalid: {problem}. Reply with only the JSON object."
    raise ExpansionError(
        f"expander produced {MAX_BACKEND_ATTEMPTS} invalid replies for node "
        f"{node.id}: {last_problem}"
    )


@dataclass
class PreviewRenderer:
    """Shared per-search render state: the normalized anchor preview."""

    base_preview: Frame
    rolloff: RolloffConfig
    cfg: SearchConfig
    _cache: dict[str, Frame] = field(default_factory=dict)

    @staticmethod
    def for_anchor(
        anchor: Frame,
        curve: LogCurve,
        gamut: Chromaticity,
        rolloff: RolloffConfig,
        cfg: SearchConfig,
    ) -> "PreviewRenderer":
        normalized = normalize_to_rec709(anchor, curve, gamut)
        preview = Frame(
            downscale(normalized.pixels, cfg.preview_long_edge), normalized.colorimetry
        )
        return PreviewRenderer(base_preview=preview, rolloff=rolloff, cfg=cfg)

    def render(self, params: CdlParams) -> Frame:
        key = params.canonical_json()
        if key not in self._cache:
            lut = compile_lut(
                params,
                self.rolloff,
                self.cfg.lut_size,
                adaptive=self.cfg.adaptive_lift,
            )
            self._cache[key] = apply_lut_trilinear(self.base_preview, lut)
        return self._cache[key]


def _parse_critic(payload):
    if not isinstance(payload, dict):
        return None, "reply must be a JSON object"
    score = payload.get("score")
    if not isinstance(score, (int, float)) or not (1.0 <= float(score) <= 5.0):
        return None, "'score' must be a number between 1 and 5"
    return (float(score), str(payload.get("critique", ""))), ""


def evaluate_candidate(
    node: ToTNode,
    renderer: PreviewRenderer,
    scene: SceneState,
    directive: str | None,
    critic: ChatBackend,
) -> ToTNode:
    """Render the candidate through its proxy LUT and have the critic score it.

    After three invalid critic replies the node is scored pessimistically
    (1.0) so the search survives without fabricating quality.
    """
    from .backends import extract_json

    graded = renderer.render(node.params)
    if renderer.cfg.use_protected_tones:
        report = protected_tone_shift(
            renderer.base_preview, graded, list(scene.semantic.protected_tones)
        )
        report_doc = json.dumps(report.to_dict(), indent=2)
    else:
        report_doc = "(protected tone auditing disabled)"
    directive_line = (
        f"Creative directive from the user: {directive}" if directive else ""
    )
    prompt = load_asset("critic.txt").format(
        scene=scene.to_doc(), tone_report=report_doc, directive_line=directive_line
    )
    image = ImageAttachment(
        png_bytes=encode_png_bytes(graded.pixels),
        colorimetry=graded.colorimetry.kind,
        width=graded.width,
        height=graded.height,
    )
    complaint = ""
    for _ in range(MAX_BACKEND_ATTEMPTS):
        try:
            reply = critic.complete(prompt + complaint, image=image)
        except BackendError:
            break  # transport/fixture failure; retrying cannot help
        try:
            payload = extract_json(reply)
        except ValueError as exc:
            complaint = f"\n\nYour previous reply was invalid: {exc}. Reply with only the JSON object."
            continue
        parsed, problem = _parse_critic(payload)
        if parsed is not None:
            node.score, node.critique = parsed
            return node
        complaint = f"\n\nYour previous reply was invalid: {problem}. Reply with only the JSON object."
    node.score = FAILED_CRITIC_SCORE
    node.critique = "critic failed to produce a valid score; pessimistic default"
    return node


def seed_root_params(heuristics: list[tuple[Heuristic, float]]) -> CdlParams:
    """Identity root, unless a retrieved heuristic is marked as a seed."""
    params = CdlParams.identity()
    for h, _ in heuristics:
        if h.seed and h.action_hint:
            seeded = params.with_path_values(
                {p: params.get_path(p) + d for p, d in h.action_hint.items()}
            )
            if not validate_params(seeded):
                return seeded
    return params


def beam_search(
    anchor: Frame,
    curve: LogCurve,
    gamut: Chromaticity,
    scene: SceneState,
    heuristics: list[tuple[Heuristic, float]],
    directive: str | None,
    expander: ChatBackend,
    critic: ChatBackend,
    cfg: SearchConfig,
    rolloff: RolloffConfig,
) -> tuple[CdlParams, list[ToTNode]]:
    """Depth-limited beam search; returns (best params, full audit tree)."""
    counter = iter(range(1_000_000))

    def next_id() -> int:
        return next(counter)

    root = ToTNode(
        id=next_id(),
        depth=0,
        params=seed_root_params(heuristics),
        rationale="automatic base grade root",
    )
    renderer = PreviewRenderer.for_anchor(anchor, curve, gamut, rolloff, cfg)
    nodes = [root]
    beam = [root]
    evaluated: list[ToTNode] = []
    expansion_errors: list[str] = []

    for depth in range(1, cfg.max_depth + 1):
        children: list[ToTNode] = []
        for parent in beam:
            try:
                children.extend(
                    expand_node(parent, scene, heuristics, directive, expander, cfg, next_id)
                )
            except ExpansionError as exc:
                expansion_errors.append(str(exc))
        if not children:
            if depth == 1:
                raise SearchError(
                    "all expansions failed at depth 1: " + "; ".join(expansion_errors)
                )
            break
        for child in children:
            evaluate_candidate(child, renderer, scene, directive, critic)
        nodes.extend(children)
        evaluated.extend(children)
        # Strict depth barrier: prune only after all siblings are scored.
        children.sort(key=lambda n: (-n.score, n.id))
        beam = children[: cfg.beam_width]

    best = min(evaluated, key=lambda n: (-n.score, n.id))
    return best.params, nodes


def tree_to_dict(nodes: list[ToTNode], best_id: int | None = None) -> dict:
    return {"nodes": [n.to_dict() for n in nodes], "best_id": best_id}
