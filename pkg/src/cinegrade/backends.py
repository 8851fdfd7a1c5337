"""Model backends: the wire contract plus scripted and live implementations.

Every reasoning role (scene analyst, candidate expander, critic,
reflector) speaks the same interface: a text prompt, an optional image
attachment, a text reply. The scripted fixture replays canned replies
for hermetic runs and logs every request; the live backend speaks an
HTTP chat-completion wire format with the image inlined as base64.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import httpx

from .errors import BackendError, ConfigurationError, FixtureExhaustedError

ROLES = ("analyst", "expander", "critic", "reflector")


@dataclass(frozen=True)
class ImageAttachment:
    """A PNG payload plus the colorimetry tag of the pixels it encodes."""

    png_bytes: bytes
    colorimetry: str
    width: int
    height: int


@dataclass
class RequestRecord:
    role: str
    prompt: str
    image_colorimetry: str | None


class ChatBackend(Protocol):
    name: str

    def complete(self, prompt: str, image: ImageAttachment | None = None) -> str:
        ...


@dataclass
class ScriptedBackend:
    """Replays a fixed reply list for one role; exhaustion is an error."""

    role: str
    replies: list[str]
    request_log: list[RequestRecord]
    name: str = "scripted"
    cursor: int = 0

    def complete(self, prompt: str, image: ImageAttachment | None = None) -> str:
        self.request_log.append(
            RequestRecord(
                role=self.role,
                prompt=prompt,
                image_colorimetry=image.colorimetry if image else None,
            )
        )
        if self.cursor >= len(self.replies):
            raise FixtureExhaustedError(
                f"scripted fixture exhausted for role {self.role!r} "
                f"after {len(self.replies)} replies"
            )
        reply = self.replies[self.cursor]
        self.cursor += 1
        return reply


@dataclass
class ScriptedFixture:
    """Canned replies per role, shared request log; deterministic replay."""

    replies: dict[str, list[str]]
    request_log: list[RequestRecord] = field(default_factory=list)
    _backends: dict[str, ScriptedBackend] = field(default_factory=dict)

    @staticmethod
    def load(path: str | Path) -> "ScriptedFixture":
        data = json.loads(Path(path).read_text())
        replies = {}
        for role in ROLES:
            entries = data.get(role, [])
            # Replies may be raw strings or JSON objects to be re-serialized.
            replies[role] = [
                e if isinstance(e, str) else json.dumps(e) for e in entries
            ]
        return ScriptedFixture(replies=replies)

    def backend(self, role: str) -> ScriptedBackend:
        if role not in ROLES:
            raise ConfigurationError(f"unknown backend role {role!r}")
        if role not in self._backends:
            self._backends[role] = ScriptedBackend(
                role=role,
                replies=self.replies.get(role, []),
                request_log=self.request_log,
            )
        return self._backends[role]


@dataclass
class HttpChatBackend:
    """Chat-completion client for widely deployed model-serving APIs."""

    endpoint: str
    api_key: str
    model: str
    role: str
    name: str = "http-chat"
    timeout: float = 120.0

    def complete(self, prompt: str, image: ImageAttachment | None = None) -> str:
        content: list[dict] = [{"type": "text", "text": prompt}]
        if image is not None:
            b64 = base64.b64encode(image.png_bytes).decode("ascii")
            content.append(
                {
                    "type": "image_url",
                    "image_url": {"url": f"data:image/png;base64,{b64}"},
                }
            )
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": content}],
        }
        try:
            resp = httpx.post(
                self.endpoint.rstrip("/") + "/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            payload = resp.json()
            return payload["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise BackendError(f"{self.role} backend transport failure: {exc}") from exc


def extract_json(reply: str) -> dict | list:
    """Parse a JSON object out of a model reply, tolerating code fences."""
    text = reply.strip()
    if text.startswith("```"):
        lines = text.splitlines()
        lines = lines[1:]
        if lines and lines[-1].strip().startswith("```"):
            lines = lines[:-1]
        text = "\n".join(lines)
    start = min(
        (i for i in (text.find("{"), text.find("[")) if i >= 0), default=-1
    )
    if start < 0:
        raise ValueError("reply contains no JSON object")
    value, _ = json.JSONDecoder().raw_decode(text[start:])
    return value
