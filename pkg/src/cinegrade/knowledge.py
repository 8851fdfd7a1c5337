"""Heuristic knowledge store with cosine-similarity retrieval.

Professional grading heuristics live in a YAML file; each entry carries
rule text, optional parameter-delta hints, and tags. Retrieval is an
exhaustive cosine scan over unit-norm embeddings: stores are small, so
exactness beats index machinery. The offline embedder is a deterministic
hashed bag-of-tokens so every search-path test runs hermetically.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np
import yaml

from .cdl import FIELD_PATHS
from .errors import (
    BackendError,
    DegenerateTextError,
    EmptyStoreError,
    StaleEmbeddingError,
    StoreLoadError,
)

DEFAULT_EMBED_DIM = 256


class EmbedBackend(Protocol):
    name: str
    dim: int

    def embed(self, text: str) -> np.ndarray:
        ...


@dataclass(frozen=True)
class HashedBagEmbedder:
    """Deterministic offline embedder: lowercased tokens hashed into buckets.

    Order-invariant by construction; semantic quality is irrelevant to the
    retrieval contracts it supports.
    """

    dim: int = DEFAULT_EMBED_DIM
    name: str = f"hashed-bag-v1-{DEFAULT_EMBED_DIM}"

    def embed(self, text: str) -> np.ndarray:
        tokens = re.findall(r"[a-z0-9]+", text.lower())
        if not tokens:
            raise DegenerateTextError(f"no tokens to embed in {text!r}")
        vec = np.zeros(self.dim)
        for tok in tokens:
            bucket = int.from_bytes(
                hashlib.sha1(tok.encode()).digest()[:8], "big"
            ) % self.dim
            vec[bucket] += 1.0
        return vec / np.linalg.norm(vec)


@dataclass
class HttpEmbedBackend:
    """Remote embedding endpoint; response treated as opaque then normalized."""

    endpoint: str
    model: str
    dim: int
    name: str = "http-embed"

    def embed(self, text: str) -> np.ndarray:
        import httpx

        try:
            resp = httpx.post(
                self.endpoint.rstrip("/") + "/embeddings",
                json={"model": self.model, "input": text},
                timeout=60.0,
            )
            resp.raise_for_status()
            vec = np.asarray(resp.json()["data"][0]["embedding"], dtype=np.float64)
        except Exception as exc:
            raise BackendError(f"embedding backend failure: {exc}") from exc
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise DegenerateTextError("embedding backend returned a zero vector")
        return vec / norm


def embed_text(text: str, backend: EmbedBackend) -> np.ndarray:
    """Backend vector, L2-normalized to unit length."""
    if not text:
        raise DegenerateTextError("cannot embed empty text")
    vec = np.asarray(backend.embed(text), dtype=np.float64)
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise DegenerateTextError(f"zero embedding for {text!r}")
    return vec / norm


@dataclass
class Heuristic:
    id: str
    text: str
    action_hint: dict[str, float] | None = None
    tags: tuple[str, ...] = ()
    seed: bool = False
    embedding: np.ndarray | None = None


@dataclass
class HeuristicStore:
    entries: list[Heuristic]
    embed_dim: int
    embedder_id: str

    def matrix(self) -> np.ndarray:
        return np.stack([h.embedding for h in self.entries])


def parse_action_hint(hint: str, entry_label: str) -> dict[str, float]:
    """Parse "lift.b:+0.02, gain.r:+0.05" into a field-path delta map."""
    deltas: dict[str, float] = {}
    for part in hint.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise StoreLoadError(f"{entry_label}: malformed action_hint part {part!r}")
        path, _, value = part.partition(":")
        path = path.strip()
        if path not in FIELD_PATHS:
            raise StoreLoadError(f"{entry_label}: unknown field path {path!r}")
        try:
            deltas[path] = float(value.strip())
        except ValueError:
            raise StoreLoadError(f"{entry_label}: non-numeric delta {value!r}")
    return deltas


def load_store(path: str | Path, backend: EmbedBackend | None = None) -> HeuristicStore:
    """Load the heuristic file; compute any missing embeddings on the fly.

    A sidecar `<store>.embeddings.npz` may hold precomputed vectors keyed by
    embedder id; vectors from a different embedder are rejected as stale.
    """
    backend = backend or HashedBagEmbedder()
    path = Path(path)
    if not path.exists():
        raise StoreLoadError(f"heuristic store not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise StoreLoadError(f"unparseable heuristic store {path}: {exc}")
    if not isinstance(raw, list):
        raise StoreLoadError(f"{path}: expected a top-level list of entries")

    sidecar = path.with_suffix(path.suffix + ".embeddings.npz")
    precomputed: dict[str, np.ndarray] = {}
    if sidecar.exists():
        archive = np.load(sidecar)
        stored_id = str(archive["embedder_id"])
        if stored_id != backend.name:
            raise StaleEmbeddingError(
                f"sidecar {sidecar} was built with embedder {stored_id!r}, "
                f"configured embedder is {backend.name!r}"
            )
        precomputed = {k: archive[k] for k in archive.files if k != "embedder_id"}

    entries: list[Heuristic] = []
    seen: set[str] = set()
    for index, item in enumerate(raw):
        label = f"entry {index}"
        if not isinstance(item, dict):
            raise StoreLoadError(f"{label}: expected a mapping")
        hid = item.get("id")
        text = item.get("text")
        if not hid or not isinstance(hid, str):
            raise StoreLoadError(f"{label}: missing or invalid id")
        if not text or not isinstance(text, str):
            raise StoreLoadError(f"{label}: missing or invalid text")
        if hid in seen:
            raise StoreLoadError(f"{label}: duplicate id {hid!r}")
        seen.add(hid)
        hint = item.get("action_hint")
        action = parse_action_hint(hint, label) if hint else None
        embedding = precomputed.get(hid)
        if embedding is None:
            embedding = embed_text(text, backend)
        entries.append(
            Heuristic(
                id=hid,
                text=text,
                action_hint=action,
                tags=tuple(item.get("tags", ())),
                seed=bool(item.get("seed", False)),
                embedding=embedding,
            )
        )
    return HeuristicStore(entries=entries, embed_dim=backend.dim, embedder_id=backend.name)


def save_embedding_sidecar(store: HeuristicStore, store_path: str | Path) -> Path:
    """Write precomputed embeddings next to the store file."""
    store_path = Path(store_path)
    sidecar = store_path.with_suffix(store_path.suffix + ".embeddings.npz")
    arrays = {h.id: h.embedding for h in store.entries}
    np.savez(sidecar, embedder_id=np.str_(store.embedder_id), **arrays)
    return sidecar


def retrieve_topk(
    store: HeuristicStore,
    query: str,
    k: int = 3,
    backend: EmbedBackend | None = None,
) -> list[tuple[Heuristic, float]]:
    """Exact top-k by cosine similarity; ties broken by ascending id."""
    if not store.entries:
        raise EmptyStoreError("cannot retrieve from an empty heuristic store")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    backend = backend or HashedBagEmbedder()
    qvec = embed_text(query, backend)
    scores = store.matrix() @ qvec
    ranked = sorted(
        zip(store.entries, scores), key=lambda pair: (-pair[1], pair[0].id)
    )
    return [(h, float(s)) for h, s in ranked[: min(k, len(ranked))]]
