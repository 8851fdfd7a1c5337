"""Engine configuration: config file for tunables, environment for secrets.

Endpoints and credentials come only from environment variables
(LUMI_LLM_ENDPOINT, LUMI_LLM_KEY, LUMI_VLM_ENDPOINT, LUMI_VLM_KEY,
LUMI_EMBED_ENDPOINT, LUMI_MODE); they are never read from config files.
"""

from __future__ import annotations

import importlib.resources
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .cdl import RolloffConfig
from .errors import ConfigurationError
from .reasoning import SearchConfig
from .reflection import DEFAULT_MAGNITUDE_CAPS
from .session import DEFAULT_MAX_ITERATIONS

MODE_SCRIPTED = "scripted"
MODE_LIVE = "live"

ENV_LLM_ENDPOINT = "LUMI_LLM_ENDPOINT"
ENV_LLM_KEY = "LUMI_LLM_KEY"
ENV_VLM_ENDPOINT = "LUMI_VLM_ENDPOINT"
ENV_VLM_KEY = "LUMI_VLM_KEY"
ENV_EMBED_ENDPOINT = "LUMI_EMBED_ENDPOINT"
ENV_MODE = "LUMI_MODE"


def default_store_path() -> Path:
    return Path(str(importlib.resources.files("cinegrade") / "assets" / "heuristics.yaml"))


@dataclass
class EngineConfig:
    mode: str = MODE_SCRIPTED
    fixture_path: str | None = None
    sessions_dir: str = "sessions"
    store_path: str = field(default_factory=lambda: str(default_store_path()))
    search: SearchConfig = field(default_factory=SearchConfig)
    rolloff: RolloffConfig = field(default_factory=RolloffConfig)
    magnitude_caps: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_MAGNITUDE_CAPS)
    )
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    use_rag: bool = True
    llm_endpoint: str | None = None
    llm_key: str | None = None
    llm_model: str = "default"
    vlm_endpoint: str | None = None
    vlm_key: str | None = None
    vlm_model: str = "default"
    embed_endpoint: str | None = None

    def validate(self) -> "EngineConfig":
        if self.mode not in (MODE_SCRIPTED, MODE_LIVE):
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.mode == MODE_SCRIPTED and not self.fixture_path:
            raise ConfigurationError("scripted mode requires a fixture_path")
        if self.mode == MODE_LIVE and not (self.llm_endpoint and self.llm_key):
            raise ConfigurationError(
                f"live mode requires {ENV_LLM_ENDPOINT} and {ENV_LLM_KEY}"
            )
        return self


def load_config(
    path: str | Path | None = None, env: dict[str, str] | None = None
) -> EngineConfig:
    """Build EngineConfig from an optional YAML file plus the environment."""
    env = os.environ if env is None else env
    raw: dict = {}
    if path:
        loaded = yaml.safe_load(Path(path).read_text())
        if loaded is not None:
            if not isinstance(loaded, dict):
                raise ConfigurationError(f"config file {path} must hold a mapping")
            raw = loaded

    search_raw = raw.get("search", {})
    rolloff_raw = raw.get("rolloff", {})
    cfg = EngineConfig(
        mode=env.get(ENV_MODE, raw.get("mode", MODE_SCRIPTED)),
        fixture_path=raw.get("fixture_path"),
        sessions_dir=raw.get("sessions_dir", "sessions"),
        store_path=raw.get("store_path", str(default_store_path())),
        search=SearchConfig(**search_raw),
        rolloff=RolloffConfig(**rolloff_raw),
        magnitude_caps={**DEFAULT_MAGNITUDE_CAPS, **raw.get("magnitude_caps", {})},
        max_iterations=int(raw.get("max_iterations", DEFAULT_MAX_ITERATIONS)),
        use_rag=bool(raw.get("use_rag", True)),
        llm_endpoint=env.get(ENV_LLM_ENDPOINT),
        llm_key=env.get(ENV_LLM_KEY),
        llm_model=raw.get("llm_model", "default"),
        vlm_endpoint=env.get(ENV_VLM_ENDPOINT),
        vlm_key=env.get(ENV_VLM_KEY),
        vlm_model=raw.get("vlm_model", "default"),
        embed_endpoint=env.get(ENV_EMBED_ENDPOINT),
    )
    return cfg.validate()
