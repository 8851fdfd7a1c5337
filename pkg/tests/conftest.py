import json

import numpy as np
import pytest

from cinegrade.colorspace import CAMERA_LOG, Colorimetry, Frame, get_curve
from cinegrade.config import EngineConfig
from cinegrade.engine import GradingEngine
from cinegrade.frameio import write_image
from cinegrade.reasoning import SearchConfig


def identity_params_dict(**overrides):
    d = {
        "lift": [0.0, 0.0, 0.0],
        "gamma": [1.0, 1.0, 1.0],
        "gain": [1.0, 1.0, 1.0],
        "saturation": 1.0,
        "contrast": 1.0,
        "pivot": 0.435,
    }
    d.update(overrides)
    return d


def analyst_reply(mood="golden_hour", genre="nature documentary", **kwargs):
    d = {
        "lighting_mood": mood,
        "narrative": {"genre": genre, "emotion": "serene"},
        "subjects": ["rolling hills", "a grazing goat"],
        "protected_tones": {"skin": [15, 45], "sky": [200, 230]},
    }
    d.update(kwargs)
    return d


def expander_reply(*param_dicts, rationale="warms the palette"):
    return {
        "candidates": [
            {"params": p, "rationale": f"{rationale} #{i}"}
            for i, p in enumerate(param_dicts)
        ]
    }


def default_candidates(gains=(1.1, 1.2, 1.3)):
    return expander_reply(
        *[identity_params_dict(gain=[g, 1.0, 1.0]) for g in gains]
    )


def critic_reply(score, critique="fine"):
    return {"score": score, "critique": critique}


def reflector_update(targeted, magnitude="slight", rationale="per feedback"):
    return {
        "action": "update",
        "magnitude": magnitude,
        "targeted": targeted,
        "rationale": rationale,
    }


def write_fixture(path, analyst=(), expander=(), critic=(), reflector=()):
    path.write_text(
        json.dumps(
            {
                "analyst": list(analyst),
                "expander": list(expander),
                "critic": list(critic),
                "reflector": list(reflector),
            }
        )
    )
    return path


def synthetic_log_pixels(height=32, width=32, seed=7):
    """A plausible S-Log3 frame: encode a smooth linear gradient scene."""
    rng = np.random.default_rng(seed)
    y = np.linspace(0.02, 0.9, height)[:, None, None]
    x = np.linspace(0.05, 0.6, width)[None, :, None]
    base = y * np.array([1.0, 0.9, 0.8]) + x * np.array([0.2, 0.3, 0.5])
    base = base + rng.uniform(0, 0.02, size=(height, width, 3))
    encoded = get_curve("SLog3").encode(base)
    return np.clip(encoded, 0.0, 1.0).astype(np.float32)


def synthetic_log_frame(height=32, width=32, seed=7):
    return Frame(
        synthetic_log_pixels(height, width, seed),
        Colorimetry(CAMERA_LOG, curve="SLog3", gamut="SGamut3Cine"),
    )


@pytest.fixture
def anchor_png(tmp_path):
    path = tmp_path / "anchor_0001.png"
    write_image(path, synthetic_log_pixels(), bit_depth=16)
    return path


def standard_grade_fixture(
    tmp_path,
    depth1_scores=(4, 2, 5),
    depth2_scores=(3, 3, 3, 3, 3, 3),
    reflector=(),
    analyst=None,
):
    """Fixture covering one full automatic grade: 1 analyst, 3 expander, 9 critic."""
    if analyst is None:
        analyst = [analyst_reply()]
    expander = [
        default_candidates((1.10, 1.20, 1.30)),
        default_candidates((1.31, 1.32, 1.33)),
        default_candidates((1.11, 1.12, 1.13)),
    ]
    critic = [critic_reply(s) for s in list(depth1_scores) + list(depth2_scores)]
    return write_fixture(
        tmp_path / "fixture.json",
        analyst=analyst,
        expander=expander,
        critic=critic,
        reflector=reflector,
    )


def make_engine(tmp_path, fixture_path, **config_overrides):
    defaults = dict(
        mode="scripted",
        fixture_path=str(fixture_path),
        sessions_dir=str(tmp_path / "sessions"),
        search=SearchConfig(preview_long_edge=32),
    )
    defaults.update(config_overrides)
    return GradingEngine(EngineConfig(**defaults))
