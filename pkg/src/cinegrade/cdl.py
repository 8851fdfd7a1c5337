"""The modified ASC-CDL value pipeline.

Every lattice node and preview pixel passes through the same chain:
gain, adaptive lift, gamma, contrast about a pivot, saturation, and an
optional exponential highlight roll-off. The adaptive lift decays the
offset toward zero as the channel approaches 1.0; the roll-off emulates
a film shoulder above a threshold tau.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParamValidationError

# Rec.709 luma weights, as used by the CDL v1.2 Sat node
LUMA_WEIGHTS = np.array([0.2126, 0.7152, 0.0722])

# Parameter bounds: (low, high, low_inclusive, high_inclusive)
_BOUNDS = {
    "lift": (-0.5, 0.5, True, True),
    "gamma": (0.2, 5.0, False, True),
    "gain": (0.0, 4.0, False, True),
    "saturation": (0.0, 4.0, True, True),
    "contrast": (0.25, 4.0, True, True),
    "pivot": (0.0, 1.0, False, False),
}

_CHANNELS = ("r", "g", "b")

# Canonical field path order, used for serialization and lock bookkeeping.
FIELD_PATHS = tuple(
    [f"lift.{c}" for c in _CHANNELS]
    + [f"gamma.{c}" for c in _CHANNELS]
    + [f"gain.{c}" for c in _CHANNELS]
    + ["saturation", "contrast", "pivot"]
)


@dataclass(frozen=True)
class CdlParams:
    """The grading decision: the agent's entire action space."""

    lift: tuple[float, float, float] = (0.0, 0.0, 0.0)
    gamma: tuple[float, float, float] = (1.0, 1.0, 1.0)
    gain: tuple[float, float, float] = (1.0, 1.0, 1.0)
    saturation: float = 1.0
    contrast: float = 1.0
    pivot: float = 0.435

    @staticmethod
    def identity() -> "CdlParams":
        return CdlParams()

    def get_path(self, path: str) -> float:
        name, _, chan = path.partition(".")
        value = getattr(self, name)
        if chan:
            return float(value[_CHANNELS.index(chan)])
        return float(value)

    def with_path_values(self, values: dict[str, float]) -> "CdlParams":
        """A copy with the given field paths replaced by new values."""
        fields = {
            "lift": list(self.lift),
            "gamma": list(self.gamma),
            "gain": list(self.gain),
            "saturation": self.saturation,
            "contrast": self.contrast,
            "pivot": self.pivot,
        }
        for path, value in values.items():
            if path not in FIELD_PATHS:
                raise KeyError(f"unknown parameter field path {path!r}")
            name, _, chan = path.partition(".")
            if chan:
                fields[name][_CHANNELS.index(chan)] = float(value)
            else:
                fields[name] = float(value)
        return CdlParams(
            lift=tuple(fields["lift"]),
            gamma=tuple(fields["gamma"]),
            gain=tuple(fields["gain"]),
            saturation=fields["saturation"],
            contrast=fields["contrast"],
            pivot=fields["pivot"],
        )

    def to_dict(self) -> dict:
        return {
            "lift": list(self.lift),
            "gamma": list(self.gamma),
            "gain": list(self.gain),
            "saturation": self.saturation,
            "contrast": self.contrast,
            "pivot": self.pivot,
        }

    @staticmethod
    def from_dict(d: dict) -> "CdlParams":
        def triple(v):
            t = tuple(float(x) for x in v)
            if len(t) != 3:
                raise ValueError(f"expected an RGB triple, got {v!r}")
            return t

        return CdlParams(
            lift=triple(d.get("lift", (0, 0, 0))),
            gamma=triple(d.get("gamma", (1, 1, 1))),
            gain=triple(d.get("gain", (1, 1, 1))),
            saturation=float(d.get("saturation", 1.0)),
            contrast=float(d.get("contrast", 1.0)),
            pivot=float(d.get("pivot", 0.435)),
        )

    def canonical_json(self) -> str:
        """Deterministic serialization; byte-diffs of this pin the lock invariant."""
        return json.dumps(
            {path: repr(self.get_path(path)) for path in FIELD_PATHS},
            separators=(",", ":"),
        )


@dataclass(frozen=True)
class Violation:
    field_path: str
    value: float
    bounds: str

    def __str__(self) -> str:
        return f"{self.field_path}={self.value} outside {self.bounds}"


def validate_params(params: CdlParams) -> list[Violation]:
    """Every field outside its range, by path. Empty list means valid."""
    violations = []
    for path in FIELD_PATHS:
        name = path.split(".")[0]
        low, high, low_inc, high_inc = _BOUNDS[name]
        value = params.get_path(path)
        lo_ok = value >= low if low_inc else value > low
        hi_ok = value <= high if high_inc else value < high
        if not (math.isfinite(value) and lo_ok and hi_ok):
            lo_b = "[" if low_inc else "("
            hi_b = "]" if high_inc else ")"
            violations.append(Violation(path, value, f"{lo_b}{low}, {high}{hi_b}"))
    return violations


def require_valid(params: CdlParams) -> None:
    violations = validate_params(params)
    if violations:
        raise ParamValidationError(violations)


@dataclass(frozen=True)
class RolloffConfig:
    """Exponential highlight roll-off above tau; C1-continuous at tau."""

    tau: float = 0.8
    enabled: bool = True

    def __post_init__(self):
        if not (0.0 < self.tau < 1.0):
            raise ParamValidationError(
                [Violation("rolloff.tau", self.tau, "(0.0, 1.0)")]
            )


def adaptive_lift(x_gain: np.ndarray, lift: np.ndarray) -> np.ndarray:
    """x + l * (1 - x) per channel: the lift offset decays toward highlights."""
    x_gain = np.asarray(x_gain, dtype=np.float64)
    lift = np.asarray(lift, dtype=np.float64)
    return x_gain + lift * (1.0 - x_gain)


def highlight_rolloff(x, cfg: RolloffConfig):
    """Identity below tau; above, tau + (1-tau)*(1 - exp(-(x-tau)/(1-tau)))."""
    x = np.asarray(x, dtype=np.float64)
    if not cfg.enabled:
        return x if x.shape else float(x)
    tau = cfg.tau
    shoulder = tau + (1.0 - tau) * (1.0 - np.exp(-(np.maximum(x, tau) - tau) / (1.0 - tau)))
    out = np.where(x > tau, shoulder, x)
    return out if out.shape else float(out)


def apply_cdl_array(
    rgb: np.ndarray,
    params: CdlParams,
    rolloff: RolloffConfig,
    *,
    adaptive: bool = True,
    validate: bool = True,
) -> np.ndarray:
    """Vectorized pipeline over an (..., 3) array of [0,1] RGB values.

    Stage order: gain, clamp, lift, clamp, gamma, contrast, saturation,
    roll-off (if enabled), final clamp. `adaptive=False` reverts the lift
    stage to the standard flat CDL offset (ablation switch).
    """
    if validate:
        require_valid(params)
    x = np.asarray(rgb, dtype=np.float64)
    gain = np.asarray(params.gain)
    lift = np.asarray(params.lift)
    inv_gamma = 1.0 / np.asarray(params.gamma)

    x = np.clip(x * gain, 0.0, 1.0)
    if adaptive:
        x = adaptive_lift(x, lift)
    else:
        x = x + lift
    x = np.clip(x, 0.0, 1.0)
    x = np.power(x, inv_gamma)  # x >= 0 after clamp; 0**p == 0
    x = (x - params.pivot) * params.contrast + params.pivot
    luma = x @ LUMA_WEIGHTS
    x = luma[..., None] + params.saturation * (x - luma[..., None])
    if rolloff.enabled:
        x = highlight_rolloff(x, rolloff)
    return np.clip(x, 0.0, 1.0)


def apply_cdl(
    rgb,
    params: CdlParams,
    rolloff: RolloffConfig,
    *,
    adaptive: bool = True,
) -> tuple[float, float, float]:
    """Single-triple convenience wrapper over apply_cdl_array."""
    out = apply_cdl_array(np.asarray(rgb, dtype=np.float64), params, rolloff, adaptive=adaptive)
    return (float(out[0]), float(out[1]), float(out[2]))
