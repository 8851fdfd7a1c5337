"""Objective measurements over display-referred frames.

Exposure is summarized as nearest-rank IRE percentiles (1st / 50th /
99th) of Rec.709 luma. Protected-tone auditing measures circular hue
drift of before-frame members of each hue range, so the critic and the
reflection loop can see whether a grade contaminated critical hues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cdl import LUMA_WEIGHTS
from .colorspace import Frame
from .errors import InputError, InsufficientDataError

MIN_PIXELS = 100
DEFAULT_SATURATION_FLOOR = 0.05


@dataclass(frozen=True)
class ExposureProfile:
    black_point_ire: float
    mid_gray_ire: float
    white_point_ire: float

    def to_dict(self) -> dict:
        return {
            "black_point_ire": self.black_point_ire,
            "mid_gray_ire": self.mid_gray_ire,
            "white_point_ire": self.white_point_ire,
        }

    @staticmethod
    def from_dict(d: dict) -> "ExposureProfile":
        return ExposureProfile(
            float(d["black_point_ire"]),
            float(d["mid_gray_ire"]),
            float(d["white_point_ire"]),
        )


@dataclass(frozen=True)
class HueRange:
    """A named hue interval in degrees; wraps around 360 when low > high."""

    name: str
    low_deg: float
    high_deg: float

    def __post_init__(self):
        if not self.name:
            raise InputError("hue range name must be non-empty")
        for v in (self.low_deg, self.high_deg):
            if not (0.0 <= v < 360.0):
                raise InputError(f"hue angle {v} outside [0, 360)")

    def contains(self, hue_deg: np.ndarray) -> np.ndarray:
        if self.low_deg <= self.high_deg:
            return (hue_deg >= self.low_deg) & (hue_deg <= self.high_deg)
        return (hue_deg >= self.low_deg) | (hue_deg <= self.high_deg)


@dataclass(frozen=True)
class ToneRangeStats:
    name: str
    pixel_count: int
    mean_abs_hue_shift_deg: float
    max_abs_hue_shift_deg: float
    mean_saturation_ratio: float
    empty: bool = False

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pixel_count": self.pixel_count,
            "mean_abs_hue_shift_deg": self.mean_abs_hue_shift_deg,
            "max_abs_hue_shift_deg": self.max_abs_hue_shift_deg,
            "mean_saturation_ratio": self.mean_saturation_ratio,
            "empty": self.empty,
        }


@dataclass(frozen=True)
class ProtectedToneReport:
    ranges: tuple[ToneRangeStats, ...]

    def to_dict(self) -> dict:
        return {"ranges": [r.to_dict() for r in self.ranges]}


def nearest_rank_percentile(sorted_values: np.ndarray, p: float) -> float:
    """Nearest-rank percentile: value at index ceil(p/100 * n) - 1."""
    n = len(sorted_values)
    rank = max(1, math.ceil(p / 100.0 * n))
    return float(sorted_values[min(rank, n) - 1])


def rec709_luma(pixels: np.ndarray) -> np.ndarray:
    return pixels @ LUMA_WEIGHTS


def exposure_profile(frame: Frame) -> ExposureProfile:
    """Black / mid-gray / white points as 1st / 50th / 99th IRE percentiles."""
    if frame.colorimetry.kind != "rec709-display":
        raise InputError(
            f"exposure_profile expects a rec709-display frame, got {frame.colorimetry.kind!r}"
        )
    luma = rec709_luma(frame.pixels.reshape(-1, 3).astype(np.float64))
    if luma.size < MIN_PIXELS:
        raise InsufficientDataError(
            f"frame has {luma.size} pixels; need at least {MIN_PIXELS}"
        )
    ire = np.sort(luma) * 100.0
    return ExposureProfile(
        black_point_ire=nearest_rank_percentile(ire, 1),
        mid_gray_ire=nearest_rank_percentile(ire, 50),
        white_point_ire=nearest_rank_percentile(ire, 99),
    )


def hsv_hue_sat(pixels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """HSV hue in degrees [0, 360) and saturation for an (n, 3) RGB array."""
    r, g, b = pixels[:, 0], pixels[:, 1], pixels[:, 2]
    maxc = np.max(pixels, axis=1)
    minc = np.min(pixels, axis=1)
    delta = maxc - minc
    sat = np.where(maxc > 0, delta / np.maximum(maxc, 1e-12), 0.0)

    hue = np.zeros(len(pixels))
    nz = delta > 0
    d = np.where(nz, delta, 1.0)
    hr = np.mod((g - b) / d, 6.0)
    hg = (b - r) / d + 2.0
    hb = (r - g) / d + 4.0
    hue = np.where(maxc == r, hr, np.where(maxc == g, hg, hb)) * 60.0
    hue = np.where(nz, np.mod(hue, 360.0), 0.0)
    return hue, sat


def circular_hue_diff(a_deg: np.ndarray, b_deg: np.ndarray) -> np.ndarray:
    """Shortest angular distance: 359 vs 1 is 2, never 358."""
    d = np.abs(a_deg - b_deg) % 360.0
    return np.minimum(d, 360.0 - d)


def protected_tone_shift(
    before: Frame,
    after: Frame,
    ranges: list[HueRange],
    saturation_floor: float = DEFAULT_SATURATION_FLOOR,
) -> ProtectedToneReport:
    """Per-range hue drift of before-frame members; near-neutrals excluded."""
    if before.pixels.shape != after.pixels.shape:
        raise InputError(
            f"frame dimensions differ: {before.pixels.shape} vs {after.pixels.shape}"
        )
    pix_before = before.pixels.reshape(-1, 3).astype(np.float64)
    pix_after = after.pixels.reshape(-1, 3).astype(np.float64)
    hue_b, sat_b = hsv_hue_sat(pix_before)
    hue_a, sat_a = hsv_hue_sat(pix_after)
    chromatic = sat_b >= saturation_floor

    stats = []
    for rng in ranges:
        mask = chromatic & rng.contains(hue_b)
        count = int(mask.sum())
        if count == 0:
            stats.append(ToneRangeStats(rng.name, 0, 0.0, 0.0, 1.0, empty=True))
            continue
        shift = circular_hue_diff(hue_b[mask], hue_a[mask])
        ratio = sat_a[mask] / sat_b[mask]  # sat_b >= floor, no div by zero
        stats.append(
            ToneRangeStats(
                name=rng.name,
                pixel_count=count,
                mean_abs_hue_shift_deg=float(shift.mean()),
                max_abs_hue_shift_deg=float(shift.max()),
                mean_saturation_ratio=float(ratio.mean()),
            )
        )
    return ProtectedToneReport(ranges=tuple(stats))
