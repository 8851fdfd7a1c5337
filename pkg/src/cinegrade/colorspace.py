"""Camera log curve decoding and color space transforms.

Covers the deterministic half of scene perception: decoding vendor log
encodings to scene-linear light, and mapping camera gamuts to Rec.709
display through a CAT02 white point adaptation.

Curve constants are taken from the published vendor documents:
  - Sony S-Log3 technical summary (v1.0)
  - RED Log3G10 (IPP2 white paper, v3 constants)
  - ARRI LogC3 at EI 800 (ALEXA SDK formula)
  - Panasonic V-Log/V-Gamut reference manual
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ColorimetryMismatchError,
    ConfigurationError,
    DegenerateWhitepointError,
    UnknownCurveError,
)

# ---------------------------------------------------------------------------
# Frames

CAMERA_LOG = "camera-log"
SCENE_LINEAR = "scene-linear"
REC709_DISPLAY = "rec709-display"


@dataclass(frozen=True)
class Colorimetry:
    """Tag describing how a frame's pixel values are to be interpreted."""

    kind: str  # camera-log | scene-linear | rec709-display
    curve: str | None = None
    gamut: str | None = None


@dataclass
class Frame:
    """An RGB raster plus its colorimetry tag.

    Pixels are float32, shape (height, width, 3). Display-referred frames
    hold values in [0, 1]; scene-linear frames may exceed 1.
    """

    pixels: np.ndarray
    colorimetry: Colorimetry

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) pixel array, got {self.pixels.shape}")
        if not np.isfinite(self.pixels).all():
            raise ValueError("frame contains NaN/Inf channel values")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


# ---------------------------------------------------------------------------
# Log curves


class LogCurve:
    """A vendor log transfer curve. decode() maps encoded [0,1] to linear."""

    name: str = ""

    def decode(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def encode(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class SLog3(LogCurve):
    # Sony S-Log3: cut at code 171.2102946929/1023 (linear 0.01125)
    name = "SLog3"
    _CUT_CODE = 171.2102946929 / 1023.0
    _CUT_LIN = 0.01125

    def decode(self, x):
        x = np.asarray(x, dtype=np.float64)
        hi = np.power(10.0, (x * 1023.0 - 420.0) / 261.5) * (0.18 + 0.01) - 0.01
        lo = (x * 1023.0 - 95.0) * 0.01125 / (171.2102946929 - 95.0)
        return np.where(x >= self._CUT_CODE, hi, lo)

    def encode(self, y):
        y = np.asarray(y, dtype=np.float64)
        hi = (420.0 + np.log10(np.maximum(y + 0.01, 1e-10) / (0.18 + 0.01)) * 261.5) / 1023.0
        lo = (y * (171.2102946929 - 95.0) / 0.01125 + 95.0) / 1023.0
        return np.where(y >= self._CUT_LIN, hi, lo)


class Log3G10(LogCurve):
    # RED Log3G10 v3: offset 0.01 applied pre-log, linear slope below 0
    name = "Log3G10"
    _A = 0.224282
    _B = 155.975327
    _C = 0.01
    _G = 15.1927

    def decode(self, x):
        x = np.asarray(x, dtype=np.float64)
        hi = (np.power(10.0, x / self._A) - 1.0) / self._B
        lo = x / self._G
        return np.where(x < 0.0, lo, hi) - self._C

    def encode(self, y):
        y = np.asarray(y, dtype=np.float64) + self._C
        hi = self._A * np.log10(np.maximum(y, 0.0) * self._B + 1.0)
        lo = y * self._G
        return np.where(y < 0.0, lo, hi)


class LogC3(LogCurve):
    # ARRI LogC3 at EI 800
    name = "LogC3"
    _CUT = 0.010591
    _A = 5.555556
    _B = 0.052272
    _C = 0.247189
    _D = 0.385537
    _E = 5.367655
    _F = 0.092809

    def decode(self, x):
        x = np.asarray(x, dtype=np.float64)
        hi = (np.power(10.0, (x - self._D) / self._C) - self._B) / self._A
        lo = (x - self._F) / self._E
        return np.where(x > self._E * self._CUT + self._F, hi, lo)

    def encode(self, y):
        y = np.asarray(y, dtype=np.float64)
        hi = self._C * np.log10(np.maximum(self._A * y + self._B, 1e-10)) + self._D
        lo = self._E * y + self._F
        return np.where(y > self._CUT, hi, lo)


class VLog(LogCurve):
    # Panasonic V-Log
    name = "VLog"
    _B = 0.00873
    _C = 0.241514
    _D = 0.598206
    _CUT_LIN = 0.01
    _CUT_CODE = 0.181

    def decode(self, x):
        x = np.asarray(x, dtype=np.float64)
        hi = np.power(10.0, (x - self._D) / self._C) - self._B
        lo = (x - 0.125) / 5.6
        return np.where(x >= self._CUT_CODE, hi, lo)

    def encode(self, y):
        y = np.asarray(y, dtype=np.float64)
        hi = self._C * np.log10(np.maximum(y + self._B, 1e-10)) + self._D
        lo = 5.6 * y + 0.125
        return np.where(y >= self._CUT_LIN, hi, lo)


_CURVES: dict[str, LogCurve] = {c.name: c for c in (SLog3(), Log3G10(), LogC3(), VLog())}


def get_curve(name: str) -> LogCurve:
    """Look up a supported log curve by identifier; unknown names are rejected."""
    try:
        return _CURVES[name]
    except KeyError:
        raise UnknownCurveError(
            f"unknown log curve {name!r}; supported: {sorted(_CURVES)}"
        ) from None


def decode_log(frame: Frame, curve: LogCurve) -> Frame:
    """Decode a camera-log frame to scene-linear light."""
    if frame.colorimetry.kind != CAMERA_LOG:
        raise ColorimetryMismatchError(
            f"decode_log expects a camera-log frame, got {frame.colorimetry.kind!r}"
        )
    if frame.colorimetry.curve is not None and frame.colorimetry.curve != curve.name:
        raise ColorimetryMismatchError(
            f"frame is tagged {frame.colorimetry.curve!r} but curve is {curve.name!r}"
        )
    linear = curve.decode(frame.pixels).astype(np.float32)
    if not np.isfinite(linear).all():
        raise ConfigurationError(f"{curve.name} decode produced non-finite values")
    return Frame(linear, Colorimetry(SCENE_LINEAR, gamut=frame.colorimetry.gamut))


# ---------------------------------------------------------------------------
# Chromaticities and matrices


def _xy_to_xyz(xy) -> np.ndarray:
    x, y = xy
    if not (0.0 < x < 1.0 and 0.0 < y < 1.0):
        raise DegenerateWhitepointError(f"white point xy {xy} outside (0,1)^2")
    return np.array([x / y, 1.0, (1.0 - x - y) / y], dtype=np.float64)


@dataclass(frozen=True)
class Chromaticity:
    """A camera/display gamut: RGB->XYZ matrix plus its white point."""

    name: str
    to_xyz: np.ndarray  # 3x3, gamut RGB -> CIE XYZ
    white_xy: tuple[float, float]

    @staticmethod
    def from_primaries(name, red, green, blue, white) -> "Chromaticity":
        """Build the RGB->XYZ matrix from xy primaries and white point."""
        prim = np.array(
            [
                [red[0] / red[1], green[0] / green[1], blue[0] / blue[1]],
                [1.0, 1.0, 1.0],
                [
                    (1 - red[0] - red[1]) / red[1],
                    (1 - green[0] - green[1]) / green[1],
                    (1 - blue[0] - blue[1]) / blue[1],
                ],
            ]
        )
        scale = np.linalg.solve(prim, _xy_to_xyz(white))
        return Chromaticity(name, prim * scale, (float(white[0]), float(white[1])))

    def from_xyz(self) -> np.ndarray:
        try:
            return np.linalg.inv(self.to_xyz)
        except np.linalg.LinAlgError:
            raise ConfigurationError(f"gamut matrix for {self.name!r} is not invertible")


D65 = (0.3127, 0.3290)
D50 = (0.34567, 0.35850)

GAMUTS: dict[str, Chromaticity] = {
    g.name: g
    for g in (
        Chromaticity.from_primaries(
            "Rec709", (0.64, 0.33), (0.30, 0.60), (0.15, 0.06), D65
        ),
        Chromaticity.from_primaries(
            "SGamut3Cine", (0.766, 0.275), (0.225, 0.800), (0.089, -0.087), D65
        ),
        Chromaticity.from_primaries(
            "REDWideGamutRGB",
            (0.780308, 0.304253),
            (0.121595, 1.493994),
            (0.095612, -0.084589),
            D65,
        ),
        Chromaticity.from_primaries(
            "ARRIWideGamut3", (0.6840, 0.3130), (0.2210, 0.8480), (0.0861, -0.1020), D65
        ),
        Chromaticity.from_primaries(
            "VGamut", (0.730, 0.280), (0.165, 0.840), (0.100, -0.030), D65
        ),
    )
}


def get_gamut(name: str) -> Chromaticity:
    try:
        return GAMUTS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown gamut {name!r}; supported: {sorted(GAMUTS)}"
        ) from None


# CAT02 cone response matrix (CIECAM02)
_M_CAT02 = np.array(
    [
        [0.7328, 0.4296, -0.1624],
        [-0.7036, 1.6975, 0.0061],
        [0.0030, 0.0136, 0.9834],
    ]
)
_M_CAT02_INV = np.linalg.inv(_M_CAT02)


def cat02_matrix(src_white_xy, dst_white_xy) -> np.ndarray:
    """The 3x3 XYZ->XYZ von Kries adaptation matrix between two white points."""
    lms_src = _M_CAT02 @ _xy_to_xyz(src_white_xy)
    lms_dst = _M_CAT02 @ _xy_to_xyz(dst_white_xy)
    if np.any(np.abs(lms_src) < 1e-6):
        raise DegenerateWhitepointError(
            f"source white {src_white_xy} has a zero CAT02 LMS component"
        )
    return _M_CAT02_INV @ np.diag(lms_dst / lms_src) @ _M_CAT02


def cat02_adapt(xyz, src_white_xy, dst_white_xy) -> np.ndarray:
    """Adapt an XYZ triple (or array of them) from one white point to another."""
    xyz = np.asarray(xyz, dtype=np.float64)
    if not np.isfinite(xyz).all():
        raise ValueError("non-finite XYZ input")
    return xyz @ cat02_matrix(src_white_xy, dst_white_xy).T


# ---------------------------------------------------------------------------
# Rec.709 display encoding


def rec709_oetf(x: np.ndarray) -> np.ndarray:
    """Rec.709 opto-electronic transfer function on linear values in [0,1]."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x < 0.018, 4.5 * x, 1.099 * np.power(np.maximum(x, 0.018), 0.45) - 0.099)


def cst_matrix(src: Chromaticity) -> np.ndarray:
    """Composite linear matrix: src gamut RGB -> CAT02-adapted Rec.709 RGB."""
    rec709 = GAMUTS["Rec709"]
    adapt = cat02_matrix(src.white_xy, rec709.white_xy)
    return rec709.from_xyz() @ adapt @ src.to_xyz


def cst_to_rec709(frame: Frame, src: Chromaticity) -> Frame:
    """Transform a scene-linear frame to display-referred Rec.709.

    Chain: gamut->XYZ, CAT02 to D65, XYZ->Rec.709 primaries, clip negatives,
    Rec.709 OETF, clamp to [0,1].
    """
    if frame.colorimetry.kind != SCENE_LINEAR:
        raise ColorimetryMismatchError(
            f"cst_to_rec709 expects a scene-linear frame, got {frame.colorimetry.kind!r}"
        )
    m = cst_matrix(src)
    linear = frame.pixels.astype(np.float64) @ m.T
    np.maximum(linear, 0.0, out=linear)
    encoded = np.clip(rec709_oetf(np.minimum(linear, 1.0)), 0.0, 1.0)
    return Frame(encoded.astype(np.float32), Colorimetry(REC709_DISPLAY))


def normalize_to_rec709(frame: Frame, curve: LogCurve, gamut: Chromaticity) -> Frame:
    """decode_log followed by cst_to_rec709: log anchor -> display Rec.709."""
    return cst_to_rec709(decode_log(frame, curve), gamut)
