"""3D LUT compilation, trilinear application, and interchange formats.

The LUT is the sole executor of pixel change: grading parameters are
sampled onto a uniform lattice once, then every pixel is mapped purely
from its own value. That pointwise purity is what makes the output
temporally consistent by construction.

Interchange: `.cube` text (red index varies fastest, the Resolve/Adobe
convention) and ASC CDL ColorCorrection XML.
"""

from __future__ import annotations

import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass

import numpy as np

from .cdl import CdlParams, RolloffConfig, apply_cdl_array, require_valid
from .colorspace import Frame
from .errors import CubeFormatError, InputError

DEFAULT_SIZE = 33


@dataclass
class Lut3D:
    """A size^3 RGB lattice; flat index = r + g*size + b*size^2 (red fastest)."""

    size: int
    lattice: np.ndarray  # (size**3, 3) float64
    domain_min: tuple[float, float, float] = (0.0, 0.0, 0.0)
    domain_max: tuple[float, float, float] = (1.0, 1.0, 1.0)
    title: str = ""

    def __post_init__(self):
        self.lattice = np.asarray(self.lattice, dtype=np.float64)
        if self.size < 2:
            raise InputError(f"LUT size {self.size} < 2")
        if self.lattice.shape != (self.size**3, 3):
            raise InputError(
                f"lattice shape {self.lattice.shape} != ({self.size ** 3}, 3)"
            )
        if not np.isfinite(self.lattice).all():
            raise InputError("LUT lattice contains non-finite values")
        if not all(a < b for a, b in zip(self.domain_min, self.domain_max)):
            raise InputError("domain_min must be < domain_max per channel")

    def grid(self) -> np.ndarray:
        """Lattice reshaped to (size, size, size, 3), indexed [b, g, r]."""
        return self.lattice.reshape(self.size, self.size, self.size, 3)


def lattice_coords(size: int) -> np.ndarray:
    """Input coordinates of every lattice node, red fastest; (size**3, 3)."""
    axis = np.linspace(0.0, 1.0, size)
    b, g, r = np.meshgrid(axis, axis, axis, indexing="ij")
    return np.stack([r.ravel(), g.ravel(), b.ravel()], axis=1)


def compile_lut(
    params: CdlParams,
    rolloff: RolloffConfig,
    size: int = DEFAULT_SIZE,
    *,
    title: str = "",
    adaptive: bool = True,
) -> Lut3D:
    """Sample the CDL pipeline onto a uniform lattice. Deterministic."""
    require_valid(params)
    if not (2 <= size <= 129):
        raise InputError(f"LUT size {size} outside [2, 129]")
    coords = lattice_coords(size)
    lattice = apply_cdl_array(coords, params, rolloff, adaptive=adaptive, validate=False)
    return Lut3D(size=size, lattice=lattice, title=title)


_CHUNK = 1 << 18


def apply_lut_array(pixels: np.ndarray, lut: Lut3D) -> np.ndarray:
    """Trilinear interpolation of an (..., 3) array through the lattice.

    Out-of-domain inputs clamp to the domain. Each output value is a pure
    function of its own input value: processing is chunked only to stay
    cache-resident, and chunk boundaries never change per-pixel results.
    """
    shape = pixels.shape
    pixels = np.asarray(pixels)
    # Compute in the caller's precision: float32 frames keep the fast path,
    # anything else is promoted to float64.
    dtype = np.float32 if pixels.dtype == np.float32 else np.float64
    x = pixels.astype(dtype, copy=False).reshape(-1, 3)
    n = lut.size
    # One flat channel table per output channel: scalar np.take gathers are
    # substantially faster than multi-axis fancy indexing on the 4-D grid.
    tabs = [np.ascontiguousarray(lut.lattice[:, c], dtype=dtype) for c in range(3)]
    dmin = np.asarray(lut.domain_min, dtype=dtype)
    scale = ((n - 1) / (np.asarray(lut.domain_max) - np.asarray(lut.domain_min))).astype(
        dtype
    )
    out = np.empty_like(x)
    sr, sg, sb = 1, n, n * n
    offsets = (0, sr, sg, sg + sr, sb, sb + sr, sb + sg, sb + sg + sr)
    for s in range(0, x.shape[0], _CHUNK):
        xs = x[s : s + _CHUNK]
        t = np.clip((xs - dmin) * scale, 0.0, n - 1.0)
        i0 = np.minimum(t.astype(np.intp), n - 2)
        f = t - i0.astype(dtype)
        base = (i0[:, 2] * n + i0[:, 1]) * n + i0[:, 0]
        fr, fg, fb = f[:, 0], f[:, 1], f[:, 2]
        wr0, wg0, wb0 = 1.0 - fr, 1.0 - fg, 1.0 - fb
        weights = (
            wb0 * wg0 * wr0,
            wb0 * wg0 * fr,
            wb0 * fg * wr0,
            wb0 * fg * fr,
            fb * wg0 * wr0,
            fb * wg0 * fr,
            fb * fg * wr0,
            fb * fg * fr,
        )
        for c, tab in enumerate(tabs):
            acc = np.take(tab, base) * weights[0]
            for off, w in zip(offsets[1:], weights[1:]):
                acc += np.take(tab, base + off) * w
            out[s : s + _CHUNK, c] = acc
    return out.reshape(shape)


def apply_lut_trilinear(frame: Frame, lut: Lut3D) -> Frame:
    """Map every pixel of a frame through the LUT; colorimetry tag is kept."""
    mapped = apply_lut_array(frame.pixels, lut).astype(np.float32)
    return Frame(mapped, frame.colorimetry)


# ---------------------------------------------------------------------------
# .cube interchange

_DEFAULT_DOMAIN = ((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
_GENERATOR_COMMENT = "# Generated by cinegrade"


def write_cube(lut: Lut3D, out: io.TextIOBase | io.RawIOBase) -> None:
    """Serialize with 6 fractional digits, LF endings, red index fastest."""
    lines = [_GENERATOR_COMMENT]
    if lut.title:
        # The format has no escape convention; double quotes are stripped.
        lines.append(f'TITLE "{lut.title.replace(chr(34), "")}"')
    lines.append(f"LUT_3D_SIZE {lut.size}")
    if (tuple(lut.domain_min), tuple(lut.domain_max)) != _DEFAULT_DOMAIN:
        lines.append("DOMAIN_MIN " + " ".join(f"{v:.6f}" for v in lut.domain_min))
        lines.append("DOMAIN_MAX " + " ".join(f"{v:.6f}" for v in lut.domain_max))
    for row in lut.lattice:
        lines.append(f"{row[0]:.6f} {row[1]:.6f} {row[2]:.6f}")
    text = "\n".join(lines) + "\n"
    try:
        if isinstance(out, (io.RawIOBase, io.BufferedIOBase)):
            out.write(text.encode("ascii"))
        else:
            out.write(text)
    except OSError as exc:
        raise InputError(f"cube write failed: {exc}") from exc


def cube_text(lut: Lut3D) -> str:
    buf = io.StringIO()
    write_cube(lut, buf)
    return buf.getvalue()


def parse_cube(stream) -> Lut3D:
    """Tolerant `.cube` reader: comments, blank lines, CRLF, keyword order."""
    raw = stream.read()
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8", errors="replace")
    size = None
    title = ""
    domain_min = (0.0, 0.0, 0.0)
    domain_max = (1.0, 1.0, 1.0)
    data: list[tuple[float, float, float]] = []

    for lineno, line in enumerate(raw.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        upper = line.upper()
        if upper.startswith("TITLE"):
            title = line[5:].strip().strip('"')
            continue
        if upper.startswith("LUT_3D_SIZE"):
            try:
                size = int(line.split()[1])
            except (IndexError, ValueError):
                raise CubeFormatError("malformed LUT_3D_SIZE", lineno)
            continue
        if upper.startswith("LUT_1D_SIZE"):
            raise CubeFormatError("1D LUTs are not supported", lineno)
        if upper.startswith("DOMAIN_MIN") or upper.startswith("DOMAIN_MAX"):
            parts = line.split()
            try:
                triple = tuple(float(p) for p in parts[1:4])
            except ValueError:
                raise CubeFormatError(f"malformed {parts[0]}", lineno)
            if len(triple) != 3:
                raise CubeFormatError(f"{parts[0]} needs three values", lineno)
            if upper.startswith("DOMAIN_MIN"):
                domain_min = triple
            else:
                domain_max = triple
            continue
        parts = line.split()
        if len(parts) != 3:
            raise CubeFormatError(f"expected 3 numeric tokens, got {len(parts)}", lineno)
        try:
            data.append((float(parts[0]), float(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise CubeFormatError(f"non-numeric token: {exc}", lineno)

    if size is None:
        raise CubeFormatError("missing LUT_3D_SIZE keyword")
    expected = size**3
    if len(data) != expected:
        raise CubeFormatError(
            f"data line count {len(data)} != expected {expected} for size {size}"
        )
    return Lut3D(
        size=size,
        lattice=np.array(data, dtype=np.float64),
        domain_min=domain_min,
        domain_max=domain_max,
        title=title,
    )


# ---------------------------------------------------------------------------
# ASC CDL XML export

_CDL_LOSS_NOTE = (
    " Lossy export: the adaptive lift decay, contrast/pivot stage, and"
    " highlight roll-off have no CDL representation; the companion .cube"
    " file is the authoritative transform. "
)


def export_cdl_xml(params: CdlParams, correction_id: str = "cinegrade") -> str:
    """ASC CDL ColorCorrection document: Slope=gain, Offset=lift, Power=1/gamma."""
    require_valid(params)
    root = ET.Element("ColorCorrection", id=correction_id)
    root.append(ET.Comment(_CDL_LOSS_NOTE))
    sop = ET.SubElement(root, "SOPNode")

    def fmt(values):
        return " ".join(f"{v:g}" for v in values)

    ET.SubElement(sop, "Slope").text = fmt(params.gain)
    ET.SubElement(sop, "Offset").text = fmt(params.lift)
    ET.SubElement(sop, "Power").text = fmt(1.0 / g for g in params.gamma)
    sat = ET.SubElement(root, "SatNode")
    ET.SubElement(sat, "Saturation").text = f"{params.saturation:g}"
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(
        root, encoding="unicode"
    ) + "\n"
