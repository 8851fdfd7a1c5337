"""Frame file I/O: 16-bit PNG and binary PPM.

A clip is a directory of numbered frame files; video decoding is out of
scope (users extract frames with external tools).
"""

from __future__ import annotations

import re
from pathlib import Path

import cv2
import numpy as np

from .errors import InputError

FRAME_EXTENSIONS = (".png", ".ppm")


def read_image(path: str | Path) -> np.ndarray:
    """Read a PNG or PPM into a float32 (h, w, 3) array scaled to [0, 1]."""
    path = Path(path)
    if path.suffix.lower() == ".ppm":
        return _read_ppm(path)
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise InputError(f"unreadable image file: {path}")
    if raw.ndim == 2:
        raw = np.repeat(raw[:, :, None], 3, axis=2)
    if raw.shape[2] == 4:
        raw = raw[:, :, :3]
    rgb = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    scale = 65535.0 if rgb.dtype == np.uint16 else 255.0
    return rgb.astype(np.float32) / scale


def write_image(path: str | Path, pixels: np.ndarray, bit_depth: int = 16) -> None:
    """Write a float [0,1] (h, w, 3) array as 16-bit (default) or 8-bit."""
    path = Path(path)
    if bit_depth not in (8, 16):
        raise InputError(f"unsupported bit depth {bit_depth}")
    maxval = 65535 if bit_depth == 16 else 255
    dtype = np.uint16 if bit_depth == 16 else np.uint8
    quant = np.clip(np.rint(pixels * maxval), 0, maxval).astype(dtype)
    if path.suffix.lower() == ".ppm":
        _write_ppm(path, quant, maxval)
        return
    # Store PNGs uncompressed: encoding 16-bit frames dominates render time
    # otherwise, and graded footage is near-incompressible noise to zlib.
    ok = cv2.imwrite(
        str(path),
        cv2.cvtColor(quant, cv2.COLOR_RGB2BGR),
        [cv2.IMWRITE_PNG_COMPRESSION, 0],
    )
    if not ok:
        raise InputError(f"failed to write image: {path}")


def _read_ppm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    # Header: magic, width, height, maxval; '#' comments allowed between tokens.
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        m = re.compile(rb"\s*(#[^\n]*\n)*\s*(\S+)").match(data, pos)
        if m is None:
            raise InputError(f"truncated PPM header: {path}")
        tokens.append(m.group(2))
        pos = m.end()
    if tokens[0] != b"P6":
        raise InputError(f"not a binary PPM (P6): {path}")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    pos += 1  # single whitespace after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    count = width * height * 3
    body = data[pos : pos + count * dtype.itemsize]
    if len(body) != count * dtype.itemsize:
        raise InputError(f"truncated PPM pixel data: {path}")
    pix = np.frombuffer(body, dtype=dtype)
    return (pix.reshape(height, width, 3).astype(np.float32)) / maxval


def _write_ppm(path: Path, quant: np.ndarray, maxval: int) -> None:
    header = f"P6\n{quant.shape[1]} {quant.shape[0]}\n{maxval}\n".encode()
    if maxval > 255:
        body = quant.astype(">u2").tobytes()
    else:
        body = quant.astype(np.uint8).tobytes()
    path.write_bytes(header + body)


def list_clip_frames(clip_dir: str | Path) -> list[Path]:
    """Frame files of a clip directory, sorted by name."""
    clip_dir = Path(clip_dir)
    if not clip_dir.is_dir():
        raise InputError(f"not a clip directory: {clip_dir}")
    frames = sorted(
        p for p in clip_dir.iterdir() if p.suffix.lower() in FRAME_EXTENSIONS
    )
    if not frames:
        raise InputError(f"no frame files (.png/.ppm) in {clip_dir}")
    return frames


def middle_frame(clip_dir: str | Path) -> Path:
    """Default anchor selection: the middle frame of the sorted sequence."""
    frames = list_clip_frames(clip_dir)
    return frames[len(frames) // 2]


def downscale(pixels: np.ndarray, long_edge: int) -> np.ndarray:
    """Downscale so the longest edge is at most long_edge (area resampling)."""
    h, w = pixels.shape[:2]
    scale = long_edge / max(h, w)
    if scale >= 1.0:
        return pixels
    new_w, new_h = max(1, round(w * scale)), max(1, round(h * scale))
    return cv2.resize(pixels, (new_w, new_h), interpolation=cv2.INTER_AREA)


def encode_png_bytes(pixels: np.ndarray) -> bytes:
    """8-bit PNG bytes for preview/backends payloads."""
    quant = np.clip(np.rint(pixels * 255.0), 0, 255).astype(np.uint8)
    ok, buf = cv2.imencode(".png", cv2.cvtColor(quant, cv2.COLOR_RGB2BGR))
    if not ok:
        raise InputError("PNG encoding failed")
    return bytes(buf)
