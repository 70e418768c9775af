"""Built-in binary logos matching the payload sizes used in the benchmarks (19x52, 64x64)."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .image_model import WatermarkBits, load_watermark

_GLYPHS = {
    "W": ["1...1", "1...1", "1...1", "1.1.1", "1.1.1", "11.11", "1...1"],
    "M": ["1...1", "11.11", "1.1.1", "1.1.1", "1...1", "1...1", "1...1"],
    "R": ["1111.", "1...1", "1...1", "1111.", "1.1..", "1..1.", "1...1"],
    "K": ["1...1", "1..1.", "1.1..", "11...", "1.1..", "1..1.", "1...1"],
}


def _glyph(ch: str, scale: int) -> np.ndarray:
    g = np.array([[c == "1" for c in row] for row in _GLYPHS[ch]], dtype=np.uint8)
    return np.kron(g, np.ones((scale, scale), dtype=np.uint8))


def _stamp(canvas: np.ndarray, text: str, scale: int, gap: int) -> None:
    glyphs = [_glyph(ch, scale) for ch in text]
    gh = glyphs[0].shape[0]
    width = sum(g.shape[1] for g in glyphs) + gap * (len(glyphs) - 1)
    top = (canvas.shape[0] - gh) // 2
    left = (canvas.shape[1] - width) // 2
    for g in glyphs:
        canvas[top:top + gh, left:left + g.shape[1]] |= g
        left += g.shape[1] + gap


def logo_19x52() -> WatermarkBits:
    canvas = np.zeros((19, 52), dtype=np.uint8)
    canvas[[0, -1], :] = 1
    canvas[:, [0, -1]] = 1
    _stamp(canvas, "WMRK", scale=2, gap=2)
    return WatermarkBits(canvas)


def logo_64x64() -> WatermarkBits:
    yy, xx = np.mgrid[0:64, 0:64]
    r = np.hypot(yy - 31.5, xx - 31.5)
    canvas = ((r >= 27) & (r <= 30.5)).astype(np.uint8)
    _stamp(canvas, "WM", scale=3, gap=3)
    return WatermarkBits(canvas)


BUILTIN = {"logo19x52": logo_19x52, "logo64x64": logo_64x64}


def resolve_payload(entry: str) -> tuple[str, WatermarkBits]:
    """Return ``(payload_id, bits)`` for a built-in logo name or a bitmap path."""
    if entry in BUILTIN:
        return entry, BUILTIN[entry]()
    path = Path(entry)
    return path.stem, load_watermark(path)
