"""Grayscale images, real-valued planes and binary payloads.

Pixels stay on their native 0..255 scale everywhere; a :class:`RealPlane` built
from an image holds the same numbers as floats.  Arrays are stored ``(height,
width)`` in row-major order and are frozen after construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import NonFiniteValue, NotGrayscale, UnsupportedFormat

MIN_SIDE = 8

_IMAGE_SUFFIXES = {".pgm": "PPM", ".png": "PNG"}
_WATERMARK_SUFFIXES = {".pbm": "PPM", ".pgm": "PPM", ".png": "PNG"}


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True, order="C")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale raster."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D pixel array, got shape {arr.shape}")
        if arr.shape[0] < MIN_SIDE or arr.shape[1] < MIN_SIDE:
            raise ValueError(f"image must be at least {MIN_SIDE}x{MIN_SIDE}, got {arr.shape[1]}x{arr.shape[0]}")
        if arr.dtype != np.uint8:
            if np.issubdtype(arr.dtype, np.floating) and not np.all(np.isfinite(arr)):
                raise NonFiniteValue("pixel array contains NaN/Inf")
            if arr.size and (arr.min() < 0 or arr.max() > 255 or np.any(arr != np.round(arr))):
                raise ValueError("pixels must be integers in [0, 255]")
        object.__setattr__(self, "pixels", _frozen(arr, np.uint8))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.pixels, other.pixels))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class RealPlane:
    """Double-precision plane used for pixel, magnitude and phase math."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue("plane contains NaN/Inf")
        object.__setattr__(self, "values", _frozen(arr, np.float64))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True, eq=False)
class WatermarkBits:
    """Rectangular binary payload, every element 0 or 1."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"expected a non-empty 2-D bit array, got shape {arr.shape}")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("watermark bits must be exactly 0 or 1")
        object.__setattr__(self, "bits", _frozen(arr, np.uint8))

    @classmethod
    def from_flat(cls, flat, width: int, height: int) -> "WatermarkBits":
        return cls(np.asarray(flat, dtype=np.uint8).reshape(height, width))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def size(self) -> int:
        return self.bits.size

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape

    def flat(self) -> np.ndarray:
        return self.bits.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, WatermarkBits):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.bits, other.bits))

    __hash__ = None


def to_plane(img: GrayImage) -> RealPlane:
    return RealPlane(img.pixels.astype(np.float64))


def round_half_away(values: np.ndarray) -> np.ndarray:
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def from_plane(plane: RealPlane | np.ndarray) -> GrayImage:
    """Quantize a real plane to 8 bits: round half away from zero, then clip."""
    values = plane.values if isinstance(plane, RealPlane) else np.asarray(plane, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue("cannot quantize a plane containing NaN/Inf")
    return GrayImage(np.clip(round_half_away(values), 0, 255).astype(np.uint8))


def _open(path) -> Image.Image:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    try:
        im = Image.open(path)
        im.load()
    except Exception as exc:  # Pillow raises a zoo of types for bad files
        raise UnsupportedFormat(f"{path}: {exc}") from exc
    return im


def load_image(path) -> GrayImage:
    im = _open(path)
    if im.format not in ("PPM", "PNG"):
        raise UnsupportedFormat(f"{path}: format {im.format} not supported (PGM or PNG only)")
    if im.mode in ("RGB", "RGBA", "CMYK", "YCbCr", "P", "LAB", "HSV"):
        raise NotGrayscale(f"{path}: mode {im.mode} is not single-channel grayscale")
    if im.mode == "1":
        im = im.convert("L")
    if im.mode != "L":
        raise UnsupportedFormat(f"{path}: mode {im.mode} (only 8-bit grayscale is supported)")
    return GrayImage(np.asarray(im, dtype=np.uint8))


def _suffix_format(path: Path, table: dict) -> str:
    fmt = table.get(path.suffix.lower())
    if fmt is None:
        raise UnsupportedFormat(f"{path}: unsupported extension (expected one of {sorted(table)})")
    return fmt


def save_image(img: GrayImage, path) -> None:
    path = Path(path)
    fmt = _suffix_format(path, _IMAGE_SUFFIXES)
    Image.fromarray(np.ascontiguousarray(img.pixels), mode="L").save(path, format=fmt)


def load_watermark(path) -> WatermarkBits:
    """Load a PBM bitmap or 8-bit grayscale image; nonzero pixels become bit 1."""
    im = _open(path)
    if im.format not in ("PPM", "PNG"):
        raise UnsupportedFormat(f"{path}: format {im.format} not supported for watermarks")
    if im.mode == "1":
        arr = np.asarray(im, dtype=bool)
    elif im.mode == "L":
        arr = np.asarray(im) > 0
    else:
        raise UnsupportedFormat(f"{path}: watermark mode {im.mode} is not a binary or grayscale bitmap")
    return WatermarkBits(arr.astype(np.uint8))


def save_watermark(wm: WatermarkBits, path) -> None:
    """Write a payload; ``.pbm`` gives a P4 bitmap, ``.pgm``/``.png`` an 8-bit 0/255 image."""
    path = Path(path)
    fmt = _suffix_format(path, _WATERMARK_SUFFIXES)
    if path.suffix.lower() == ".pbm":
        im = Image.fromarray(wm.bits.astype(bool))
    else:
        im = Image.fromarray((wm.bits * 255).astype(np.uint8), mode="L")
    im.save(path, format=fmt)
