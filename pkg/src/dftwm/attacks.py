"""Seedable attack suite: JPEG, Gaussian/salt-and-pepper noise, Gaussian filter, histogram equalization.

Noise parameters are given on the normalized [0, 1] intensity scale (imnoise
convention) and converted to 0..255 units here.  Every attack keeps the image
size and is a pure function of (image, spec, seed).

Specs have a compact text form::

    jpeg:q=75
    gauss-noise:var=0.001,mean=0,seed=7
    sp:d=0.01,seed=7
    gauss-filter:w=3,sigma=0.5,border=reflect
    histeq
    histeq+gauss-noise:var=0.001        (composite, applied left to right)
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from PIL import Image
from scipy.ndimage import correlate1d

from .errors import CodecFailure, InvalidSpec
from .image_model import GrayImage, from_plane, round_half_away

MAX_COMPOSITE_DEPTH = 4
BORDERS = {"reflect": "reflect", "replicate": "nearest", "zero": "constant"}


def _fmt(x: float) -> str:
    return format(x, "g")


@dataclass(frozen=True)
class JpegCompress:
    quality: int
    seed: Optional[int] = None

    def validate(self):
        if isinstance(self.quality, bool) or not isinstance(self.quality, int) or not 1 <= self.quality <= 100:
            raise InvalidSpec(f"JPEG quality must be an integer in [1, 100], got {self.quality!r}")

    def to_text(self) -> str:
        return f"jpeg:q={self.quality}"


@dataclass(frozen=True)
class GaussianNoise:
    variance: float
    mean: float = 0.0
    seed: Optional[int] = None

    def validate(self):
        if not (math.isfinite(self.variance) and self.variance >= 0):
            raise InvalidSpec(f"noise variance must be finite and >= 0, got {self.variance!r}")
        if not math.isfinite(self.mean):
            raise InvalidSpec(f"noise mean must be finite, got {self.mean!r}")

    def to_text(self) -> str:
        text = f"gauss-noise:var={_fmt(self.variance)}"
        if self.mean:
            text += f",mean={_fmt(self.mean)}"
        if self.seed is not None:
            text += f",seed={self.seed}"
        return text


@dataclass(frozen=True)
class SaltPepper:
    density: float
    seed: Optional[int] = None

    def validate(self):
        if not (math.isfinite(self.density) and 0.0 <= self.density <= 1.0):
            raise InvalidSpec(f"salt & pepper density must lie in [0, 1], got {self.density!r}")

    def to_text(self) -> str:
        text = f"sp:d={_fmt(self.density)}"
        if self.seed is not None:
            text += f",seed={self.seed}"
        return text


@dataclass(frozen=True)
class GaussianFilter:
    window: int
    sigma: float
    border: str = "reflect"
    seed: Optional[int] = None

    def validate(self):
        if isinstance(self.window, bool) or not isinstance(self.window, int) or self.window < 3 or self.window % 2 == 0:
            raise InvalidSpec(f"filter window must be an odd integer >= 3, got {self.window!r}")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidSpec(f"filter sigma must be > 0, got {self.sigma!r}")
        if self.border not in BORDERS:
            raise InvalidSpec(f"border must be one of {sorted(BORDERS)}, got {self.border!r}")

    def to_text(self) -> str:
        text = f"gauss-filter:w={self.window},sigma={_fmt(self.sigma)}"
        if self.border != "reflect":
            text += f",border={self.border}"
        return text


@dataclass(frozen=True)
class HistEq:
    seed: Optional[int] = None

    def validate(self):
        pass

    def to_text(self) -> str:
        return "histeq"


@dataclass(frozen=True)
class Composite:
    members: tuple
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))

    def depth(self) -> int:
        return 1 + max((m.depth() for m in self.members if isinstance(m, Composite)), default=0)

    def validate(self):
        if not self.members:
            raise InvalidSpec("composite attack needs at least one member")
        if self.depth() > MAX_COMPOSITE_DEPTH:
            raise InvalidSpec(f"composite nesting deeper than {MAX_COMPOSITE_DEPTH}")
        for m in self.members:
            m.validate()

    def to_text(self) -> str:
        return "+".join(m.to_text() for m in self.members)


AttackSpec = Union[JpegCompress, GaussianNoise, SaltPepper, GaussianFilter, HistEq, Composite]


# -- text form ---------------------------------------------------------------

_KINDS = {
    "jpeg": (JpegCompress, {"q": ("quality", int), "quality": ("quality", int)}),
    "gauss-noise": (
        GaussianNoise,
        {"var": ("variance", float), "mean": ("mean", float), "seed": ("seed", int)},
    ),
    "sp": (SaltPepper, {"d": ("density", float), "density": ("density", float), "seed": ("seed", int)}),
    "gauss-filter": (
        GaussianFilter,
        {"w": ("window", int), "sigma": ("sigma", float), "border": ("border", str)},
    ),
    "histeq": (HistEq, {}),
}


def _parse_one(text: str) -> AttackSpec:
    name, _, args = text.strip().partition(":")
    name = name.strip().lower()
    if name not in _KINDS:
        raise InvalidSpec(f"unknown attack kind {name!r} in {text!r}")
    cls, fields = _KINDS[name]
    kwargs = {}
    for item in filter(None, (a.strip() for a in args.split(","))):
        key, eq, value = item.partition("=")
        key = key.strip().lower()
        if not eq or key not in fields:
            raise InvalidSpec(f"unexpected parameter {item!r} for {name}")
        attr, conv = fields[key]
        try:
            kwargs[attr] = conv(value.strip())
        except ValueError:
            raise InvalidSpec(f"bad value {value!r} for {key} in {text!r}") from None
    try:
        spec = cls(**kwargs)
    except TypeError:
        raise InvalidSpec(f"missing parameters for {name} in {text!r}") from None
    spec.validate()
    return spec


def parse_attack(text: str) -> AttackSpec:
    """Parse the compact text form; ``+`` joins members of a composite."""
    if not text or not text.strip():
        raise InvalidSpec("empty attack spec")
    parts = text.split("+")
    if any(not p.strip() for p in parts):
        raise InvalidSpec(f"empty composite member in {text!r}")
    specs = [_parse_one(p) for p in parts]
    return specs[0] if len(specs) == 1 else Composite(tuple(specs))


def format_attack(spec: AttackSpec) -> str:
    return spec.to_text()


# -- operations --------------------------------------------------------------

def _rng(seed: int) -> np.random.Generator:
    # Philox is counter-based; one draw call per image keeps the stream layout fixed
    return np.random.Generator(np.random.Philox(seed & 0xFFFFFFFFFFFFFFFF))


def jpeg_compress(img: GrayImage, quality: int) -> GrayImage:
    """Baseline JPEG round trip through libjpeg with IJG quality scaling."""
    JpegCompress(quality).validate()
    buf = io.BytesIO()
    try:
        Image.fromarray(np.ascontiguousarray(img.pixels), mode="L").save(
            buf, format="JPEG", quality=quality, optimize=False, progressive=False
        )
        buf.seek(0)
        with Image.open(buf) as decoded:
            out = np.asarray(decoded.convert("L"), dtype=np.uint8)
    except Exception as exc:
        raise CodecFailure(f"JPEG round trip failed: {exc}") from exc
    return GrayImage(out)


def gaussian_noise(img: GrayImage, mean: float, variance: float, seed: int) -> GrayImage:
    GaussianNoise(variance, mean).validate()
    z = _rng(seed).standard_normal(img.shape)
    noisy = img.pixels.astype(np.float64) + 255.0 * mean + 255.0 * math.sqrt(variance) * z
    return from_plane(noisy)


def salt_pepper(img: GrayImage, density: float, seed: int) -> GrayImage:
    SaltPepper(density).validate()
    rng = _rng(seed)
    hit = rng.random(img.shape) < density
    salt = rng.random(img.shape) < 0.5
    out = img.pixels.copy()
    out[hit & salt] = 255
    out[hit & ~salt] = 0
    return GrayImage(out)


def gaussian_kernel(window: int, sigma: float) -> np.ndarray:
    r = window // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_filter(img: GrayImage, window: int, sigma: float, border: str = "reflect") -> GrayImage:
    """Separable Gaussian low-pass truncated to ``window`` taps, kernel sum 1.

    ``reflect`` mirrors the edge pixel (d c b a | a b c d); ``replicate`` repeats
    it; ``zero`` pads with black.
    """
    GaussianFilter(window, sigma, border).validate()
    k = gaussian_kernel(window, sigma)
    mode = BORDERS[border]
    x = img.pixels.astype(np.float64)
    x = correlate1d(x, k, axis=0, mode=mode, cval=0.0)
    x = correlate1d(x, k, axis=1, mode=mode, cval=0.0)
    return from_plane(x)


def hist_eq(img: GrayImage) -> GrayImage:
    """Global 256-bin histogram equalization with min-cdf normalization."""
    hist = np.bincount(img.pixels.ravel(), minlength=256)
    cdf = np.cumsum(hist)
    total = cdf[-1]
    cdf_min = cdf[np.flatnonzero(hist)[0]]
    if total == cdf_min:
        return img
    lut = round_half_away((cdf - cdf_min) / (total - cdf_min) * 255.0)
    lut = np.clip(lut, 0, 255).astype(np.uint8)
    return GrayImage(lut[img.pixels])


def apply_attack(img: GrayImage, spec: AttackSpec, seed: Optional[int] = None) -> GrayImage:
    """Apply ``spec``; ``seed`` is used by stochastic members that carry no seed of their own."""
    spec.validate()
    if isinstance(spec, Composite):
        out = img
        for member in spec.members:
            out = apply_attack(out, member, spec.seed if spec.seed is not None else seed)
        return out
    effective = spec.seed if spec.seed is not None else (seed if seed is not None else 0)
    if isinstance(spec, JpegCompress):
        return jpeg_compress(img, spec.quality)
    if isinstance(spec, GaussianNoise):
        return gaussian_noise(img, spec.mean, spec.variance, effective)
    if isinstance(spec, SaltPepper):
        return salt_pepper(img, spec.density, effective)
    if isinstance(spec, GaussianFilter):
        return gaussian_filter(img, spec.window, spec.sigma, spec.border)
    if isinstance(spec, HistEq):
        return hist_eq(img)
    raise InvalidSpec(f"unknown attack spec {spec!r}")
