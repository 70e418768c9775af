"""Image fidelity (MSE, PSNR) and payload agreement (NC, BER)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateReference, DimensionMismatch
from .image_model import GrayImage, WatermarkBits

MAX_PIXEL = 255.0


def _same_shape(a, b) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch: {a.shape} vs {b.shape}")


def mse(a: GrayImage, b: GrayImage) -> float:
    _same_shape(a, b)
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(a: GrayImage, b: GrayImage) -> float:
    """PSNR in dB with MAX=255; ``math.inf`` for identical images."""
    err = mse(a, b)
    if err == 0:
        return math.inf
    return 10.0 * math.log10(MAX_PIXEL ** 2 / err)


def nc(w: WatermarkBits, w2: WatermarkBits) -> float:
    """Normalized correlation of a reference payload ``w`` and an extracted ``w2``.

    The numerator squares each elementwise product, which for {0,1} payloads is
    the plain product, so this is the classic NC on binary logos.
    """
    _same_shape(w, w2)
    a = w.bits.astype(np.float64)
    b = w2.bits.astype(np.float64)
    ref = float(np.sum(a * a))
    if ref == 0:
        raise DegenerateReference("reference watermark is all zero")
    other = float(np.sum(b * b))
    if other == 0:
        return 0.0
    # one sqrt of the product keeps nc(w, w) exactly 1 for integer energies
    return float(np.sum((a * b) ** 2)) / math.sqrt(ref * other)


def ber(w: WatermarkBits, w2: WatermarkBits) -> float:
    _same_shape(w, w2)
    return float(np.mean(w.bits != w2.bits))


@dataclass(frozen=True)
class EvalReport:
    """Outcome of one (image, payload, attack) benchmark cell."""

    image_id: str
    payload_id: str
    attack_spec: str
    psnr_host_db: float
    psnr_watermarked_db: float
    nc: float
    ber: float
    gain: float
    key_fingerprint: str
    seed: int
    error: str = ""

    def as_dict(self) -> dict:
        return asdict(self)
