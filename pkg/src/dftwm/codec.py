"""Spread-spectrum embedding in the block DCT of the DFT magnitude, and blind extraction.

Each payload bit owns one 8x8 block of the magnitude plane.  Bit ``b`` adds
``gain * PN_b`` to the block's middle-band DCT coefficients; the image is then
rebuilt with the original phase.  Extraction re-derives the PN pair from the key
and picks, per block, the sequence with the higher Pearson correlation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dctn, idctn

from .errors import PayloadTooLarge, Unsatisfiable
from .image_model import GrayImage, RealPlane, WatermarkBits, from_plane, to_plane
from .keying import SecretKey, derive_pn_pair, keyed_permutation
from .metrics import psnr
from .spectral import (
    BLOCK,
    MidbandMask,
    Spectrum,
    check_blockable,
    decompose,
    from_blocks,
    midband_mask,
    reconstruct,
    to_blocks,
)

ASSIGNMENTS = ("raster", "keyed")

# calibrate_gain search settings
GAIN_BOUNDS = (1e-2, 1e7)
SEARCH_ITERATIONS = 60
PSNR_TOLERANCE_DB = 0.5
REFINE_STEPS = 40
REFINE_FACTOR = 0.985


@dataclass(frozen=True)
class EmbedParams:
    gain: float = 1.0
    mask: MidbandMask = field(default_factory=midband_mask)
    assignment: str = "raster"

    def __post_init__(self):
        if not math.isfinite(self.gain) or self.gain < 0:
            raise ValueError(f"gain must be a finite non-negative number, got {self.gain}")
        if self.assignment not in ASSIGNMENTS:
            raise ValueError(f"assignment must be one of {ASSIGNMENTS}, got {self.assignment!r}")
        if not isinstance(self.mask, MidbandMask):
            object.__setattr__(self, "mask", midband_mask(self.mask))

    def with_gain(self, gain: float) -> "EmbedParams":
        return EmbedParams(gain=gain, mask=self.mask, assignment=self.assignment)


@dataclass(frozen=True)
class EmbedOutcome:
    image: GrayImage
    psnr_db: float
    bits_embedded: int


def capacity(width: int, height: int) -> int:
    check_blockable(height, width)
    return (width // BLOCK) * (height // BLOCK)


def block_order(key: SecretKey, nblocks: int, assignment: str) -> np.ndarray:
    """Flat block indices in the order payload bits are assigned to them."""
    if assignment == "raster":
        return np.arange(nblocks)
    return keyed_permutation(key, nblocks)


def _check_payload(width: int, height: int, nbits: int) -> int:
    cap = capacity(width, height)
    if nbits > cap:
        raise PayloadTooLarge(f"payload of {nbits} bits exceeds capacity {cap} of a {width}x{height} image")
    return cap


def watermark_magnitude(magnitude: np.ndarray, bits: np.ndarray, key: SecretKey, params: EmbedParams) -> np.ndarray:
    """Add ``gain * PN_bit`` to the masked DCT coefficients of each payload block.

    Blocks without a payload bit are copied through untouched.
    """
    tiles = to_blocks(magnitude)
    bh, bw = tiles.shape[:2]
    flat = tiles.reshape(bh * bw, BLOCK, BLOCK)
    idx = block_order(key, bh * bw, params.assignment)[: bits.size]
    pn = derive_pn_pair(key, len(params.mask))

    coeffs = dctn(flat[idx], type=2, norm="ortho", axes=(1, 2))
    patterns = np.where(bits[:, None] == 1, pn.seq1[None, :], pn.seq0[None, :])
    coeffs[:, params.mask.rows, params.mask.cols] += params.gain * patterns

    out = flat.copy()
    out[idx] = idctn(coeffs, type=2, norm="ortho", axes=(1, 2))
    return from_blocks(out.reshape(bh, bw, BLOCK, BLOCK))


def embed_plane(host: GrayImage, wm: WatermarkBits, key: SecretKey, params: EmbedParams) -> RealPlane:
    """Watermarked image before 8-bit quantization."""
    _check_payload(host.width, host.height, wm.size)
    spec = decompose(to_plane(host))
    marked = watermark_magnitude(spec.magnitude.values, wm.flat(), key, params)
    return reconstruct(Spectrum(RealPlane(marked), spec.phase))


def embed(host: GrayImage, wm: WatermarkBits, key: SecretKey, params: EmbedParams) -> EmbedOutcome:
    image = from_plane(embed_plane(host, wm, key, params))
    return EmbedOutcome(image=image, psnr_db=psnr(host, image), bits_embedded=wm.size)


def _values(img) -> np.ndarray:
    if isinstance(img, RealPlane):
        return img.values
    return img.pixels.astype(np.float64)


def midband_coefficients(img: GrayImage | RealPlane, mask: MidbandMask) -> np.ndarray:
    """(n_blocks, L) masked DCT coefficients of the DFT magnitude, raster block order."""
    values = _values(img)
    check_blockable(*values.shape)
    magnitude = np.abs(np.fft.fft2(values))
    tiles = to_blocks(magnitude)
    flat = tiles.reshape(-1, BLOCK, BLOCK)
    coeffs = dctn(flat, type=2, norm="ortho", axes=(1, 2))
    return coeffs[:, mask.rows, mask.cols]


def block_correlations(coeffs: np.ndarray, seq: np.ndarray) -> np.ndarray:
    """Row-wise Pearson correlation with ``seq``; zero-variance rows give 0."""
    c = coeffs - coeffs.mean(axis=1, keepdims=True)
    s = seq - seq.mean()
    norms = np.sqrt(np.einsum("ij,ij->i", c, c)) * np.sqrt(np.dot(s, s))
    dots = c @ s
    out = np.zeros(len(coeffs))
    ok = norms > 0
    out[ok] = dots[ok] / norms[ok]
    return out


def extract(img: GrayImage | RealPlane, wm_width: int, wm_height: int, key: SecretKey,
            params: EmbedParams) -> WatermarkBits:
    """Blind extraction: needs only the marked image, payload shape, key and params.

    A :class:`RealPlane` (e.g. from :func:`embed_plane`) is accepted to inspect
    detection before 8-bit quantization.
    """
    nbits = wm_width * wm_height
    if nbits < 1:
        raise ValueError("payload dimensions must be positive")
    h, w = _values(img).shape
    _check_payload(w, h, nbits)
    coeffs = midband_coefficients(img, params.mask)
    idx = block_order(key, len(coeffs), params.assignment)[:nbits]
    pn = derive_pn_pair(key, len(params.mask))
    corr0 = block_correlations(coeffs[idx], pn.seq0)
    corr1 = block_correlations(coeffs[idx], pn.seq1)
    # ties (including degenerate blocks) resolve to 0
    bits = (corr1 > corr0).astype(np.uint8)
    return WatermarkBits.from_flat(bits, wm_width, wm_height)


def calibrate_gain(
    host: GrayImage,
    wm: WatermarkBits,
    key: SecretKey,
    target_psnr_db: float,
    params: EmbedParams | None = None,
    *,
    require_perfect: bool = True,
    bounds: tuple[float, float] = GAIN_BOUNDS,
    iterations: int = SEARCH_ITERATIONS,
    tolerance_db: float = PSNR_TOLERANCE_DB,
) -> float:
    """Largest gain whose embed PSNR is within ``tolerance_db`` of the target.

    With ``require_perfect`` the gain must also give error-free extraction
    without attack; the search then walks down from the PSNR boundary through
    the tolerance window.  Raises :class:`Unsatisfiable` when no gain qualifies.
    """
    if not 30.0 <= target_psnr_db <= 80.0:
        raise Unsatisfiable(f"target PSNR {target_psnr_db} dB outside the supported range [30, 80]")
    params = params or EmbedParams()
    _check_payload(host.width, host.height, wm.size)
    floor, ceiling = target_psnr_db - tolerance_db, target_psnr_db + tolerance_db

    def run(k: float) -> EmbedOutcome:
        return embed(host, wm, key, params.with_gain(k))

    lo, hi = bounds
    if run(lo).psnr_db < floor:
        raise Unsatisfiable(f"even gain {lo} gives PSNR below {floor:.2f} dB")
    if run(hi).psnr_db >= floor:
        best = hi
    else:
        llo, lhi = math.log(lo), math.log(hi)
        for _ in range(iterations):
            mid = 0.5 * (llo + lhi)
            if run(math.exp(mid)).psnr_db >= floor:
                llo = mid
            else:
                lhi = mid
        best = math.exp(llo)

    k = best
    for _ in range(REFINE_STEPS if require_perfect else 1):
        outcome = run(k)
        if outcome.psnr_db > ceiling:
            break
        if outcome.psnr_db >= floor:
            if not require_perfect:
                return k
            got = extract(outcome.image, wm.width, wm.height, key, params)
            if np.array_equal(got.bits, wm.bits):
                return k
        k *= REFINE_FACTOR
    if require_perfect:
        raise Unsatisfiable(
            f"no gain within {tolerance_db} dB of {target_psnr_db} dB extracts the payload without error"
        )
    raise Unsatisfiable(f"no gain lands within {tolerance_db} dB of {target_psnr_db} dB")
