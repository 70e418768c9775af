"""Blind watermarking of grayscale images in the block DCT of the DFT magnitude."""

from .codec import EmbedOutcome, EmbedParams, calibrate_gain, capacity, embed, extract
from .image_model import (
    GrayImage,
    RealPlane,
    WatermarkBits,
    from_plane,
    load_image,
    load_watermark,
    save_image,
    save_watermark,
    to_plane,
)
from .keying import PnPair, SecretKey, derive_pn_pair, pearson
from .metrics import EvalReport, ber, mse, nc, psnr
from .spectral import MidbandMask, Spectrum, midband_mask

__version__ = "0.1.0"
