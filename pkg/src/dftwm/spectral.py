"""DFT magnitude/phase split, orthonormal 8x8 block DCT, middle-band masks.

Forward DFT is unnormalized and the inverse carries 1/(W*H).  The magnitude
plane is tiled in its natural layout (DC at (0, 0), no fftshift).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.fft import dctn, idctn

from .errors import DimensionMismatch, DimensionNotMultipleOf8, InvalidMask
from .image_model import RealPlane

BLOCK = 8


@dataclass(frozen=True, eq=False)
class Spectrum:
    magnitude: RealPlane
    phase: RealPlane

    def __post_init__(self):
        if self.magnitude.shape != self.phase.shape:
            raise DimensionMismatch(
                f"magnitude {self.magnitude.shape} and phase {self.phase.shape} differ"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.magnitude.shape


def _values(plane) -> np.ndarray:
    return plane.values if isinstance(plane, RealPlane) else np.asarray(plane, dtype=np.float64)


def decompose(plane: RealPlane) -> Spectrum:
    field = np.fft.fft2(_values(plane))
    return Spectrum(RealPlane(np.abs(field)), RealPlane(np.angle(field)))


def reconstruct(spec: Spectrum) -> RealPlane:
    """Inverse DFT of ``M * exp(j*phi)``; the imaginary residue is dropped.

    A blockwise-modified magnitude is no longer Hermitian symmetric, so the
    inverse transform is complex in general.
    """
    field = spec.magnitude.values * np.exp(1j * spec.phase.values)
    return RealPlane(np.fft.ifft2(field).real)


def _check_block(block: np.ndarray) -> np.ndarray:
    block = np.asarray(block, dtype=np.float64)
    if block.shape != (BLOCK, BLOCK):
        raise DimensionMismatch(f"expected an 8x8 block, got {block.shape}")
    return block


def dct2_block(block) -> np.ndarray:
    return dctn(_check_block(block), type=2, norm="ortho")


def idct2_block(coeffs) -> np.ndarray:
    return idctn(_check_block(coeffs), type=2, norm="ortho")


def check_blockable(height: int, width: int) -> None:
    if height % BLOCK or width % BLOCK:
        raise DimensionNotMultipleOf8(f"{width}x{height} is not a multiple of {BLOCK} in both dimensions")


def to_blocks(values: np.ndarray) -> np.ndarray:
    """View an (H, W) array as (H/8, W/8, 8, 8) tiles in raster block order."""
    h, w = values.shape
    check_blockable(h, w)
    return values.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK).swapaxes(1, 2)


def from_blocks(tiles: np.ndarray) -> np.ndarray:
    bh, bw = tiles.shape[:2]
    return tiles.swapaxes(1, 2).reshape(bh * BLOCK, bw * BLOCK)


def blockwise_dct(plane) -> RealPlane:
    tiles = to_blocks(_values(plane))
    return RealPlane(from_blocks(dctn(tiles, type=2, norm="ortho", axes=(2, 3))))


def blockwise_idct(plane) -> RealPlane:
    tiles = to_blocks(_values(plane))
    return RealPlane(from_blocks(idctn(tiles, type=2, norm="ortho", axes=(2, 3))))


def zigzag_order(n: int = BLOCK) -> list[tuple[int, int]]:
    """Standard JPEG zig-zag scan of an n x n block as (row, col) pairs."""
    order = []
    for s in range(2 * n - 1):
        diag = [(r, s - r) for r in range(n) if 0 <= s - r < n]
        # even anti-diagonals run bottom-left to top-right
        order.extend(reversed(diag) if s % 2 == 0 else diag)
    return order


DEFAULT_BAND = (9, 30)


@dataclass(frozen=True)
class MidbandMask:
    positions: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pos = tuple((int(r), int(c)) for r, c in self.positions)
        if len(pos) < 2 or len(pos) > 62:
            raise InvalidMask(f"mask length must be in [2, 62], got {len(pos)}")
        if len(set(pos)) != len(pos):
            raise InvalidMask("mask contains duplicate positions")
        for r, c in pos:
            if not (0 <= r < BLOCK and 0 <= c < BLOCK):
                raise InvalidMask(f"position {(r, c)} outside the 8x8 block")
        if (0, 0) in pos:
            raise InvalidMask("mask must not include the DC coefficient (0, 0)")
        object.__setattr__(self, "positions", pos)

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def rows(self) -> np.ndarray:
        return np.array([p[0] for p in self.positions])

    @property
    def cols(self) -> np.ndarray:
        return np.array([p[1] for p in self.positions])


def midband_mask(profile: str | Sequence[tuple[int, int]] | Iterable = "default") -> MidbandMask:
    """Return a middle-band mask.

    ``profile`` is ``"default"`` (zig-zag indices 9..30), ``"zigzag:A-B"`` for an
    inclusive zig-zag slice, or an explicit sequence of (row, col) pairs.
    """
    if isinstance(profile, MidbandMask):
        return profile
    if isinstance(profile, str):
        if profile == "default":
            lo, hi = DEFAULT_BAND
        elif profile.startswith("zigzag:"):
            try:
                lo, hi = (int(x) for x in profile[len("zigzag:"):].split("-"))
            except ValueError:
                raise InvalidMask(f"bad zig-zag profile {profile!r}") from None
            if not 0 <= lo <= hi < BLOCK * BLOCK:
                raise InvalidMask(f"zig-zag range {lo}-{hi} outside 0..63")
        else:
            raise InvalidMask(f"unknown mask profile {profile!r}")
        return MidbandMask(tuple(zigzag_order()[lo:hi + 1]))
    try:
        positions = tuple(tuple(p) for p in profile)
    except TypeError:
        raise InvalidMask(f"cannot interpret {profile!r} as a position list") from None
    if any(len(p) != 2 for p in positions):
        raise InvalidMask("each mask position must be a (row, col) pair")
    return MidbandMask(positions)
