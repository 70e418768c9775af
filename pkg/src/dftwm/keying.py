"""Secret keys, keyed bipolar PN sequence pairs and Pearson correlation.

The keyed stream is SHA-256 in counter mode over ``(domain, key, length,
attempt, block)``; its outputs are frozen in the test-suite golden fixtures, so
changing the construction breaks extraction of previously marked images.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, LengthTooSmall

UNCORRELATED_BOUND = 0.3
# bipolar pairs of length 2 or 3 only reach |pearson| in {0.5, 1}
MIN_PN_LENGTH = 4
MAX_ATTEMPTS = 10_000
FINGERPRINT_SALT_ENV = "DFTWM_FINGERPRINT_SALT"


@dataclass(frozen=True)
class SecretKey:
    data: bytes

    def __post_init__(self):
        if not isinstance(self.data, (bytes, bytearray)):
            raise TypeError("key data must be bytes")
        if len(self.data) == 0:
            raise ValueError("secret key must be non-empty")
        object.__setattr__(self, "data", bytes(self.data))

    @classmethod
    def from_passphrase(cls, text: str) -> "SecretKey":
        return cls(text.encode("utf-8"))

    @classmethod
    def from_hex(cls, text: str) -> "SecretKey":
        text = text.strip()
        if text.lower().startswith("0x"):
            text = text[2:]
        try:
            return cls(bytes.fromhex(text))
        except ValueError:
            raise ValueError(f"invalid hex key {text!r}") from None

    @classmethod
    def from_seed(cls, seed: int) -> "SecretKey":
        return cls(struct.pack(">Q", seed & 0xFFFFFFFFFFFFFFFF))

    def fingerprint(self, salt: str | None = None) -> str:
        """First 8 hex digits of a salted key hash, safe to print in reports."""
        if salt is None:
            salt = os.environ.get(FINGERPRINT_SALT_ENV, "")
        return hashlib.sha256(salt.encode("utf-8") + b"\x00" + self.data).hexdigest()[:8]


def keyed_stream(key: SecretKey, domain: bytes, *fields: int, nbytes: int) -> bytes:
    """Deterministic byte stream bound to ``key``, a domain tag and integer fields."""
    prefix = struct.pack(">I", len(domain)) + domain + struct.pack(">I", len(key.data)) + key.data
    prefix += b"".join(struct.pack(">Q", f) for f in fields)
    out = bytearray()
    block = 0
    while len(out) < nbytes:
        out += hashlib.sha256(prefix + struct.pack(">Q", block)).digest()
        block += 1
    return bytes(out[:nbytes])


def _bipolar(stream: bytes, length: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(stream, dtype=np.uint8))[:length]
    return np.where(bits == 1, 1.0, -1.0)


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise ValueError("pearson needs at least 2 samples")
    da = a - a.mean()
    db = b - b.mean()
    na = np.sqrt(np.dot(da, da))
    nb = np.sqrt(np.dot(db, db))
    if na == 0 or nb == 0:
        raise DegenerateInput("constant vector has zero variance")
    return float(np.clip(np.dot(da, db) / (na * nb), -1.0, 1.0))


@dataclass(frozen=True, eq=False)
class PnPair:
    seq0: np.ndarray
    seq1: np.ndarray

    def __post_init__(self):
        for name in ("seq0", "seq1"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if not np.all(np.abs(arr) == 1):
                raise ValueError(f"{name} must be bipolar")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.seq0.shape != self.seq1.shape or self.seq0.ndim != 1:
            raise ValueError("PN sequences must be 1-D with equal length")

    @property
    def length(self) -> int:
        return self.seq0.size

    def for_bit(self, bit: int) -> np.ndarray:
        return self.seq1 if bit else self.seq0

    def __eq__(self, other):
        if not isinstance(other, PnPair):
            return NotImplemented
        return bool(np.array_equal(self.seq0, other.seq0) and np.array_equal(self.seq1, other.seq1))

    __hash__ = None


def derive_pn_pair(key: SecretKey, length: int) -> PnPair:
    """Two bipolar sequences of ``length`` with |pearson| below 0.3.

    Candidates are drawn with an incrementing attempt counter until the bound
    holds; constant candidates are skipped.
    """
    if length < MIN_PN_LENGTH:
        raise LengthTooSmall(f"PN length must be >= {MIN_PN_LENGTH}, got {length}")
    nbytes = (length + 7) // 8
    for attempt in range(MAX_ATTEMPTS):
        seq0 = _bipolar(keyed_stream(key, b"pn", length, attempt, 0, nbytes=nbytes), length)
        seq1 = _bipolar(keyed_stream(key, b"pn", length, attempt, 1, nbytes=nbytes), length)
        try:
            r = pearson(seq0, seq1)
        except DegenerateInput:
            continue
        if abs(r) < UNCORRELATED_BOUND:
            return PnPair(seq0, seq1)
    raise RuntimeError(f"no uncorrelated PN pair found in {MAX_ATTEMPTS} attempts")  # pragma: no cover


def keyed_permutation(key: SecretKey, n: int) -> np.ndarray:
    """Key-dependent permutation of ``range(n)``, stable across numpy versions."""
    stream = keyed_stream(key, b"perm", n, nbytes=8 * n)
    ranks = np.frombuffer(stream, dtype=">u8")
    return np.argsort(ranks, kind="stable")
