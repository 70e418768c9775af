"""Benchmark harness: embed once per (image, payload), then attack, extract and score.

Each cell gets its own noise seed derived from the config seed and the cell's
labels, so rows never depend on which other cells are in the grid.  Rows are
sorted by (image_id, payload_id, attack_spec) before writing.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .attacks import apply_attack, format_attack
from .codec import EmbedParams, calibrate_gain, embed, extract
from .config import BenchConfig
from .errors import WatermarkError
from .fixtures import resolve_images
from .metrics import EvalReport, ber, nc, psnr
from .payloads import resolve_payload
from .spectral import midband_mask

log = logging.getLogger(__name__)

COLUMNS = [
    "image_id",
    "payload_id",
    "attack_spec",
    "psnr_host_db",
    "psnr_watermarked_db",
    "nc",
    "ber",
    "gain",
    "key_fingerprint",
    "seed",
    "error",
]
NO_ATTACK = "none"
MEAN_ID = "mean"
_FLOAT_COLUMNS = ("psnr_host_db", "psnr_watermarked_db", "nc", "ber", "gain")


def cell_seed(seed: int, image_id: str, payload_id: str, attack: str) -> int:
    digest = hashlib.sha256(f"{seed}|{image_id}|{payload_id}|{attack}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _score(wm, extracted) -> tuple[float, float]:
    value = nc(wm, extracted) if wm.bits.any() else float("nan")
    return value, ber(wm, extracted)


def _run_pair(host, payload_entry: str, config: BenchConfig, fingerprint: str) -> list[EvalReport]:
    payload_id, wm = resolve_payload(payload_entry)
    image_id = host.id
    base = EmbedParams(gain=0.0, mask=midband_mask(config.mask), assignment=config.assignment)
    nan = float("nan")

    def failed(attack: str, gain: float, exc: Exception) -> EvalReport:
        return EvalReport(image_id, payload_id, attack, nan, nan, nan, nan, gain, fingerprint, config.seed,
                          error=f"{type(exc).__name__}: {exc}")

    try:
        img = host.load()
        if isinstance(config.gain, str):
            target = float(config.gain.split(":", 1)[1])
            gain = calibrate_gain(img, wm, config.key, target, base)
        else:
            gain = float(config.gain)
        params = replace(base, gain=gain)
        outcome = embed(img, wm, config.key, params)
    except WatermarkError as exc:
        gain = nan if isinstance(config.gain, str) else float(config.gain)
        return [failed(NO_ATTACK, gain, exc)] + [failed(format_attack(a), gain, exc) for a in config.attacks]

    marked = outcome.image
    value, rate = _score(wm, extract(marked, wm.width, wm.height, config.key, params))
    rows = [EvalReport(image_id, payload_id, NO_ATTACK, outcome.psnr_db, math.inf, value, rate, gain,
                       fingerprint, config.seed)]
    for spec in config.attacks:
        text = format_attack(spec)
        try:
            attacked = apply_attack(marked, spec, cell_seed(config.seed, image_id, payload_id, text))
            value, rate = _score(wm, extract(attacked, wm.width, wm.height, config.key, params))
            rows.append(EvalReport(image_id, payload_id, text, psnr(img, attacked), psnr(marked, attacked),
                                   value, rate, gain, fingerprint, config.seed))
        except WatermarkError as exc:
            rows.append(failed(text, gain, exc))
    return rows


def _mean(values: list[float]) -> float:
    values = [v for v in values if not math.isnan(v)]
    if not values:
        return float("nan")
    if any(math.isinf(v) for v in values):
        return math.inf
    return float(np.mean(values))


def average_rows(rows: list[EvalReport]) -> list[EvalReport]:
    """One row per (payload, attack) averaging every image without an error."""
    groups: dict[tuple[str, str], list[EvalReport]] = {}
    for r in rows:
        if not r.error:
            groups.setdefault((r.payload_id, r.attack_spec), []).append(r)
    out = []
    for (payload_id, attack), members in groups.items():
        first = members[0]
        out.append(EvalReport(
            MEAN_ID, payload_id, attack,
            _mean([m.psnr_host_db for m in members]),
            _mean([m.psnr_watermarked_db for m in members]),
            _mean([m.nc for m in members]),
            _mean([m.ber for m in members]),
            _mean([m.gain for m in members]),
            first.key_fingerprint, first.seed,
        ))
    return out


def run_bench(config: BenchConfig, jobs: int = 1) -> list[EvalReport]:
    config.validate()
    hosts = resolve_images(config.images, config.fixtures)
    fingerprint = config.key.fingerprint()
    pairs = [(h, p) for h in hosts for p in config.payloads]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(lambda hp: _run_pair(hp[0], hp[1], config, fingerprint), pairs))
    else:
        chunks = [_run_pair(h, p, config, fingerprint) for h, p in pairs]
    rows = [r for chunk in chunks for r in chunk]
    if config.average:
        rows += average_rows(rows)
    rows.sort(key=lambda r: (r.image_id, r.payload_id, r.attack_spec))
    return rows


def _csv_value(name: str, value) -> str:
    if name in _FLOAT_COLUMNS:
        if math.isnan(value):
            return ""
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(float(value))
    return str(value)


def rows_to_csv(rows: list[EvalReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in rows:
        d = r.as_dict()
        writer.writerow([_csv_value(c, d[c]) for c in COLUMNS])
    return buf.getvalue()


def rows_to_json(rows: list[EvalReport]) -> str:
    """JSON rows; infinite PSNRs become ``null`` with a ``<column>_inf`` flag."""
    out = []
    for r in rows:
        d = r.as_dict()
        item = {}
        for c in COLUMNS:
            v = d[c]
            if c in _FLOAT_COLUMNS:
                finite = not (math.isnan(v) or math.isinf(v))
                item[c] = float(v) if finite else None
                if c.startswith("psnr"):
                    item[f"{c}_inf"] = math.isinf(v)
            else:
                item[c] = v
        out.append(item)
    return json.dumps({"columns": COLUMNS, "rows": out}, indent=2) + "\n"


def write_report(rows: list[EvalReport], path, fmt: str = "csv") -> None:
    text = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
    Path(path).write_text(text)
