"""dftwm command line: embed, extract, attack, metrics, bench, calibrate, fetch-fixtures.

Every command that draws random numbers takes ``--seed``.  Noise attack
parameters are on the normalized [0, 1] intensity scale: ``var=0.001`` means a
standard deviation of about 8 gray levels.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .attacks import apply_attack, parse_attack
from .bench import run_bench, write_report
from .codec import EmbedParams, calibrate_gain, embed, extract
from .config import (
    PRESETS,
    BenchConfig,
    default_params,
    expand_attacks,
    load_bench_config,
    parse_gain,
    write_gain,
)
from .errors import InvalidSpec, Unsatisfiable, WatermarkError
from .fixtures import fetch_fixtures, fixture_dir, load_manifest
from .image_model import load_image, load_watermark, save_image, save_watermark
from .keying import SecretKey
from .metrics import ber, mse, nc, psnr
from .payloads import resolve_payload
from .spectral import midband_mask

log = logging.getLogger("dftwm")


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.6f}" if x != float("inf") else "inf"


def _add_key(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--key", help="secret key as a UTF-8 passphrase")
    g.add_argument("--key-hex", help="secret key as hex bytes (e.g. a 64-bit seed)")


def _key(args) -> SecretKey:
    try:
        if args.key_hex is not None:
            return SecretKey.from_hex(args.key_hex)
        return SecretKey.from_passphrase(args.key)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _add_params(p: argparse.ArgumentParser, gain: bool = True) -> None:
    if gain:
        p.add_argument("--gain", type=float, help="embedding gain k (default: shipped config)")
    p.add_argument("--mask", help="middle-band profile: default | zigzag:A-B")
    p.add_argument("--assignment", choices=["raster", "keyed"], help="block order for payload bits")
    p.add_argument("--config", type=Path, help="defaults YAML overriding the shipped one")


def _params(args) -> EmbedParams:
    base = default_params(args.config)
    return EmbedParams(
        gain=getattr(args, "gain", None) if getattr(args, "gain", None) is not None else base.gain,
        mask=midband_mask(args.mask) if args.mask else base.mask,
        assignment=args.assignment or base.assignment,
    )


def cmd_embed(args) -> int:
    host = load_image(args.host)
    _, wm = resolve_payload(args.wm)
    outcome = embed(host, wm, _key(args), _params(args))
    save_image(outcome.image, args.out)
    print(f"psnr_db={_fmt(outcome.psnr_db)} bits_embedded={outcome.bits_embedded}")
    return 0


def cmd_extract(args) -> int:
    img = load_image(args.input)
    got = extract(img, args.width, args.height, _key(args), _params(args))
    if args.out:
        save_watermark(got, args.out)
    if args.reference:
        ref = load_watermark(args.reference)
        print(f"nc={_fmt(nc(ref, got))} ber={_fmt(ber(ref, got))}")
    return 0


def cmd_attack(args) -> int:
    spec = parse_attack(args.spec)
    img = load_image(args.input)
    out = apply_attack(img, spec, args.seed)
    save_image(out, args.out)
    print(f"psnr_db={_fmt(psnr(img, out))}")
    return 0


def cmd_metrics(args) -> int:
    if args.images:
        a, b = (load_image(p) for p in args.images)
        print(f"mse={_fmt(mse(a, b))} psnr_db={_fmt(psnr(a, b))}")
    if args.watermarks:
        a, b = (load_watermark(p) for p in args.watermarks)
        print(f"nc={_fmt(nc(a, b))} ber={_fmt(ber(a, b))}")
    if not args.images and not args.watermarks:
        raise UsageError("metrics needs --images A B and/or --watermarks A B")
    return 0


def cmd_calibrate(args) -> int:
    host = load_image(args.host)
    _, wm = resolve_payload(args.wm)
    params = _params(args)
    gain = calibrate_gain(host, wm, _key(args), args.target_db, params, require_perfect=not args.psnr_only)
    print(f"gain={gain!r}")
    if args.write_config:
        write_gain(args.write_config, gain)
    return 0


def cmd_bench(args) -> int:
    data = load_bench_config(args.config_file) if args.config_file else {}

    def pick(name, default=None):
        value = getattr(args, name, None)
        return value if value not in (None, []) else data.get(name, default)

    attacks = list(pick("attacks", []) or [])
    if args.preset:
        attacks = [args.preset] + attacks
    images = pick("images", [])
    if not images:
        raise UsageError("bench needs at least one image (--images PATH|ID|5std)")
    if not attacks:
        raise UsageError("bench needs --preset or --attacks")
    if args.key is not None or args.key_hex is not None:
        key = _key(args)
    elif "key" in data:
        key = SecretKey.from_passphrase(str(data["key"]))
    elif "key_hex" in data:
        key = SecretKey.from_hex(str(data["key_hex"]))
    else:
        raise UsageError("bench needs --key or --key-hex")
    defaults = default_params(args.defaults)
    try:
        config = BenchConfig(
            images=list(images),
            payloads=list(pick("payloads", ["logo19x52"])),
            key=key,
            gain=parse_gain(pick("gain", defaults.gain)),
            attacks=expand_attacks(attacks),
            seed=int(pick("seed", 0)),
            output=Path(pick("out")) if pick("out") else None,
            format=pick("format", "csv"),
            mask=pick("mask", "default"),
            assignment=pick("assignment", defaults.assignment),
            average=bool(args.average or data.get("average", False)),
            fixtures=Path(pick("fixtures")) if pick("fixtures") else None,
        )
        config.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = run_bench(config, jobs=args.jobs)
    if config.output is None:
        from .bench import rows_to_csv, rows_to_json

        sys.stdout.write(rows_to_csv(rows) if config.format == "csv" else rows_to_json(rows))
    else:
        write_report(rows, config.output, config.format)
        failed = sum(1 for r in rows if r.error)
        print(f"rows={len(rows)} failed={failed} out={config.output}")
    return 0


def cmd_fetch_fixtures(args) -> int:
    if args.list:
        for fid, fx in load_manifest().items():
            src = fx.archive or f"(none; surrogate {fx.surrogate})"
            print(f"{fid:10s} {src}  {fx.title}")
        return 0
    status = fetch_fixtures(args.dest, args.ids or None, index_url=args.index_url, import_dir=args.import_dir,
                            keep_archives=args.keep_archives)
    for fid, st in status.items():
        print(f"{fid}: {st}")
    print(f"dest={fixture_dir(args.dest)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dftwm", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"dftwm {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="embed a watermark")
    p.add_argument("--host", required=True, help="host image (PGM/PNG)")
    p.add_argument("--wm", required=True, help="payload bitmap (PBM/PGM/PNG) or built-in logo name")
    p.add_argument("--out", required=True)
    _add_key(p)
    _add_params(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="blindly extract a watermark")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--width", type=int, required=True, help="payload width in bits")
    p.add_argument("--height", type=int, required=True, help="payload height in bits")
    p.add_argument("--out", help="write the extracted payload (PBM/PGM/PNG)")
    p.add_argument("--reference", help="original payload; prints NC and BER")
    _add_key(p)
    _add_params(p, gain=False)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("attack", help="apply an attack",
                       description="Specs: jpeg:q=75, gauss-noise:var=0.001[,mean=0][,seed=7] "
                                   "(normalized [0,1] scale), sp:d=0.01[,seed=7], "
                                   "gauss-filter:w=3,sigma=0.5[,border=reflect|replicate|zero], histeq; "
                                   "join with + to compose.")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0, help="seed for stochastic attacks without their own")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("metrics", help="PSNR/MSE between images, NC/BER between payloads")
    p.add_argument("--images", nargs=2, metavar=("A", "B"))
    p.add_argument("--watermarks", nargs=2, metavar=("REF", "GOT"))
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("bench", help="run an attack grid and write a report")
    p.add_argument("--config-file", type=Path, help="YAML bench config (flags override it)")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--images", nargs="+", help="image paths, fixture ids, or 5std")
    p.add_argument("--payloads", nargs="+", help="payload bitmaps or built-in logo names")
    p.add_argument("--attacks", nargs="+", help="attack specs")
    p.add_argument("--gain", help="gain or calibrate:<target_db>")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--mask")
    p.add_argument("--assignment", choices=["raster", "keyed"])
    p.add_argument("--fixtures", help="fixture directory")
    p.add_argument("--average", action="store_true", help="add per-attack rows averaged over images")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--defaults", type=Path, help="defaults YAML overriding the shipped one")
    _add_key(p, required=False)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("calibrate", help="search the gain for a target PSNR")
    p.add_argument("--host", required=True)
    p.add_argument("--wm", required=True)
    p.add_argument("--target-db", type=float, required=True)
    p.add_argument("--psnr-only", action="store_true", help="drop the error-free extraction constraint")
    p.add_argument("--write-config", type=Path, help="store the gain in this defaults YAML")
    _add_key(p)
    _add_params(p, gain=False)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("fetch-fixtures", help="download and verify the standard host images")
    p.add_argument("--dest", help="fixture directory (default $DFTWM_FIXTURES or ~/.cache/dftwm/fixtures)")
    p.add_argument("--ids", nargs="+")
    p.add_argument("--import-dir", help="directory holding local copies named <id>.<ext>")
    p.add_argument("--index-url", help="PEP 503 index (default $PIP_INDEX_URL or PyPI)")
    p.add_argument("--keep-archives", action="store_true")
    p.add_argument("--list", action="store_true", help="list manifest entries and exit")
    p.set_defaults(func=cmd_fetch_fixtures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, InvalidSpec) as exc:
        parser.error(f"{args.command}: {exc}")
    except Unsatisfiable as exc:
        print(f"error: Unsatisfiable: {exc}", file=sys.stderr)
        return 1
    except (WatermarkError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
