"""Standard host images, fetched on demand and checked against content hashes.

The images are not shipped.  Each manifest entry names a pinned source archive
on a PEP 503 package index (by filename and sha256), the member to extract and
the conversion to an 8-bit 512x512 PGM whose hash is pinned as well.  Hosts
with no reproducible public source (Peppers, Goldhill) must be imported from a
local directory; until then a named surrogate stands in for them.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import os
import re
import tarfile
import urllib.request
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional
from urllib.parse import urljoin

import numpy as np
from PIL import Image

from .errors import FixtureError
from .image_model import GrayImage, load_image, save_image

log = logging.getLogger(__name__)

FIXTURES_ENV = "DFTWM_FIXTURES"
INDEX_ENV = "PIP_INDEX_URL"
DEFAULT_INDEX = "https://pypi.org/simple"
STANDARD_SET = "5std"
HOST_SIDE = 512


@dataclass(frozen=True)
class Fixture:
    id: str
    title: str
    sha256: Optional[str]
    project: Optional[str] = None
    archive: Optional[str] = None
    archive_sha256: Optional[str] = None
    member: Optional[str] = None
    surrogate: Optional[str] = None
    note: str = ""

    @property
    def fetchable(self) -> bool:
        return self.archive is not None


def load_manifest() -> dict[str, Fixture]:
    raw = json.loads(resources.files("dftwm.data").joinpath("fixtures.json").read_text())
    return {k: Fixture(id=k, **v) for k, v in raw["fixtures"].items()}


def standard_ids() -> list[str]:
    raw = json.loads(resources.files("dftwm.data").joinpath("fixtures.json").read_text())
    return list(raw["standard"])


def fixture_dir(path=None) -> Path:
    if path is not None:
        return Path(path)
    env = os.environ.get(FIXTURES_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "dftwm" / "fixtures"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def to_host(im: Image.Image) -> GrayImage:
    """Convert a decoded source image to a 512x512 8-bit host (center crop if larger)."""
    if im.mode != "L":
        im = im.convert("L")
    arr = np.asarray(im, dtype=np.uint8)
    h, w = arr.shape
    if h < HOST_SIDE or w < HOST_SIDE:
        raise FixtureError(f"source image {w}x{h} is smaller than {HOST_SIDE}x{HOST_SIDE}")
    top, left = (h - HOST_SIDE) // 2, (w - HOST_SIDE) // 2
    return GrayImage(arr[top:top + HOST_SIDE, left:left + HOST_SIDE])


def _archive_url(index: str, project: str, filename: str) -> str:
    page_url = index.rstrip("/") + f"/{project}/"
    with urllib.request.urlopen(page_url, timeout=60) as resp:
        page = resp.read().decode("utf-8", "replace")
    for href in re.findall(r'href="([^"]+)"', page):
        if href.split("#", 1)[0].rsplit("/", 1)[-1] == filename:
            return urljoin(page_url, href.split("#", 1)[0])
    raise FixtureError(f"{filename} not listed on {page_url}")


def _download(url: str, target: Path, sha256: str) -> None:
    tmp = target.with_suffix(target.suffix + ".part")
    h = hashlib.sha256()
    with urllib.request.urlopen(url, timeout=300) as resp, open(tmp, "wb") as out:
        for chunk in iter(lambda: resp.read(1 << 20), b""):
            h.update(chunk)
            out.write(chunk)
    if h.hexdigest() != sha256:
        tmp.unlink(missing_ok=True)
        raise FixtureError(f"{url}: sha256 {h.hexdigest()} does not match pinned {sha256}")
    tmp.replace(target)


def _verify(path: Path, fx: Fixture) -> bool:
    return path.exists() and (fx.sha256 is None or sha256_file(path) == fx.sha256)


def fetch_fixtures(dest=None, ids=None, *, index_url=None, import_dir=None, keep_archives=False) -> dict[str, str]:
    """Materialize fixtures as ``<dest>/<id>.pgm``; returns ``{id: status}``."""
    dest = fixture_dir(dest)
    dest.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest()
    wanted = list(ids) if ids else list(manifest)
    index = index_url or os.environ.get(INDEX_ENV) or DEFAULT_INDEX
    status: dict[str, str] = {}
    archives: dict[str, Path] = {}

    for fid in wanted:
        if fid not in manifest:
            raise FixtureError(f"unknown fixture {fid!r}")
        fx = manifest[fid]
        target = dest / f"{fid}.pgm"
        if _verify(target, fx):
            status[fid] = "present"
            continue

        if import_dir is not None:
            found = sorted(Path(import_dir).glob(f"{fid}.*"))
            if found:
                save_image(to_host(Image.open(found[0])), target)
                if fx.sha256 is not None and sha256_file(target) != fx.sha256:
                    target.unlink()
                    raise FixtureError(f"{found[0]} does not match the pinned content hash for {fid}")
                status[fid] = "imported"
                continue

        if not fx.fetchable:
            status[fid] = "missing"
            continue

        archive = archives.get(fx.archive)
        if archive is None:
            archive = dest / ".archives" / fx.archive
            archive.parent.mkdir(exist_ok=True)
            if not (archive.exists() and sha256_file(archive) == fx.archive_sha256):
                log.info("downloading %s", fx.archive)
                _download(_archive_url(index, fx.project, fx.archive), archive, fx.archive_sha256)
            archives[fx.archive] = archive
        with tarfile.open(archive) as tar:
            data = tar.extractfile(fx.member)
            if data is None:
                raise FixtureError(f"{fx.member} missing from {fx.archive}")
            im = Image.open(io.BytesIO(data.read()))
            im.load()
        save_image(to_host(im), target)
        if fx.sha256 is not None and sha256_file(target) != fx.sha256:
            target.unlink()
            raise FixtureError(f"converted {fid} does not match its pinned content hash")
        status[fid] = "fetched"

    if not keep_archives:
        for path in archives.values():
            path.unlink(missing_ok=True)
    return status


@dataclass(frozen=True)
class Host:
    id: str
    path: Path
    stands_in_for: Optional[str] = None

    def load(self) -> GrayImage:
        return load_image(self.path)


def resolve_host(fid: str, dest=None) -> Host:
    """Locate a fixture on disk, falling back to its surrogate."""
    manifest = load_manifest()
    if fid not in manifest:
        raise FixtureError(f"unknown fixture {fid!r}")
    base = fixture_dir(dest)
    fx = manifest[fid]
    path = base / f"{fid}.pgm"
    if path.exists():
        return Host(fid, path)
    if fx.surrogate:
        sub = base / f"{fx.surrogate}.pgm"
        if sub.exists():
            return Host(fx.surrogate, sub, stands_in_for=fid)
    raise FixtureError(f"fixture {fid!r} not found under {base}; run `dftwm fetch-fixtures`")


def resolve_images(entries, dest=None) -> list[Host]:
    """Expand image arguments: file paths, fixture ids, or ``5std``."""
    manifest = load_manifest()
    hosts = []
    for entry in entries:
        if entry == STANDARD_SET:
            hosts.extend(resolve_host(fid, dest) for fid in standard_ids())
        elif entry in manifest:
            hosts.append(resolve_host(entry, dest))
        else:
            path = Path(entry)
            if not path.exists():
                raise FixtureError(f"image {entry!r} is neither a file nor a known fixture id")
            hosts.append(Host(path.stem, path))
    return hosts
