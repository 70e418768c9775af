import numpy as np
import pytest

from dftwm.errors import FixtureError
from dftwm.fixtures import resolve_host, standard_ids
from dftwm.image_model import GrayImage


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def _load_or_skip(fid):
    try:
        return resolve_host(fid).load()
    except FixtureError as exc:
        pytest.skip(f"host fixtures not installed ({exc}); run `dftwm fetch-fixtures`")


@pytest.fixture(scope="session")
def lena():
    return _load_or_skip("lena")


@pytest.fixture(scope="session")
def mandrill():
    return _load_or_skip("mandrill")


@pytest.fixture(scope="session")
def standard_hosts():
    out = []
    for fid in standard_ids():
        try:
            out.append(resolve_host(fid))
        except FixtureError as exc:
            pytest.skip(f"host fixtures not installed ({exc}); run `dftwm fetch-fixtures`")
    return out


@pytest.fixture
def textured(rng):
    """Synthetic 64x64 host with smooth structure plus mild texture."""
    y, x = np.mgrid[0:64, 0:64]
    base = 128 + 60 * np.sin(x / 7.0) * np.cos(y / 11.0) + rng.normal(0, 6, (64, 64))
    return GrayImage(np.clip(np.round(base), 0, 255).astype(np.uint8))


_ACCEPTANCE = {}


@pytest.fixture
def acceptance_report():
    """Record the one-line verdict for an acceptance criterion."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
