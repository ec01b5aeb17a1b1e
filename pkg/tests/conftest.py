import numpy as np
import pytest

from gestaug import _backend
from gestaug.core import HardLabel, Image
from gestaug.synthetic import smooth_image, write_image_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(params=sorted(_backend.available_backends()))
def backend(request, monkeypatch):
    """Run a test once per importable warp kernel."""
    monkeypatch.setattr(_backend, "warp_affine", _backend.available_backends()[request.param])
    return request.param


def random_image(rng, w, h, c=3):
    return Image(rng.integers(0, 256, (h, w, c), dtype=np.uint8))


@pytest.fixture
def rendered_dataset(tmp_path, rng):
    """Five smooth 48x40 RGB originals on disk with a copies=0 manifest."""
    images = [smooth_image(rng, 48, 40, 3, sigma=2.0) for _ in range(5)]
    manifest = write_image_dataset(tmp_path / "rendered", images, num_classes=14)
    return manifest


def label(i, n=14):
    return HardLabel(i, n)


# -- acceptance reporting ---------------------------------------------------------------

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    _, ok, details = _CRITERIA.get(number, (title, True, []))
    _CRITERIA[number] = (title, ok and report.passed, details + ([detail] if detail else []))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed, details = _CRITERIA[number]
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}: {title}"
        terminalreporter.write_line(line + (f" ({'; '.join(details)})" if details else ""))
