import numpy as np
import pytest

from dbcmo.model import Dataset, MultiValuedObject

PAUL_COORDS = [[33.56, 37.19], [40.44, 36.72], [34.18, 48.10]]
PAUL_WEIGHTS = [0.24, 0.33, 0.43]
QIANA_COORDS = [[54.05, 67.36], [45.53, 57.92], [42.14, 47.27], [45.90, 42.80], [49.96, 48.92], [62.84, 58.93]]
QIANA_WEIGHTS = [0.24, 0.10, 0.17, 0.19, 0.08, 0.22]


@pytest.fixture
def paul():
    return MultiValuedObject("paul", PAUL_COORDS, PAUL_WEIGHTS)


@pytest.fixture
def qiana():
    return MultiValuedObject("qiana", QIANA_COORDS, QIANA_WEIGHTS)


@pytest.fixture
def checkins(paul, qiana):
    return Dataset.from_objects([paul, qiana])


def random_object(rng, oid, n_min=2, n_max=40, d=2, center=None, spread=None):
    n = int(rng.integers(n_min, n_max + 1))
    c = rng.uniform(0, 100, d) if center is None else np.asarray(center, float)
    s = rng.uniform(1, 15) if spread is None else spread
    pts = c + rng.normal(0, s, (n, d))
    w = rng.uniform(0.05, 1.0, n)
    return MultiValuedObject(oid, pts, w / w.sum())


def random_dataset(rng, n_objects, d=2, n_centers=6, n_max=40):
    centers = rng.uniform(0, 100, (n_centers, d))
    objects = []
    for i in range(n_objects):
        c = centers[rng.integers(n_centers)] + rng.normal(0, 8, d)
        objects.append(random_object(rng, f"o{i:03d}", 2, n_max, d, c, rng.uniform(0.5, 5)))
    return Dataset.from_objects(objects)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---- acceptance summary: one line per criterion



@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    detail = dict(item.user_properties).get("detail", "")
    item.config._criteria = getattr(item.config, "_criteria", [])
    item.config._criteria.append((marker.args[0], item.name, report.passed, detail))


def pytest_terminal_summary(terminalreporter, config):
    rows = getattr(config, "_criteria", [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(rows):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  {name}  {detail}")
