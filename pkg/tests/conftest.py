import cmath
import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from kfree.geometry import Isometry, Point  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

coord = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
height = st.floats(0.05, 5, allow_nan=False, allow_infinity=False)
points = st.builds(lambda x, y, t: Point(complex(x, y), t), coord, coord, height)


@st.composite
def isometries(draw):
    """Random PSL(2,C) elements, kept well conditioned."""
    vals = [draw(st.floats(-2, 2, allow_nan=False)) for _ in range(8)]
    a, b, c, d = (complex(vals[i], vals[i + 1]) for i in range(0, 8, 2))
    det = a * d - b * c
    if abs(det) < 0.2:
        d = d + 1.0
        det = a * d - b * c
    if abs(det) < 0.2:
        a, b, c, d = 1, b, 0, 1
    return Isometry(a, b, c, d)


@st.composite
def loxodromics(draw):
    """Loxodromic elements with translation length in [0.05, 4]."""
    from kfree.geometry import loxodromic

    length = draw(st.floats(0.05, 4))
    angle = draw(st.floats(-math.pi + 1e-3, math.pi))
    h = draw(isometries())
    return loxodromic(length, angle).conjugate_by(h)


def random_isometry(rng: np.random.Generator) -> Isometry:
    while True:
        v = rng.normal(size=8)
        a, b, c, d = (complex(v[i], v[i + 1]) for i in range(0, 8, 2))
        if abs(a * d - b * c) > 0.3:
            return Isometry(a, b, c, d)


def random_point(rng: np.random.Generator) -> Point:
    return Point(complex(*rng.normal(size=2)), float(math.exp(rng.normal())))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


LABEL_POOL = ["a", "b", "aa", "ab", "bab", "aB", "bb", "abA", "baB", "abab", "c", "cb"]


def random_complex(rng: np.random.Generator, n_vertices: int = 6, max_simplices: int = 30):
    """Random complex with at most ``max_simplices`` simplices."""
    from kfree.nerve import Complex, faces

    simplices: set = set()
    for _ in range(50):
        size = int(rng.integers(1, 4))
        m = frozenset(int(v) for v in rng.choice(n_vertices, size=size, replace=False))
        new = simplices | set(faces(m))
        if len(new) > max_simplices:
            break
        simplices = new
    return Complex(simplices)


def random_labeling(rng: np.random.Generator, cx):
    from kfree.nerve import Labeling

    return Labeling({v: LABEL_POOL[int(rng.integers(len(LABEL_POOL)))] for v in cx.vertices})


class Arc:
    """Open arc on the unit circle, from ``start`` counterclockwise by ``width`` (radians)."""

    def __init__(self, start: float, width: float):
        self.start, self.width = start % (2 * math.pi), width

    def contains(self, x: float) -> bool:
        return 0 < (x - self.start) % (2 * math.pi) < self.width


def arc_oracle(arcs):
    """Exact meeting test: a nonempty intersection of open arcs contains a point just past some start."""

    def oracle(fam):
        probes = [arcs[i].start + 1e-9 for i in fam]
        return "feasible" if any(all(arcs[i].contains(x) for i in fam) for x in probes) else "empty"

    return oracle


def set_oracle(sets):
    def oracle(fam):
        common = set.intersection(*(set(sets[i]) for i in fam))
        return "feasible" if common else "empty"

    return oracle


_ACCEPTANCE = pytest.StashKey[dict]()


class _Criterion:
    def __init__(self, store, number, title):
        self.store, self.number, self.title, self.detail = store, number, title, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        line = f"criterion {self.number}: {status} {self.title}" + (f" ({self.detail})" if self.detail else "")
        self.store[self.number] = line
        print(line)
        return False


@pytest.fixture
def criterion(request):
    """Context manager recording one pass/fail line per acceptance criterion."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})
    return lambda number, title: _Criterion(store, number, title)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for n in sorted(store):
            terminalreporter.write_line(store[n])
