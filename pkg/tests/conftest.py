import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from nibble.hypergraph import build

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@st.composite
def hypergraphs(draw, r=None, max_vertices=9, max_edges=12):
    """Small r-graphs with distinct edges."""
    r = draw(st.integers(2, 4)) if r is None else r
    n = draw(st.integers(r, max_vertices))
    pool = list(itertools.combinations(range(n), r))
    picks = draw(st.lists(st.sampled_from(pool), unique=True, max_size=min(max_edges, len(pool))))
    return build(r, n, picks)


@pytest.fixture
def path2():
    return build(2, 3, [[0, 1], [1, 2]])


@pytest.fixture
def single3():
    return build(3, 3, [[0, 1, 2]])


def random_edges(rng, r, n, m):
    seen = set()
    while len(seen) < m:
        seen.add(tuple(sorted(rng.choice(n, size=r, replace=False).tolist())))
    return sorted(seen)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one summary line per acceptance criterion."""
    return request.config.stash.setdefault(ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
