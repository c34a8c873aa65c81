import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from recombchain.instances import random_symmetric_rho, three_site_example
from recombchain.rho import validate
from recombchain.subsets import SiteSet

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: dict[int, str] = {}


@st.composite
def distributions(draw, min_sites=2, max_sites=4, symmetric=False, max_support=5):
    """Arbitrary valid recombination distributions, symmetric or not."""
    n = draw(st.integers(min_sites, max_sites))
    s = SiteSet(n)
    if symmetric:
        return random_symmetric_rho(random.Random(draw(st.integers(0, 2**32))), n)
    masks = draw(st.lists(st.integers(1, s.full), min_size=1, max_size=max_support, unique=True))
    weights = draw(st.lists(st.integers(1, 6), min_size=len(masks), max_size=len(masks)))
    total = sum(weights)
    return validate({m: Fraction(w, total) for m, w in zip(masks, weights)}, s)


@pytest.fixture
def three_site():
    return three_site_example()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
