import os
import random
import sys
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from stlc_oracle.signals import ControlPair, PiecewisePoly  # noqa: E402

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


small_rationals = st.fractions(min_value=-3, max_value=3, max_denominator=4)


@st.composite
def piecewise(draw, horizon=Fraction(1), max_pieces=3, max_degree=2):
    n = draw(st.integers(1, max_pieces))
    inner = sorted(draw(st.sets(st.integers(1, 7), min_size=n - 1, max_size=n - 1)))
    breaks = [Fraction(0)] + [horizon * Fraction(i, 8) for i in inner] + [horizon]
    polys = [tuple(draw(st.lists(small_rationals, min_size=1, max_size=max_degree + 1))) for _ in range(n)]
    return PiecewisePoly(breaks, polys)


@st.composite
def control_pairs(draw, horizon=Fraction(1)):
    return ControlPair(draw(piecewise(horizon)), draw(piecewise(horizon)))


def random_piecewise(rng: random.Random, horizon=Fraction(1), max_pieces=3, max_degree=2) -> PiecewisePoly:
    n = rng.randint(1, max_pieces)
    inner = sorted(rng.sample(range(1, 8), n - 1))
    breaks = [Fraction(0)] + [horizon * Fraction(i, 8) for i in inner] + [horizon]
    polys = [tuple(Fraction(rng.randint(-6, 6), rng.choice((1, 2, 3, 4))) for _ in range(rng.randint(1, max_degree + 1)))
             for _ in range(n)]
    return PiecewisePoly(breaks, polys)


def random_controls(rng: random.Random, horizon=Fraction(1), **kw) -> ControlPair:
    return ControlPair(random_piecewise(rng, horizon, **kw), random_piecewise(rng, horizon, **kw))


@pytest.fixture
def rng():
    return random.Random(20240917)
