import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from reputation_lab.numeric import (as_number, basic_solutions, fmt, kl_divergence, solve_square,
                                    total_variation, truncation_horizon)


def test_as_number():
    assert as_number("3/4") == F(3, 4)
    assert as_number("0.25") == F(1, 4)
    assert as_number(2) == F(2)
    assert isinstance(as_number(0.5), float)
    with pytest.raises(ValueError):
        as_number("x/2")
    with pytest.raises(TypeError):
        as_number(True)


def test_fmt():
    assert fmt(F(1, 18)) == "1/18"
    assert fmt(F(3)) == "3"
    assert fmt(2.0) == "2.0"


def test_kl_conventions():
    assert kl_divergence([0.5, 0.5, 0.0], [0.25, 0.25, 0.5]) == pytest.approx(math.log(2))
    assert kl_divergence([1.0, 0.0], [0.0, 1.0]) == math.inf
    assert kl_divergence([0.0, 1.0], [0.5, 0.5]) == pytest.approx(math.log(2))
    assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0


def test_kl_shape_mismatch():
    with pytest.raises(ValueError):
        kl_divergence([1.0], [0.5, 0.5])


def _dist(v):
    v = np.asarray(v, dtype=float) + 1e-300
    return v / v.sum()


simplex = arrays(np.float64, st.integers(2, 6), elements=st.floats(0, 1)).filter(lambda v: v.sum() > 1e-3)


@settings(max_examples=300, deadline=None)
@given(simplex, st.data())
def test_pinsker(p, data):
    q = data.draw(arrays(np.float64, p.shape, elements=st.floats(0, 1)).filter(lambda v: v.sum() > 1e-3))
    p, q = p / p.sum(), q / q.sum()
    d = kl_divergence(p, q)
    assert d >= -1e-12
    assert d >= 2 * total_variation(p, q) ** 2 - 1e-12


@settings(max_examples=200, deadline=None)
@given(simplex)
def test_kl_zero_on_equal(p):
    p = p / p.sum()
    assert abs(kl_divergence(p, p)) <= 1e-12


def test_solve_square_exact_and_singular():
    assert solve_square([[F(2), F(1)], [F(1), F(3)]], [F(3), F(5)]) == [F(4, 5), F(7, 5)]
    assert solve_square([[1.0, 2.0], [2.0, 4.0]], [1.0, 2.0]) is None


def test_basic_solutions_simplex_vertices():
    one, zero = F(1), F(0)
    E, e = [[one, one]], [one]
    G, h = [[-one, zero], [zero, -one]], [zero, zero]
    pts = sorted(tuple(x) for x in basic_solutions(E, e, G, h, exact=True))
    assert pts == [(0, 1), (1, 0)]


def test_truncation_horizon():
    T = truncation_horizon(0.9)
    assert 0.9 ** T < 1e-10 <= 0.9 ** (T - 1)
    with pytest.raises(ValueError):
        truncation_horizon(1.0)
