import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from finecap.errors import BallOutside, BallUnresolvable, TooFewSamples
from finecap.grid import (Ball, DensityProfile, GridDomain, NodeSet, RadiusSchedule, ScalarField,
                          ball_nodes, ball_offsets, oscillation, tail_estimates)


def test_ball_nodes_1d():
    d = GridDomain(1, (11,), 1.0, (0.0,))
    B = ball_nodes(d, Ball((5.0,), 1.5))
    assert list(np.nonzero(B.mask)[0]) == [4, 5, 6]


def test_ball_nodes_strict():
    d = GridDomain(2, (11, 11), 1.0, (0.0, 0.0))
    B = ball_nodes(d, Ball((5.0, 5.0), 1.0))
    assert B.count == 1 and B.mask[5, 5]


def test_ball_nodes_half_spacing_count():
    d = GridDomain.box([-2, -2], [2, 2], 0.5)
    # independent count of (i, j) with (0.5 i)^2 + (0.5 j)^2 < 1; the closed
    # ball would add the four axis points at distance exactly 1
    strict = sum(1 for i in range(-3, 4) for j in range(-3, 4) if i * i + j * j < 4)
    closed = sum(1 for i in range(-3, 4) for j in range(-3, 4) if i * i + j * j <= 4)
    assert (strict, closed) == (9, 13)
    assert ball_nodes(d, Ball((0.0, 0.0), 1.0)).count == strict
    assert len(ball_offsets(2, 2.0, closed=True)) == closed


def test_ball_errors():
    d = GridDomain(2, (5, 5), 1.0, (0.0, 0.0))
    with pytest.raises(BallUnresolvable):
        ball_nodes(d, Ball((2.0, 2.0), 0.5))
    with pytest.raises(BallOutside):
        ball_nodes(d, Ball((20.0, 20.0), 1.0))


def test_domain_validation():
    with pytest.raises(ValueError):
        GridDomain(2, (1, 5), 1.0, (0.0, 0.0))
    with pytest.raises(ValueError):
        GridDomain(4, (2, 2, 2, 2), 1.0, (0.0,) * 4)
    with pytest.raises(ValueError):
        GridDomain(1, (3,), 0.0, (0.0,))


def test_scalar_field_rejects_nan_allows_inf():
    d = GridDomain(1, (3,), 1.0, (0.0,))
    ScalarField(d, [0.0, math.inf, -math.inf])
    with pytest.raises(ValueError):
        ScalarField(d, [0.0, math.nan, 1.0])


def test_oscillation_examples():
    d = GridDomain.box([-1, -1], [1, 1], 1 / 64)
    S = ball_nodes(d, Ball((0.0, 0.0), 0.5))
    assert oscillation(ScalarField(d, np.full(d.shape, 3.0)), S) == 0.0
    lin = ScalarField(d, d.points[..., 0])
    assert abs(oscillation(lin, S) - 1.0) <= 2 / 64
    v = np.zeros(d.shape)
    v[64, 64] = math.inf
    assert oscillation(ScalarField(d, v), S) == math.inf
    one = NodeSet(d, np.zeros(d.shape, bool))
    assert oscillation(lin, one) == 0.0


def test_tail_estimates_examples():
    assert tail_estimates([(1, 3), (0.5, 2), (0.25, 1)], 2) == (2, 1)
    assert tail_estimates([(1, 4.0), (0.5, 4.0), (0.25, 4.0)], 3) == (4.0, 4.0)
    assert tail_estimates([(1, 5.0), (0.5, 3.0), (0.25, 1.0)], 3) == (5.0, 1.0)
    with pytest.raises(TooFewSamples):
        tail_estimates([(1, 1.0)], 2)


def test_schedule_and_profile():
    s = RadiusSchedule(1.0, 0.5, 4, 2)
    assert s.radii == (0.5, 0.25, 0.125, 0.0625)
    s.check(GridDomain(1, (100,), 1 / 32, (0.0,)))
    with pytest.raises(BallUnresolvable):
        s.check(GridDomain(1, (100,), 1 / 16, (0.0,)))
    with pytest.raises(ValueError):
        RadiusSchedule(1.0, 0.5, 2, 2)
    p = DensityProfile(s.radii, (1.0, 2.0, 3.0, 0.5), 2)
    assert (p.tail_max, p.tail_min) == (3.0, 0.5)
    with pytest.raises(ValueError):
        DensityProfile((0.1, 0.2), (1.0, 1.0))


@given(st.floats(1.0, 4.0), st.floats(1.0, 4.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_ball_nodes_monotone(r1, r2, cx, cy):
    d = GridDomain.box([-5, -5], [5, 5], 0.5)
    a, b = sorted((r1, r2))
    assert ball_nodes(d, Ball((cx, cy), a)).issubset(ball_nodes(d, Ball((cx, cy), b)))


@given(st.integers(0, 2 ** 32 - 1), st.floats(-100, 100))
def test_oscillation_symmetries(seed, c):
    rng = np.random.default_rng(seed)
    d = GridDomain(2, (6, 6), 1.0, (0.0, 0.0))
    w = rng.normal(size=d.shape)
    S = NodeSet(d, rng.random(d.shape) < 0.5)
    T = S | NodeSet(d, rng.random(d.shape) < 0.3)
    o = oscillation(ScalarField(d, w), S)
    assert o == oscillation(ScalarField(d, -w), S)
    assert math.isclose(o, oscillation(ScalarField(d, w + c), S), rel_tol=1e-9, abs_tol=1e-9)
    assert o <= oscillation(ScalarField(d, w), T)
