import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from finecap.capacity import calibrated_isoperimetric_constant, total_variation
from finecap.errors import NoAdmissibleCandidate
from finecap.grid import Ball, GridDomain, NodeSet, ScalarField, ball_nodes
from finecap.measure import (GridMeasure, SingularPart, class_m_diagnostic, measure_of,
                             tv_density_measure)


def test_lebesgue_disk():
    for h in (1 / 32, 1 / 64):
        d = GridDomain.box([-1, -1], [1, 1], h)
        r = 0.5
        assert abs(measure_of(GridMeasure.lebesgue(d), Ball((0.0, 0.0), r)) - math.pi * r * r) <= 4 * h * r * math.pi


def test_segment_chord():
    d = GridDomain.box([-1, -1], [1, 1], 1 / 16)
    seg = SingularPart.polyline([[-0.5, 0.0], [0.5, 0.0]], 1.0)
    nu = GridMeasure(ScalarField(d, np.zeros(d.shape)), (seg,))
    assert measure_of(nu, Ball((0.0, 0.0), 0.25)) == 0.5


def test_composite_singular_mass():
    d = GridDomain.box([0, 0], [1, 1], 1 / 16)
    L = 0.75
    part = SingularPart.polyline([[0.1, 0.5], [0.1 + L, 0.5]], 2.0 ** -1 / L)
    nu = GridMeasure.lebesgue(d).with_parts(part)
    assert part.mass == pytest.approx(0.5, rel=1e-15)
    singular = measure_of(nu, NodeSet.full(d)) - measure_of(GridMeasure.lebesgue(d), NodeSet.full(d))
    assert singular == pytest.approx(0.5, rel=1e-12)


def test_segment_on_cell_face_counted_once():
    d = GridDomain(2, (8, 8), 1.0, (0.0, 0.0))
    # y = 2.5 is the face between rows 2 and 3; cells are half-open so it belongs to row 3
    nu = GridMeasure(ScalarField(d, np.zeros(d.shape)), (SingularPart.polyline([[1.0, 2.5], [5.0, 2.5]], 1.0),))
    assert measure_of(nu, NodeSet.full(d)) == pytest.approx(4.0)
    m = np.zeros(d.shape, bool)
    m[:, 3] = True
    assert measure_of(nu, NodeSet(d, m)) == pytest.approx(4.0)


def test_points_1d():
    d = GridDomain.box([0], [1], 0.1)
    nu = GridMeasure(ScalarField(d, np.zeros(d.shape)), (SingularPart.points([0.5, 0.52], 3.0),))
    assert measure_of(nu, Ball((0.5,), 0.1)) == 6.0
    m = np.zeros(d.shape, bool)
    m[5] = True
    assert measure_of(nu, NodeSet(d, m)) == 6.0


def test_tv_density_measure_matches_windowed_tv(rng):
    d = GridDomain(2, (20, 20), 0.05, (0.0, 0.0))
    u = ScalarField(d, rng.random(d.shape))
    nu = tv_density_measure(u)
    S = NodeSet(d, rng.random(d.shape) < 0.4)
    assert measure_of(nu, S) == pytest.approx(total_variation(u, S), rel=1e-12)
    assert measure_of(nu, NodeSet.full(d)) == pytest.approx(total_variation(u), rel=1e-12)


def _random_measure(rng, d):
    nu = GridMeasure(ScalarField(d, rng.random(d.shape)))
    pts = rng.uniform(0.05, 0.9, size=(4, 2))
    return nu.with_parts(SingularPart.polyline(pts, float(rng.uniform(0, 2))))


@given(st.integers(0, 2 ** 32 - 1))
def test_additive_and_monotone(seed):
    rng = np.random.default_rng(seed)
    d = GridDomain(2, (16, 16), 1 / 15, (0.0, 0.0))
    nu = _random_measure(rng, d)
    S = NodeSet(d, rng.random(d.shape) < 0.5)
    T = NodeSet(d, rng.random(d.shape) < 0.5)
    whole = measure_of(nu, S | T)
    assert whole == pytest.approx(measure_of(nu, S) + measure_of(nu, T - S), rel=1e-12, abs=1e-12)
    assert measure_of(nu, S) <= whole + 1e-12


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 5.0))
def test_scaling(seed, c):
    rng = np.random.default_rng(seed)
    d = GridDomain(2, (16, 16), 1 / 15, (0.0, 0.0))
    nu = _random_measure(rng, d)
    B = Ball(tuple(rng.uniform(0.2, 0.8, 2)), float(rng.uniform(0.1, 0.4)))
    assert measure_of(nu.scaled(c), B) == pytest.approx(c * measure_of(nu, B), rel=1e-12, abs=1e-15)


def test_class_m_lebesgue_dust():
    d = GridDomain.box([0, 0], [1, 1], 1 / 32)
    W = ball_nodes(d, Ball((0.5, 0.5), 0.3))
    r, delta = 0.25, 2.0
    cands = []
    for step in (4, 8):
        m = np.zeros(d.shape, bool)
        m[::step, ::step] = True
        cands.append(NodeSet(d, m))
    rep = class_m_diagnostic(GridMeasure.lebesgue(d), W, delta, cands, r)
    bound = 5 ** 2 * 4 * max(1.0, calibrated_isoperimetric_constant(2)) / math.pi
    assert 0 < rep.worst_ratio <= bound


def test_class_m_atom_flags_nonmembership():
    d = GridDomain.box([0, 0], [1, 1], 1 / 16)
    i = (8, 8)
    dens = np.zeros(d.shape)
    dens[i] = 1 / d.cell_volume
    nu = GridMeasure(ScalarField(d, dens))
    m = np.zeros(d.shape, bool)
    m[i] = True
    A = NodeSet(d, m)
    W = ball_nodes(d, Ball((0.5, 0.5), 0.3))
    ratios = []
    for delta in (2.0, 4.0):
        # one-node capacity is about h^2 + 4*pi*h/8*(1 + 1/sqrt 2) = 0.17, below delta * r
        ratios.append(class_m_diagnostic(nu, W, delta, [A], 0.25).worst_ratio)
    assert ratios[0] == pytest.approx(1 / 2.0) and ratios[1] == pytest.approx(1 / 4.0)


def test_class_m_empty_and_inadmissible():
    d = GridDomain.box([0, 0], [1, 1], 1 / 16)
    W = ball_nodes(d, Ball((0.5, 0.5), 0.3))
    nu = GridMeasure.lebesgue(d)
    assert class_m_diagnostic(nu, W, 0.5, [NodeSet.empty(d)], 0.25).worst_ratio == 0.0
    with pytest.raises(NoAdmissibleCandidate):
        class_m_diagnostic(nu, W, 0.01, [NodeSet.full(d)], 0.25)
