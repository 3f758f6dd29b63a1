import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from finecap.bvtools import (ball_averages, bv_certificate, capacitary_boundary, dilate, directional_variation,
                             jump_classify, measure_boundary, pointwise_variation_1d, precise_representative,
                             set_representative)
from finecap.capacity import total_variation
from finecap.grid import Ball, GridDomain, NodeSet, RadiusSchedule, ScalarField, ball_nodes
from finecap.measure import GridMeasure

D2 = GridDomain.box([-1, -1], [1, 1], 1 / 64)
P = D2.points
SCHED = RadiusSchedule(0.25, 0.5, 3, 2)


def test_ball_averages_match_direct():
    rng = np.random.default_rng(0)
    u = ScalarField(D2, rng.normal(size=D2.shape))
    avg = ball_averages(u, 0.1)
    for idx in [(0, 0), (10, 50), (64, 64), (128, 3)]:
        B = ball_nodes(D2, Ball(tuple(D2.position(idx)), 0.1))
        assert avg[idx] == pytest.approx(u.values[B.mask].mean(), rel=1e-10, abs=1e-12)


def test_precise_representative_examples():
    u = ScalarField(D2, np.sin(P[..., 0]) * np.cos(P[..., 1]))
    us = precise_representative(u, SCHED)
    inner = (slice(20, -20), slice(20, -20))
    assert np.abs(us.values - u.values)[inner].max() <= 4 * D2.spacing
    d1 = GridDomain.box([-1], [1], 1 / 256)
    x = d1.points[..., 0]
    step = ScalarField(d1, (x > 0).astype(float))
    s1 = precise_representative(step, RadiusSchedule(0.25, 0.5, 3, 2))
    assert abs(s1.values[256] - 0.5) <= d1.spacing / (2 * 0.0625) + 1e-12
    r = np.sqrt((P ** 2).sum(-1))
    with np.errstate(divide="ignore"):
        sing = ScalarField(D2, r ** -0.5)
    assert precise_representative(sing, SCHED).values[64, 64] == math.inf


def test_pointwise_variation_examples():
    assert pointwise_variation_1d(np.linspace(2.0, -3.0, 17)) == 5.0
    k = 4
    saw = [0, 1] * k
    assert pointwise_variation_1d(saw) == 2 * k - 1
    assert pointwise_variation_1d([3.0] * 9) == 0.0


def test_directional_variation_examples():
    g = np.sin(3 * P[..., 0])
    u = ScalarField(D2, g)
    height = D2.shape[1] * D2.spacing
    assert directional_variation(u, 0) == pytest.approx(height * pointwise_variation_1d(g[:, 0]), rel=1e-12)
    assert directional_variation(ScalarField(D2, np.ones(D2.shape)), 1) == 0.0
    left = ScalarField(D2, (P[..., 0] < 0).astype(float))
    assert directional_variation(left, 0) == pytest.approx(height)


def _corpus_fields():
    r = np.sqrt((P ** 2).sum(-1))
    return [np.sin(3 * P[..., 0]) * P[..., 1], (r < 0.5).astype(float),
            np.sign(P[..., 0]) * np.sign(P[..., 1]), np.exp(-4 * r ** 2), (P[..., 0] > 0.1) * 2.0 + P[..., 1]]


def test_variation_below_line_variation():
    for v in _corpus_fields():
        u = ScalarField(D2, v)
        assert total_variation(u) <= directional_variation(u, 0) + directional_variation(u, 1) + 1e-12


def test_measure_boundary_examples():
    F = NodeSet(D2, np.sqrt((P ** 2).sum(-1)) < 0.5)
    band = measure_boundary(F, SCHED)
    dist = np.abs(np.sqrt((P ** 2).sum(-1)) - 0.5)
    assert band.mask[dist < 0.5 * D2.spacing].all()
    assert not band.mask[dist >= max(SCHED.tail_radii)].any()
    assert measure_boundary(NodeSet.empty(D2), SCHED).is_empty()
    half = measure_boundary(NodeSet(D2, P[..., 0] < 0), SCHED)
    assert not half.mask[np.abs(P[..., 0]) >= max(SCHED.tail_radii)].any()
    assert half.mask[np.abs(P[..., 0]) < D2.spacing].all()


def test_capacitary_boundary_disk_refinement():
    errs = []
    for h in (1 / 32, 1 / 64, 1 / 128):
        d = GridDomain.box([-1, -1], [1, 1], h)
        F = NodeSet(d, np.sqrt((d.points ** 2).sum(-1)) < 0.5)
        rep = capacitary_boundary(F, 0.5, RadiusSchedule(16 * h, 0.5, 3, 2))
        errs.append(abs(rep.measure - math.pi) / math.pi)
    assert errs[-1] <= 0.15


def test_capacitary_boundary_trivial_sets():
    d = GridDomain.box([-1, -1], [1, 1], 1 / 32)
    sched = RadiusSchedule(0.5, 0.5, 3, 2)
    assert capacitary_boundary(NodeSet.full(d), 0.5, sched).band.is_empty()
    m = np.zeros(d.shape, bool)
    m[32, 32] = True
    cell = capacitary_boundary(NodeSet(d, m), 0.5, sched)
    assert cell.band.is_empty()
    assert set_representative(NodeSet(d, m), sched).is_empty()


def test_capacitary_inside_dilated_measure_boundary():
    d = GridDomain.box([-1, -1], [1, 1], 1 / 32)
    p = d.points
    sched = RadiusSchedule(0.5, 0.5, 3, 2)
    sets = [np.sqrt((p ** 2).sum(-1)) < 0.5, p[..., 0] < 0.2,
            (np.abs(p[..., 0]) < 0.4) & (np.abs(p[..., 1]) < 0.3)]
    for m in sets:
        F = NodeSet(d, m)
        cap = capacitary_boundary(F, 0.5, sched).band
        meas = measure_boundary(F, sched)
        assert cap.issubset(dilate(meas, sched.radii[-3]))


def test_jump_classify_examples():
    sched = RadiusSchedule(0.5, 0.5, 3, 2)
    th = 3 * math.pi / 16
    s = P @ np.array([math.cos(th), math.sin(th)])
    u = ScalarField(D2, np.where(s > 1e-12, 3.0, np.where(s < -1e-12, 1.0, 2.0)))
    jc = jump_classify(u, (0.0, 0.0), sched)
    assert jc.is_jump and (jc.f_minus, jc.f_plus) == (1.0, 3.0)
    assert jc.direction == pytest.approx((math.cos(th), math.sin(th)))
    assert jc.midpoint_residual <= 2 * D2.spacing * 2.0
    th = 0.3
    s = P @ np.array([math.cos(th), math.sin(th)])
    u = ScalarField(D2, np.where(s > 1e-12, 1.0, np.where(s < -1e-12, 0.0, 0.5)))
    jc = jump_classify(u, (0.0, 0.0), sched)
    ang = math.atan2(jc.direction[1], jc.direction[0])
    assert jc.is_jump and abs(ang - th) <= math.pi / 16
    assert abs(jc.f_plus - 1) <= 0.1 and abs(jc.f_minus) <= 0.1
    assert not jump_classify(ScalarField(D2, np.sin(P[..., 0] + 2 * P[..., 1])), (0.0, 0.0), sched).is_jump
    checker = ScalarField(D2, np.sign(P[..., 0]) * np.sign(P[..., 1]))
    assert not jump_classify(checker, (0.0, 0.0), sched).is_jump


@given(st.floats(0.0, math.pi), st.floats(0.5, 3.0))
def test_jump_midpoint_identity(theta, gap):
    s = P @ np.array([math.cos(theta), math.sin(theta)])
    u = ScalarField(D2, np.where(s > 1e-12, gap, np.where(s < -1e-12, 0.0, gap / 2)))
    jc = jump_classify(u, (0.0, 0.0), RadiusSchedule(0.5, 0.5, 3, 2))
    if jc.is_jump:
        assert jc.midpoint_residual <= 2 * D2.spacing * abs(jc.f_plus - jc.f_minus)


def test_bv_certificate_examples():
    d = GridDomain.box([-1, -1], [1, 1], 1 / 32)
    p = d.points
    sched = RadiusSchedule(0.5, 0.5, 3, 2)
    u = ScalarField(d, np.sin(2 * p[..., 0]) + 0.5 * p[..., 1])
    grad = np.sqrt((2 * np.cos(2 * p[..., 0])) ** 2 + 0.25)
    nu = GridMeasure(ScalarField(d, 1.2 * (grad + 0.01)))
    pts = [(0.1 * i, -0.05 * i) for i in range(-4, 5)]
    rep = bv_certificate(u, nu, 0.1, pts, sched)
    assert rep.fraction_le_one == 1.0
    step = ScalarField(d, (p[..., 0] > 0).astype(float))
    leb = GridMeasure.lebesgue(d)
    on_line = [(0.0, y) for y in (-0.5, 0.0, 0.5)]
    off_line = [(0.5, y) for y in (-0.5, 0.0, 0.5)]
    rep = bv_certificate(step, leb, 0.1, on_line + off_line, sched)
    assert all(v > 1 for v in rep.values[:3]) and all(v <= 1 for v in rep.values[3:])
    assert bv_certificate(ScalarField(d, np.ones(d.shape)), leb, 0.1, pts, sched).fraction_le_one == 1.0
