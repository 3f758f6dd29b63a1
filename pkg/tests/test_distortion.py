import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from finecap.distortion import (BESICOVITCH, affine_map, cell_masses, distortion_profile, fine_distortion,
                                generalized_distortion, grows, image_diameter, image_volume, jump_map,
                                rank_experiment, variation_bound_check, variation_constant)
from finecap.errors import UndefinedAtCenter, ZeroMeasureBall
from finecap.grid import GridDomain, NodeSet, RadiusSchedule, ScalarField, VectorField
from finecap.measure import GridMeasure, SingularPart

DOM = GridDomain.box([-1, -1], [1, 1], 1 / 64)
SCHED = RadiusSchedule(0.5, 0.5, 4, 2)


def test_identity_is_exactly_one():
    prof = distortion_profile(affine_map(DOM, np.eye(2)), (0.0, 0.0), SCHED)
    assert prof.H == (1.0,) * 4
    assert prof.L == prof.l == SCHED.radii
    assert prof.tail_limsup_H == prof.tail_liminf_H == 1.0


def test_stretch_matrix():
    prof = distortion_profile(affine_map(DOM, np.diag([2.0, 1.0])), (0.0, 0.0), SCHED)
    assert prof.H == (2.0,) * 4


def test_rotation_distortion_bounded_by_condition():
    th = 0.3
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    A = R @ np.diag([3.0, 1.0])
    prof = distortion_profile(affine_map(DOM, A), (0.0, 0.0), SCHED)
    # L <= sigma_max r and l >= sigma_min r hold node by node
    assert all(1.0 <= H <= 3.0 * (1 + 1e-12) for H in prof.H)
    assert prof.tail_limsup_H == pytest.approx(3.0, rel=0.1)


def test_undefined_center():
    v = affine_map(DOM, np.eye(2)).values.copy()
    i = DOM.node_index((0.0, 0.0))
    v[i] = np.nan
    with pytest.raises(UndefinedAtCenter):
        distortion_profile(VectorField(DOM, v), (0.0, 0.0), SCHED)


def test_zero_image_distance_is_infinite():
    v = np.zeros(DOM.shape + (2,))
    prof = distortion_profile(VectorField(DOM, v), (0.0, 0.0), SCHED)
    assert all(math.isinf(H) for H in prof.H)


@given(st.integers(0, 2 ** 31 - 1))
def test_nested_restriction_lowers_distortion(seed):
    rng = np.random.default_rng(seed)
    d = GridDomain.box([-1, -1], [1, 1], 1 / 16)
    f = VectorField(d, rng.normal(size=d.shape + (2,)))
    c = d.node_index((0.0, 0.0))
    big = rng.uniform(size=d.shape) < 0.7
    small = big & (rng.uniform(size=d.shape) < 0.7)
    big[c] = small[c] = True
    sched = RadiusSchedule(1.0, 0.5, 3, 2)
    a = distortion_profile(f, (0.0, 0.0), sched, U=NodeSet(d, big))
    b = distortion_profile(f, (0.0, 0.0), sched, U=NodeSet(d, small))
    for La, la, Lb, lb in zip(a.L, a.l, b.L, b.l):
        assert Lb <= La and lb >= la
    for Ha, Hb in zip(a.H, b.H):
        assert Hb <= Ha


def _lattice_diameter(k):
    offs = [(i, j) for i in range(-k, k + 1) for j in range(-k, k + 1) if i * i + j * j < k * k]
    return max(math.dist(p, q) for p, q in itertools.combinations(offs, 2))


def test_generalized_identity_lebesgue():
    f = affine_map(DOM, np.eye(2))
    lip, hp = generalized_distortion(f, (0.0, 0.0), GridMeasure.lebesgue(DOM), SCHED)
    h = DOM.spacing
    for r, v in zip(SCHED.radii, lip.values):
        k = round(r / h)
        assert v == pytest.approx(0.5 * _lattice_diameter(k) / k, rel=1e-12)
    assert hp.values == (1.0,) * 4


@pytest.mark.parametrize("p", [-2, 1, 3])
def test_generalized_scaling_exact(p):
    rng = np.random.default_rng(p + 10)
    d = GridDomain.box([-1, -1], [1, 1], 1 / 32)
    A = rng.normal(size=(2, 2))
    f = affine_map(d, A)
    nu = GridMeasure(ScalarField(d, rng.uniform(0.5, 2.0, size=d.shape)))
    sched = RadiusSchedule(0.5, 0.5, 3, 2)
    c = 4.0 ** p
    lip1, h1 = generalized_distortion(f, (0.0, 0.0), nu, sched)
    lip2, h2 = generalized_distortion(f, (0.0, 0.0), nu.scaled(c), sched)
    assert lip2.values == tuple(v / c for v in lip1.values)
    assert h2.values == tuple(v * c ** -0.5 for v in h1.values)


def test_generalized_zero_measure_ball():
    nu = GridMeasure.lebesgue(DOM, 0.0)
    with pytest.raises(ZeroMeasureBall):
        generalized_distortion(affine_map(DOM, np.eye(2)), (0.0, 0.0), nu, SCHED)


def test_line_mass_drives_lip_to_zero():
    f = affine_map(DOM, np.array([[1.0, 0.5], [0.0, 1.0]]))
    nu = GridMeasure.lebesgue(DOM).with_parts(SingularPart.polyline([[-1, 0], [1, 0]], 50.0))
    sched = RadiusSchedule(0.5, 0.5, 4, 2)
    lip, _ = generalized_distortion(f, (0.0, 0.0), nu, sched)
    assert list(lip.values) == sorted(lip.values, reverse=True)
    assert lip.tail_min < 0.05


def test_image_diameter_against_pairs(rng):
    for shape in [(30, 2), (5, 2), (40, 3)]:
        p = rng.normal(size=shape)
        brute = max(math.dist(a, b) for a, b in itertools.combinations(p, 2))
        assert image_diameter(p) == pytest.approx(brute, rel=1e-12)
    line = np.outer(np.linspace(-1, 2, 17), [0.6, 0.8])
    assert image_diameter(line) == pytest.approx(3.0, rel=1e-12)
    assert image_diameter(np.zeros((4, 2))) == 0.0


def test_fine_distortion_full_rank_bounded():
    A = np.array([[2.0, 0.5], [0.3, 1.0]])
    s = np.linalg.svd(A, compute_uv=False)
    cond = s[0] / s[1]
    d = GridDomain.box([-0.5, -0.5], [0.5, 0.5], 1 / 64)
    prof = fine_distortion(affine_map(d, A), (0.0, 0.0), 0.5, 0.25, RadiusSchedule(0.25, 0.5, 3, 2))
    assert prof.tail_max <= 2 * cond
    assert all(c["removed_count"] == 0 for c in prof.extra["carving"])


def test_fine_distortion_rank_deficient_infinite():
    d = GridDomain.box([-0.5, -0.5], [0.5, 0.5], 1 / 64)
    prof = fine_distortion(affine_map(d, np.diag([1.0, 0.0])), (0.0, 0.0), 0.5, 0.25,
                           RadiusSchedule(0.25, 0.5, 3, 2))
    assert math.isinf(prof.tail_max)


def test_fine_distortion_removal_within_budget():
    d = GridDomain.box([-0.5, -0.5], [0.5, 0.5], 1 / 32)
    f = jump_map(d)
    sched = RadiusSchedule(0.5, 0.5, 3, 2)
    beta = 2.0
    prof = fine_distortion(f, (0.0, 0.0), beta, 0.25, sched)
    for r, c in zip(sched.radii, prof.extra["carving"]):
        assert c["removed_capacity"] <= beta * r
    assert any(c["removed_count"] > 0 for c in prof.extra["carving"])


def test_rank_experiment_dichotomy():
    full = [lv.tail for lv in rank_experiment(np.array([[1.0, 0.3], [0.2, 0.5]]), refinements=2)]
    A = np.array([[1.0, 0.3], [0.2, 0.5]])
    s = np.linalg.svd(A, compute_uv=False)
    assert max(full) <= 4 * s[0] / s[1]
    rank1 = [lv.tail for lv in rank_experiment(np.outer([0.8, -0.4], [0.37, 1.13]), refinements=3)]
    assert grows(rank1)
    assert all(b >= a for a, b in zip(rank1, rank1[1:]))
    jump = [lv.tail for lv in rank_experiment(jump=True, refinements=2)]
    assert grows(jump)


def test_grows():
    assert grows([1.0, 5.0, 10.0])
    assert not grows([1.0, 5.0, 9.0])
    assert grows([math.inf, math.inf])


def test_variation_constant():
    assert variation_constant(2, BESICOVITCH[2]) == 2 ** 6 * 2 * 19


def test_cell_masses_total(rng):
    d = GridDomain.box([0, 0], [1, 1], 1 / 16)
    nu = GridMeasure(ScalarField(d, rng.uniform(size=d.shape))).with_parts(
        SingularPart.polyline([[0.1, 0.2], [0.7, 0.9]], 2.0))
    m = cell_masses(nu)
    assert math.fsum(m.ravel()) == pytest.approx(nu.total_mass, rel=1e-12)


def test_image_volume():
    d = GridDomain.box([0, 0], [1, 1], 1 / 16)
    assert image_volume(affine_map(d, np.eye(2))) == pytest.approx(1.0, rel=1e-12)
    assert image_volume(affine_map(d, np.diag([2.0, 3.0]))) == pytest.approx(6.0, rel=1e-12)
    assert image_volume(affine_map(d, np.diag([1.0, 0.0]))) == 0.0


def test_variation_bound_identity_and_constant():
    d = GridDomain.box([0, 0], [1, 1], 1 / 32)
    sched = RadiusSchedule(0.5, 0.5, 3, 2)
    rep = variation_bound_check(affine_map(d, np.eye(2)), GridMeasure.lebesgue(d), sched)
    assert rep.lhs == pytest.approx(2.0, rel=0.05)
    assert rep.passed and rep.rhs > 100 * rep.lhs
    const = VectorField(d, np.ones(d.shape + (2,)))
    rep = variation_bound_check(const, GridMeasure.lebesgue(d), sched)
    assert rep.lhs == 0.0 and rep.passed


def test_variation_bound_split_uses_lip():
    d = GridDomain.box([0, 0], [1, 1], 1 / 32)
    sched = RadiusSchedule(0.5, 0.5, 3, 2)
    f = affine_map(d, np.diag([1.0, 0.0]))
    nu = GridMeasure.lebesgue(d)
    both = variation_bound_check(f, nu, sched)
    lip_only = variation_bound_check(f, nu, sched, split=NodeSet.full(d))
    h_only = variation_bound_check(f, nu, sched, split=NodeSet.empty(d))
    assert both.integral == lip_only.integral
    assert math.isinf(h_only.integral) and h_only.passed
