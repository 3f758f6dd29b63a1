import math
from fractions import Fraction

import numpy as np
import pytest

from finecap.bvtools import pointwise_variation_1d
from finecap.capacity import make_stencil, perimeter, total_variation
from finecap.corpus import (DEFAULT_B, CantorDistortion, by_tag, cantor_distortion_map, cantor_intervals,
                            cantor_neighborhood, cantor_vitali, standard_fields)
from finecap.errors import DepthUnresolvable, ScheduleViolatesBkSum


def _cantor_exact(t: Fraction, depth: int) -> Fraction:
    """Reference staircase in exact rational arithmetic."""
    acc = Fraction(0)
    for k in range(1, depth + 1):
        half = Fraction(1, 2 ** k)
        if Fraction(1, 3) <= t <= Fraction(2, 3):
            return acc + half
        if t > Fraction(2, 3):
            acc += half
            t = 3 * t - 2
        else:
            t = 3 * t
    return acc + Fraction(1, 2 ** depth) * t


def test_cantor_endpoints_and_symmetry():
    u = cantor_vitali(8, 1e-5)
    d = u.domain
    assert u.values[0] == 0.0 and u.values[-1] == 1.0
    assert u.values[d.node_index((0.5,))] == 0.5
    assert np.all(np.diff(u.values) >= 0)
    # symmetry u(1 - t) = 1 - u(t)
    assert np.allclose(u.values[::-1], 1 - u.values, atol=1e-15)


def test_cantor_against_rationals(rng):
    N = 3 ** 7 * 4
    u = cantor_vitali(6, 1 / N)
    for i in rng.integers(0, N + 1, size=200):
        assert u.values[i] == pytest.approx(float(_cantor_exact(Fraction(int(i), N), 6)), abs=1e-15)


def test_cantor_pointwise_variation_is_one():
    u = cantor_vitali(8, 1e-5)
    assert pointwise_variation_1d(u.values) == pytest.approx(1.0, abs=1e-9)


def test_cantor_depth_unresolvable():
    with pytest.raises(DepthUnresolvable):
        cantor_vitali(8, 1e-3)


def test_cantor_intervals():
    assert cantor_intervals(2).tolist() == [0, 2, 6, 8]


def test_neighborhood_matches_distance(rng):
    b = 0.004
    lo, hi = cantor_neighborhood(b)
    assert np.all(lo[1:] > hi[:-1])
    left = cantor_intervals(9) / 3 ** 9
    right = left + 3.0 ** -9
    for t in rng.uniform(0, 1, size=300):
        # distance to C up to 3^-9, far below the gap to b
        d = float(np.minimum(np.abs(t - left), np.abs(t - right)).min())
        inside = left <= t
        if np.any(inside & (t <= right)):
            d = 0.0
        if abs(d - b) < 3.0 ** -9:
            continue
        member = bool(np.any((lo < t) & (t < hi)))
        assert member == (d < b)


def test_distortion_map_properties():
    f, a, cd = cantor_distortion_map(3)
    d = f.domain
    g = cd.g(d.points[..., 1])
    assert g.min() >= 1.0
    assert np.allclose(f.values[..., 0], d.points[..., 0])
    col = f.values[0, :, 1]
    assert np.all(np.diff(col) > 0)
    assert np.allclose(a.density.values, g ** 2)
    # lower semicontinuity on the grid with one level of slack
    gg = cd.g(d.axes[1])
    nb = np.maximum(np.roll(gg, 1), np.roll(gg, -1))[1:-1]
    assert np.all(gg[1:-1] >= nb - 1)


@pytest.mark.parametrize("x2", [0.25, 1 / 3, 0.7])
def test_local_average_at_cantor_point(x2):
    cd = CantorDistortion(3, DEFAULT_B)
    for j in (1, 2, 3):
        b = DEFAULT_B[j - 1] if j > 1 else 0.05
        avg = (cd.f2(np.array(x2 + b)) - cd.f2(np.array(x2 - b))) / (2 * b)
        assert avg >= j * (1 - 1e-6)


def test_bk_sum_checked():
    with pytest.raises(ScheduleViolatesBkSum):
        CantorDistortion(3, [9.0 ** -j / 4 for j in (1, 2, 3)])
    with pytest.raises(ScheduleViolatesBkSum):
        CantorDistortion(2, [1.0, 2.0])
    with pytest.raises(ScheduleViolatesBkSum):
        CantorDistortion(4, DEFAULT_B)
    cd = CantorDistortion(3, DEFAULT_B)
    assert sum(cd.lengths[1:]) <= DEFAULT_B[0] and cd.lengths[2] <= DEFAULT_B[1]
    assert math.isfinite(cd.g_l2_squared)


def test_f2_is_integral_of_g():
    cd = CantorDistortion(2, DEFAULT_B[:2])
    t = np.linspace(0, 1, 200001)
    mid = 0.5 * (t[1:] + t[:-1])
    riemann = np.concatenate([[0.0], np.cumsum(cd.g(mid) * np.diff(t))])
    assert np.allclose(cd.f2(t), riemann, atol=1e-4)
    assert cd.f2(np.array(1.0)) == pytest.approx(1 + cd.lengths[1], rel=1e-12)


def test_catalog_ground_truth():
    cat = standard_fields()
    assert cat["stretch"].truth["distortion"] == 2.0
    disk = cat["disk"].build(1 / 64)
    assert perimeter(disk) == pytest.approx(cat["disk"].truth["perimeter"], rel=0.05)
    step = cat["step_1d"].build(1 / 64)
    assert total_variation(step) == pytest.approx(1.0, rel=1e-12)
    cb = cat["checkerboard"].build(1 / 64)
    # axis-aligned interfaces: the l1 stencil counts one crossing per node row (65 rows of width 1/64)
    l1 = make_stencil("l1-4", 2, 1 / 64)
    assert total_variation(cb, stencil=l1) == pytest.approx(cat["checkerboard"].truth["tv_interior"] * 65 / 64,
                                                            rel=1e-12)
    # cell-center sampling of the dust: each of the 16 pieces per axis loses at most one cell
    n = 2048
    c = (np.arange(n) + 0.5) / n
    pts = np.stack(np.meshgrid(c, c, indexing="ij"), axis=-1)
    area = cat["fat_cantor_dust"].func(pts).mean()
    assert area == pytest.approx(cat["fat_cantor_dust"].truth["area"], abs=4 * 16 / n)


def test_smooth_gradients_match_differences():
    for e in by_tag("smooth"):
        h = 1e-6
        p = np.array([[0.3, -0.2], [-0.5, 0.6]])
        grad = e.gradient(p)
        for k in range(2):
            step = np.zeros(2)
            step[k] = h
            fd = (e.func(p + step) - e.func(p - step)) / (2 * h)
            assert np.allclose(fd, grad[:, k], atol=1e-6)
