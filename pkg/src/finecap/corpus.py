"""Deterministic test objects: the Cantor staircase, the Cantor distortion map
and a catalog of fields with known gradients, variations and perimeters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DepthUnresolvable, ScheduleViolatesBkSum
from .grid import GridDomain, NodeSet, ScalarField, VectorField
from .measure import GridMeasure


def _unit_lattice(h: float) -> int:
    N = int(round(1.0 / h))
    if N < 1 or abs(N * h - 1.0) > 1e-9:
        raise ValueError("h must divide 1")
    return N


def cantor_vitali_values(i: np.ndarray, N: int, depth: int) -> np.ndarray:
    """Staircase at ``t = i / N`` after ``depth`` ternary steps, with integer digit extraction.

    The value is exact (dyadic) on the level-``depth`` gaps and linear on the
    remaining intervals of length ``3^-depth``.
    """
    num = np.asarray(i, dtype=np.int64).copy()  # t = num / N on the current subinterval
    acc = np.zeros(num.shape)
    done = np.zeros(num.shape, dtype=bool)
    for k in range(1, depth + 1):
        half = 0.5 ** k
        middle = ~done & (3 * num >= N) & (3 * num <= 2 * N)  # closed middle third: constant
        right = ~done & (3 * num > 2 * N)
        acc = np.where(middle | right, acc + half, acc)
        done |= middle
        num = np.where(done, num, np.where(right, 3 * num - 2 * N, 3 * num))
    return np.where(done, acc, acc + 0.5 ** depth * num / N)


def cantor_vitali(depth: int, h: float) -> ScalarField:
    """Middle-thirds staircase on ``[0, 1]`` sampled at ``t = i h``."""
    if 3.0 ** (-depth) < h:
        raise DepthUnresolvable(f"3^-{depth} is below the spacing {h}")
    N = _unit_lattice(h)
    dom = GridDomain(1, (N + 1,), 1.0 / N, (0.0,))
    return ScalarField(dom, cantor_vitali_values(np.arange(N + 1), N, depth))


def cantor_intervals(level: int) -> np.ndarray:
    """Left endpoints (as integers over ``3^level``) of the level-``level`` Cantor intervals."""
    left = np.zeros(1, dtype=np.int64)
    for _ in range(level):
        left = np.concatenate([3 * left, 3 * left + 2])
    return np.sort(left)


def cantor_neighborhood(b: float) -> tuple[np.ndarray, np.ndarray]:
    """``{t in (0, 1): d(t, C) < b}`` as disjoint open intervals ``(lo, hi)``.

    Gaps of length at most ``2 b`` are covered entirely, so the set is the
    ``b``-expansion of the Cantor intervals of the first level whose gaps are
    all longer than ``2 b``.
    """
    if b >= 0.5:
        return np.array([0.0]), np.array([1.0])
    m = 0
    while 3.0 ** (-(m + 1)) > 2 * b:
        m += 1
    scale = 3 ** m
    left = cantor_intervals(m)
    lo = np.maximum(left / scale - b, 0.0)
    hi = np.minimum((left + 1) / scale + b, 1.0)
    return lo, hi


@dataclass
class CantorDistortion:
    """``f(x1, x2) = (x1, int_0^x2 g)`` with ``g = sum_j chi_{U_j}`` truncated at ``J`` levels.

    ``U_1 = (0, 1)`` and ``U_j`` is the ``b_j``-neighborhood of the middle
    thirds Cantor set. The weight ``a = g(x2)^2`` makes every distortion
    number normalized by ``a`` bounded.
    """

    levels: int
    b: tuple[float, ...]
    intervals: list[tuple[np.ndarray, np.ndarray]] = field(init=False, repr=False)
    lengths: tuple[float, ...] = field(init=False)

    def __post_init__(self) -> None:
        self.b = tuple(float(v) for v in self.b)
        if self.levels < 1:
            raise ValueError("need at least one level")
        if len(self.b) < self.levels:
            raise ScheduleViolatesBkSum(f"{self.levels} levels need {self.levels} values of b")
        if any(not (y < x) for x, y in zip(self.b, self.b[1:])) or self.b[-1] <= 0:
            raise ScheduleViolatesBkSum("b must be positive and strictly decreasing")
        self.intervals = [(np.array([0.0]), np.array([1.0]))]
        for j in range(2, self.levels + 1):
            self.intervals.append(cantor_neighborhood(self.b[j - 1]))
        self.lengths = tuple(math.fsum(hi - lo) for lo, hi in self.intervals)
        for j in range(1, self.levels + 1):
            tail = math.fsum(self.lengths[j:])
            if tail > self.b[j - 1]:
                raise ScheduleViolatesBkSum(f"sum of |U_k| for k > {j} is {tail} > b_{j} = {self.b[j - 1]}")
        self._cum = []
        for lo, hi in self.intervals:
            self._cum.append(np.concatenate([[0.0], np.cumsum(hi - lo)]))

    @property
    def g_l2_squared(self) -> float:
        """``int_0^1 g^2``: ``g = k`` on ``U_k minus U_(k+1)``."""
        L = list(self.lengths) + [0.0]
        return math.fsum(k * k * (L[k - 1] - L[k]) for k in range(1, self.levels + 1))

    def g(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for lo, hi in self.intervals:
            i = np.searchsorted(lo, t, side="left") - 1
            ok = i >= 0
            ii = np.where(ok, i, 0)
            out += (ok & (t > lo[ii]) & (t < hi[ii])).astype(float)
        return out

    def f2(self, t: np.ndarray) -> np.ndarray:
        """``int_0^t g``, exact up to rounding of the interval endpoints."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for (lo, hi), cum in zip(self.intervals, self._cum):
            i = np.searchsorted(lo, t, side="right") - 1
            ok = i >= 0
            ii = np.where(ok, i, 0)
            part = cum[ii] + np.clip(t - lo[ii], 0.0, hi[ii] - lo[ii])
            out += np.where(ok, part, 0.0)
        return out

    def field(self, domain: GridDomain) -> VectorField:
        p = domain.points
        return VectorField(domain, np.stack([p[..., 0], self.f2(p[..., 1])], axis=-1))

    def weight(self, domain: GridDomain) -> GridMeasure:
        """``a = g(x2)^2`` as a cell density."""
        return GridMeasure(ScalarField(domain, self.g(domain.points[..., 1]) ** 2))

    def local_domain(self, center: Sequence[float], half_width: float, h: float) -> GridDomain:
        """Square grid of spacing ``h`` with ``center`` as a node."""
        k = int(round(half_width / h))
        return GridDomain(2, (2 * k + 1, 2 * k + 1), h, tuple(c - k * h for c in center))

    def to_json(self) -> dict:
        return {"levels": self.levels, "b": list(self.b), "lengths": list(self.lengths),
                "g_l2_squared": self.g_l2_squared}


DEFAULT_B = (1.0, 1e-2, 1e-7)


def cantor_distortion_map(levels: int, b_schedule: Sequence[float] | None = None,
                          domain: GridDomain | None = None) -> tuple[VectorField, GridMeasure, CantorDistortion]:
    """The map and its weight ``a`` on ``domain`` (default: cell centers of the unit square, h = 1/64)."""
    cd = CantorDistortion(levels, tuple(b_schedule) if b_schedule is not None else DEFAULT_B[:max(levels, 1)])
    if domain is None:
        h = 1 / 64
        domain = GridDomain(2, (64, 64), h, (h / 2, h / 2))
    return cd.field(domain), cd.weight(domain), cd


# catalog


@dataclass(frozen=True)
class CorpusEntry:
    """A test object with analytic ground truth.

    ``func`` maps an array of points ``(..., dim)`` to values (``(...)`` for
    scalars and sets, ``(..., dim)`` for maps); ``gradient`` does the same
    for the derivative when it exists.
    """

    name: str
    kind: str  # "scalar", "set" or "map"
    dim: int
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    func: Callable[[np.ndarray], np.ndarray]
    truth: dict
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    tags: tuple[str, ...] = ()

    def domain(self, h: float) -> GridDomain:
        return GridDomain.box(list(self.lo), list(self.hi), h)

    def build(self, h: float):
        dom = self.domain(h)
        v = self.func(dom.points)
        if self.kind == "scalar":
            return ScalarField(dom, v)
        if self.kind == "set":
            return NodeSet(dom, v.astype(bool))
        return VectorField(dom, v)


def _r(p):
    return np.sqrt((p ** 2).sum(axis=-1))


def _smooth_entries() -> list[CorpusEntry]:
    box = ((-1.0, -1.0), (1.0, 1.0))
    out = [
        CorpusEntry("plane", "scalar", 2, *box, lambda p: 0.7 * p[..., 0] - 0.4 * p[..., 1],
                    {"gradient": [0.7, -0.4]},
                    lambda p: np.broadcast_to(np.array([0.7, -0.4]), p.shape), ("smooth",)),
        CorpusEntry("saddle", "scalar", 2, *box, lambda p: p[..., 0] * p[..., 1],
                    {"gradient": "(x2, x1)"},
                    lambda p: np.stack([p[..., 1], p[..., 0]], axis=-1), ("smooth",)),
        CorpusEntry("bump", "scalar", 2, *box, lambda p: np.exp(-2.0 * (p ** 2).sum(axis=-1)),
                    {"gradient": "-4 x exp(-2|x|^2)", "max": 1.0},
                    lambda p: -4.0 * p * np.exp(-2.0 * (p ** 2).sum(axis=-1))[..., None], ("smooth",)),
        CorpusEntry("waves", "scalar", 2, *box, lambda p: np.sin(2 * p[..., 0]) * np.cos(p[..., 1]),
                    {"gradient": "(2 cos 2x1 cos x2, -sin 2x1 sin x2)"},
                    lambda p: np.stack([2 * np.cos(2 * p[..., 0]) * np.cos(p[..., 1]),
                                        -np.sin(2 * p[..., 0]) * np.sin(p[..., 1])], axis=-1), ("smooth",)),
        CorpusEntry("cubic", "scalar", 2, *box, lambda p: p[..., 0] ** 3 / 3 + 0.5 * p[..., 1] ** 2,
                    {"gradient": "(x1^2, x2)"},
                    lambda p: np.stack([p[..., 0] ** 2, p[..., 1]], axis=-1), ("smooth",)),
    ]
    return out


def _bv_entries() -> list[CorpusEntry]:
    R = 0.5
    k = 4
    alpha = 0.5
    return [
        CorpusEntry("step_1d", "scalar", 1, (0.0,), (1.0,), lambda p: (p[..., 0] >= 0.5).astype(float),
                    {"tv": 1.0, "jump_at": 0.5, "jump": [0.0, 1.0]}, tags=("bv",)),
        CorpusEntry("disk", "set", 2, (-1.0, -1.0), (1.0, 1.0), lambda p: _r(p) < R,
                    {"radius": R, "perimeter": 2 * math.pi * R, "area": math.pi * R * R}, tags=("bv", "set")),
        CorpusEntry("disk_indicator", "scalar", 2, (-1.0, -1.0), (1.0, 1.0), lambda p: (_r(p) < R).astype(float),
                    {"radius": R, "tv": 2 * math.pi * R, "l1": math.pi * R * R}, tags=("bv",)),
        CorpusEntry("half_plane_step", "scalar", 2, (-1.0, -1.0), (1.0, 1.0),
                    lambda p: np.where(p[..., 1] >= 0, 1.0, -1.0),
                    {"tv": 4.0, "jump_line": "x2 = 0", "jump": [-1.0, 1.0]}, tags=("bv",)),
        CorpusEntry("checkerboard", "scalar", 2, (0.0, 0.0), (1.0, 1.0),
                    lambda p: ((np.floor(p[..., 0] * k - 1e-12).clip(0) + np.floor(p[..., 1] * k - 1e-12).clip(0)) % 2
                               ).astype(float),
                    {"squares": k, "tv_interior": 2.0 * (k - 1)}, tags=("bv",)),
        CorpusEntry("radial_singularity", "scalar", 2, (-1.0, -1.0), (1.0, 1.0),
                    lambda p: np.where(_r(p) > 0, _r(p), 1.0) ** (-alpha) * np.where(_r(p) > 0, 1.0, math.inf),
                    {"alpha": alpha, "value_at_origin": math.inf,
                     "l1_unit_disk": 2 * math.pi / (2 - alpha)}, tags=("bv", "singular")),
        CorpusEntry("fat_cantor_dust", "set", 2, (0.0, 0.0), (1.0, 1.0),
                    lambda p: _fat_cantor(p[..., 0]) & _fat_cantor(p[..., 1]),
                    {"area": _fat_cantor_measure() ** 2, "levels": FAT_CANTOR_LEVELS}, tags=("set",)),
    ]


FAT_CANTOR_LEVELS = 4


def _fat_cantor_pieces() -> list[tuple[float, float]]:
    """Smith-Volterra-Cantor construction: remove the middle ``4^-k`` of each piece at step ``k``."""
    pieces = [(0.0, 1.0)]
    for k in range(1, FAT_CANTOR_LEVELS + 1):
        gap = 4.0 ** (-k)
        nxt = []
        for a, b in pieces:
            m = 0.5 * (a + b)
            nxt += [(a, m - gap / 2), (m + gap / 2, b)]
        pieces = nxt
    return pieces


def _fat_cantor(t: np.ndarray) -> np.ndarray:
    out = np.zeros(t.shape, dtype=bool)
    for a, b in _fat_cantor_pieces():
        out |= (t >= a) & (t <= b)
    return out


def _fat_cantor_measure() -> float:
    return math.fsum(b - a for a, b in _fat_cantor_pieces())


def _map_entries() -> list[CorpusEntry]:
    box = ((-1.0, -1.0), (1.0, 1.0))
    D = np.diag([2.0, 1.0])
    u, v = np.array([0.8, -0.4]), np.array([0.37, 1.13])
    return [
        CorpusEntry("identity", "map", 2, *box, lambda p: p.copy(),
                    {"singular_values": [1.0, 1.0], "distortion": 1.0, "rank": 2}, tags=("map",)),
        CorpusEntry("stretch", "map", 2, *box, lambda p: p @ D.T,
                    {"singular_values": [2.0, 1.0], "distortion": 2.0, "rank": 2}, tags=("map",)),
        CorpusEntry("rank_one", "map", 2, *box, lambda p: np.outer(p.reshape(-1, 2) @ v, u).reshape(p.shape),
                    {"rank": 1, "distortion": math.inf}, tags=("map",)),
        CorpusEntry("jump_map", "map", 2, *box, lambda p: np.stack([p[..., 0], np.sign(p[..., 1])], axis=-1),
                    {"rank": 1, "jump": 2.0, "jump_line": "x2 = 0"}, tags=("map",)),
    ]


def standard_fields() -> dict[str, CorpusEntry]:
    """Catalog of named test objects with their analytic ground truth."""
    return {e.name: e for e in _smooth_entries() + _bv_entries() + _map_entries()}


def by_tag(tag: str) -> list[CorpusEntry]:
    return [e for e in standard_fields().values() if tag in e.tags]
