"""Uniform grids, sampled fields, node sets, balls and radius schedules.

Every limit ``r -> 0`` in the package is replaced by a finite dyadic radius
schedule; the limsup/liminf are reported as the max/min over the ``m``
smallest scheduled radii (see :func:`tail_estimates`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import BallOutside, BallUnresolvable, TooFewSamples

# Tolerance for deciding that a point sits on a lattice node, in units of h.
_NODE_SNAP = 1e-9


@dataclass(frozen=True)
class GridDomain:
    dim: int
    shape: tuple[int, ...]
    spacing: float
    origin: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "spacing", float(self.spacing))
        if len(self.shape) != self.dim or len(self.origin) != self.dim:
            raise ValueError("shape and origin must have dim entries")
        if min(self.shape) < 2:
            raise ValueError("every axis needs at least 2 nodes")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise ValueError("spacing must be positive and finite")

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float], h: float) -> "GridDomain":
        """Grid with nodes at ``lo + h*i`` covering ``[lo, hi]`` (hi snapped down)."""
        lo = tuple(float(a) for a in lo)
        shape = tuple(int(math.floor((b - a) / h + 1e-9)) + 1 for a, b in zip(lo, hi))
        return cls(len(lo), shape, h, lo)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(o + self.spacing * (s - 1) for o, s in zip(self.origin, self.shape))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(o + self.spacing * np.arange(s) for o, s in zip(self.origin, self.shape))

    @cached_property
    def points(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (dim,)``."""
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(grids, axis=-1)

    def fractional_index(self, point: Sequence[float]) -> np.ndarray:
        p = np.asarray(point, dtype=float).reshape(self.dim)
        return (p - np.asarray(self.origin)) / self.spacing

    def nearest_index(self, point: Sequence[float]) -> tuple[int, ...]:
        t = np.rint(self.fractional_index(point)).astype(int)
        t = np.clip(t, 0, np.asarray(self.shape) - 1)
        return tuple(int(v) for v in t)

    def node_index(self, point: Sequence[float]) -> tuple[int, ...] | None:
        """Index of the node at ``point``, or None when the point is off-lattice."""
        t = self.fractional_index(point)
        r = np.rint(t)
        if np.all(np.abs(t - r) < _NODE_SNAP) and np.all(r >= 0) and np.all(r < self.shape):
            return tuple(int(v) for v in r)
        return None

    def position(self, index: Sequence[int]) -> np.ndarray:
        return np.asarray(self.origin) + self.spacing * np.asarray(index, dtype=float)

    def contains(self, point: Sequence[float]) -> bool:
        t = self.fractional_index(point)
        return bool(np.all(t >= -_NODE_SNAP) and np.all(t <= np.asarray(self.shape) - 1 + _NODE_SNAP))

    def to_json(self) -> dict:
        return {"dim": self.dim, "shape": list(self.shape), "spacing": self.spacing, "origin": list(self.origin)}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    domain: GridDomain
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.domain.shape:
            v = v.reshape(self.domain.shape)
        if np.isnan(v).any():
            raise ValueError("scalar fields may hold +-inf but not NaN")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.values)

    def at(self, point: Sequence[float]) -> float:
        return float(self.values[self.domain.nearest_index(point)])


@dataclass(frozen=True, eq=False)
class VectorField:
    """Vector samples; NaN in any component marks the node as undefined."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        v = v.reshape(self.domain.shape + (-1,))
        object.__setattr__(self, "values", _frozen(v))

    @property
    def components(self) -> int:
        return self.values.shape[-1]

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.values).any(axis=-1)

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.domain, self.values[..., i])


@dataclass(frozen=True, eq=False)
class NodeSet:
    domain: GridDomain
    mask: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != self.domain.shape:
            m = m.reshape(self.domain.shape)
        object.__setattr__(self, "mask", _frozen(m))

    @classmethod
    def empty(cls, domain: GridDomain) -> "NodeSet":
        return cls(domain, np.zeros(domain.shape, dtype=bool))

    @classmethod
    def full(cls, domain: GridDomain) -> "NodeSet":
        return cls(domain, np.ones(domain.shape, dtype=bool))

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    def is_empty(self) -> bool:
        return not self.mask.any()

    def __or__(self, other: "NodeSet") -> "NodeSet":
        return NodeSet(self.domain, self.mask | other.mask)

    def __and__(self, other: "NodeSet") -> "NodeSet":
        return NodeSet(self.domain, self.mask & other.mask)

    def __sub__(self, other: "NodeSet") -> "NodeSet":
        return NodeSet(self.domain, self.mask & ~other.mask)

    def __invert__(self) -> "NodeSet":
        return NodeSet(self.domain, ~self.mask)

    def issubset(self, other: "NodeSet") -> bool:
        return not (self.mask & ~other.mask).any()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, NodeSet) and self.domain == other.domain and np.array_equal(self.mask, other.mask)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")


def ball_window(domain: GridDomain, ball: Ball) -> tuple[tuple[slice, ...], np.ndarray]:
    """Bounding-box slices of the ball and the strict-ball mask inside them.

    Membership is tested in fractional index space, ``sum((i - t)^2) < (r/h)^2``,
    so node-centred balls are decided exactly for dyadic radii.
    """
    if ball.radius < domain.spacing * (1 - 1e-12):
        raise BallUnresolvable(f"radius {ball.radius} below grid spacing {domain.spacing}")
    if len(ball.center) != domain.dim:
        raise ValueError("ball center has the wrong dimension")
    t = domain.fractional_index(ball.center)
    rh = ball.radius / domain.spacing
    lo = np.maximum(np.ceil(t - rh - 1e-12).astype(int), 0)
    hi = np.minimum(np.floor(t + rh + 1e-12).astype(int), np.asarray(domain.shape) - 1)
    if np.any(hi < lo):
        raise BallOutside("ball contains no grid node")
    slices = tuple(slice(int(a), int(b) + 1) for a, b in zip(lo, hi))
    d2 = np.zeros(tuple(int(b - a + 1) for a, b in zip(lo, hi)))
    for ax in range(domain.dim):
        idx = np.arange(lo[ax], hi[ax] + 1) - t[ax]
        shp = [1] * domain.dim
        shp[ax] = -1
        d2 = d2 + (idx ** 2).reshape(shp)
    local = d2 < rh * rh
    return slices, local


def ball_nodes(domain: GridDomain, ball: Ball) -> NodeSet:
    """Nodes ``p`` with ``|p - center| < radius``."""
    if not domain.contains(ball.center):
        raise BallOutside("ball center outside the domain bounding box")
    slices, local = ball_window(domain, ball)
    if not local.any():
        raise BallOutside("ball contains no grid node")
    mask = np.zeros(domain.shape, dtype=bool)
    mask[slices] = local
    return NodeSet(domain, mask)


@lru_cache(maxsize=256)
def _offsets_cached(dim: int, rh: float, closed: bool) -> np.ndarray:
    k = int(math.floor(rh + 1e-12))
    rng = np.arange(-k, k + 1)
    grids = np.meshgrid(*([rng] * dim), indexing="ij")
    offs = np.stack([g.ravel() for g in grids], axis=1)
    d2 = (offs ** 2).sum(axis=1)
    keep = d2 <= rh * rh if closed else d2 < rh * rh
    out = offs[keep]
    out.flags.writeable = False
    return out


def ball_offsets(dim: int, radius_over_h: float, closed: bool = False) -> np.ndarray:
    """Integer offsets ``k`` with ``|k| < radius_over_h`` (``<=`` when closed)."""
    return _offsets_cached(dim, float(radius_over_h), bool(closed))


def disk_footprint(dim: int, radius_over_h: float, closed: bool = False) -> np.ndarray:
    """Boolean kernel of the lattice ball, centred in an odd-sized array."""
    k = int(math.floor(radius_over_h + 1e-12))
    rng = np.arange(-k, k + 1)
    d2 = np.zeros((2 * k + 1,) * dim)
    for ax in range(dim):
        shp = [1] * dim
        shp[ax] = -1
        d2 = d2 + (rng ** 2).reshape(shp)
    return d2 <= radius_over_h ** 2 if closed else d2 < radius_over_h ** 2


def oscillation(w: ScalarField, S: NodeSet) -> float:
    """``sup |w(p) - w(q)|`` over ``S``; infinite when ``S`` carries an infinite value."""
    vals = w.values[S.mask]
    if vals.size <= 1:
        if vals.size == 1 and not np.isfinite(vals[0]):
            return math.inf
        return 0.0
    if not np.all(np.isfinite(vals)):
        return math.inf
    return float(vals.max() - vals.min())


def tail_estimates(profile: Iterable[tuple[float, float]], window: int) -> tuple[float, float]:
    """(max, min) of the values at the ``window`` smallest radii.

    NaN samples (undefined at that radius) are skipped.
    """
    prof = sorted(((float(r), float(v)) for r, v in profile), key=lambda rv: rv[0])
    if window < 1 or len(prof) < window:
        raise TooFewSamples(f"need {window} samples, have {len(prof)}")
    vals = [v for _, v in prof[:window] if not math.isnan(v)]
    if not vals:
        return math.nan, math.nan
    return max(vals), min(vals)


@dataclass(frozen=True)
class RadiusSchedule:
    """Radii ``r0 * ratio**k`` for ``k = 1..count``; tails use the last ``window``."""

    r0: float
    ratio: float = 0.5
    count: int = 4
    window: int = 2

    def __post_init__(self) -> None:
        if not self.r0 > 0:
            raise ValueError("r0 must be positive")
        if not 0 < self.ratio < 1:
            raise ValueError("ratio must lie in (0, 1)")
        if self.count < 3:
            raise ValueError("schedule needs at least 3 radii")
        if not 2 <= self.window <= self.count:
            raise ValueError("tail window must satisfy 2 <= m <= K")

    @property
    def radii(self) -> tuple[float, ...]:
        return tuple(self.r0 * self.ratio ** k for k in range(1, self.count + 1))

    @property
    def tail_radii(self) -> tuple[float, ...]:
        return self.radii[-self.window:]

    @property
    def smallest(self) -> float:
        return self.r0 * self.ratio ** self.count

    def check(self, domain: GridDomain) -> None:
        if self.smallest < 2 * domain.spacing * (1 - 1e-12):
            raise BallUnresolvable(
                f"smallest radius {self.smallest} is below 2h = {2 * domain.spacing}"
            )

    def extended(self, extra: int) -> "RadiusSchedule":
        return RadiusSchedule(self.r0, self.ratio, self.count + extra, self.window)

    def to_json(self) -> dict:
        return {"r0": self.r0, "ratio": self.ratio, "K": self.count, "m": self.window}


@dataclass(frozen=True)
class DensityProfile:
    radii: tuple[float, ...]
    values: tuple[float, ...]
    window: int = 2
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.radii) != len(self.values):
            raise ValueError("radii and values differ in length")
        if any(b >= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("radii must be strictly decreasing")

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.radii, self.values))

    @cached_property
    def _tails(self) -> tuple[float, float]:
        return tail_estimates(self.samples, self.window)

    @property
    def tail_max(self) -> float:
        return self._tails[0]

    @property
    def tail_min(self) -> float:
        return self._tails[1]

    def to_json(self) -> dict:
        return {
            "samples": [[r, v] for r, v in self.samples],
            "tail_max": self.tail_max,
            "tail_min": self.tail_min,
            "window": self.window,
        }
