"""Grid measures: a cell density plus weighted segment or point masses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BallOutside, NoAdmissibleCandidate
from .grid import Ball, GridDomain, NodeSet, ScalarField, ball_nodes


@dataclass(frozen=True, eq=False)
class SingularPart:
    """``weight * H^{n-1}`` restricted to segments (2D/3D) or points (1D).

    ``segments`` has shape ``(k, 2, dim)``; in 1D each "segment" is a point
    stored with both endpoints equal and the part is a counting measure.
    """

    segments: np.ndarray
    weight: float

    def __post_init__(self) -> None:
        s = np.asarray(self.segments, dtype=float)
        if s.ndim != 3 or s.shape[1] != 2:
            raise ValueError("segments must have shape (k, 2, dim)")
        if not (self.weight >= 0 and math.isfinite(self.weight)):
            raise ValueError("singular weight must be finite and nonnegative")
        s = s.copy()
        s.flags.writeable = False
        object.__setattr__(self, "segments", s)
        object.__setattr__(self, "weight", float(self.weight))

    @classmethod
    def polyline(cls, vertices: Sequence[Sequence[float]], weight: float) -> "SingularPart":
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or len(v) < 2:
            raise ValueError("a polyline needs at least two vertices")
        return cls(np.stack([v[:-1], v[1:]], axis=1), weight)

    @classmethod
    def points(cls, pts: Sequence[float], weight: float) -> "SingularPart":
        p = np.asarray(pts, dtype=float).reshape(-1, 1)
        return cls(np.stack([p, p], axis=1), weight)

    @property
    def dim(self) -> int:
        return self.segments.shape[2]

    @property
    def is_points(self) -> bool:
        return self.dim == 1

    @property
    def length(self) -> float:
        if self.is_points:
            return float(len(self.segments))
        d = self.segments[:, 1] - self.segments[:, 0]
        return math.fsum(np.sqrt((d * d).sum(axis=1)))

    @property
    def mass(self) -> float:
        return self.weight * self.length

    def scaled(self, c: float) -> "SingularPart":
        return SingularPart(self.segments, self.weight * c)

    def to_json(self) -> dict:
        if self.is_points:
            return {"points": self.segments[:, 0, 0].tolist(), "weight": self.weight}
        return {"segments": self.segments.tolist(), "weight": self.weight}


@dataclass(frozen=True, eq=False)
class GridMeasure:
    density: ScalarField
    singular_parts: tuple[SingularPart, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        v = self.density.values
        if not np.all(np.isfinite(v)) or (v < 0).any():
            raise ValueError("density must be finite and nonnegative")
        parts = tuple(self.singular_parts)
        for p in parts:
            if p.dim != self.domain.dim:
                raise ValueError("singular part dimension differs from the domain")
        object.__setattr__(self, "singular_parts", parts)

    @classmethod
    def lebesgue(cls, domain: GridDomain, c: float = 1.0) -> "GridMeasure":
        return cls(ScalarField(domain, np.full(domain.shape, float(c))))

    @classmethod
    def from_density(cls, density: np.ndarray | ScalarField, domain: GridDomain | None = None,
                     parts: Iterable[SingularPart] = ()) -> "GridMeasure":
        if not isinstance(density, ScalarField):
            density = ScalarField(domain, density)
        return cls(density, tuple(parts))

    @property
    def domain(self) -> GridDomain:
        return self.density.domain

    def scaled(self, c: float) -> "GridMeasure":
        if c < 0:
            raise ValueError("measures scale by nonnegative factors only")
        return GridMeasure(ScalarField(self.domain, self.density.values * c),
                           tuple(p.scaled(c) for p in self.singular_parts))

    def with_parts(self, *parts: SingularPart) -> "GridMeasure":
        return GridMeasure(self.density, self.singular_parts + tuple(parts))

    @property
    def total_mass(self) -> float:
        ac = math.fsum(self.density.values.ravel()) * self.domain.cell_volume
        return ac + math.fsum(p.mass for p in self.singular_parts)


def _chord_in_ball(seg: np.ndarray, center: np.ndarray, r: float) -> np.ndarray:
    """Length of each segment inside the open ball (vectorized quadratic clip)."""
    a = seg[:, 0] - center
    d = seg[:, 1] - seg[:, 0]
    L2 = (d * d).sum(axis=1)
    out = np.zeros(len(seg))
    ok = L2 > 0
    b = (a[ok] * d[ok]).sum(axis=1)
    c = (a[ok] * a[ok]).sum(axis=1) - r * r
    disc = b * b - L2[ok] * c
    pos = disc > 0
    sq = np.sqrt(np.where(pos, disc, 0.0))
    t0 = np.clip((-b - sq) / L2[ok], 0.0, 1.0)
    t1 = np.clip((-b + sq) / L2[ok], 0.0, 1.0)
    out[ok] = np.where(pos, (t1 - t0) * np.sqrt(L2[ok]), 0.0)
    return out


def _length_in_cells(seg: np.ndarray, domain: GridDomain, mask: np.ndarray) -> float:
    """Length of segments inside the union of half-open node cells selected by ``mask``.

    Cells are ``[p - h/2, p + h/2)`` per axis, so they tile space and a segment
    lying on a cell face is counted once.
    """
    h = domain.spacing
    org = np.asarray(domain.origin)
    total = []
    for p, q in seg:
        d = q - p
        L = float(np.sqrt((d * d).sum()))
        if L == 0:
            continue
        # index range of cells the segment can touch
        lo_f = (np.minimum(p, q) - org) / h + 0.5
        hi_f = (np.maximum(p, q) - org) / h + 0.5
        lo = np.maximum(np.floor(lo_f).astype(int), 0)
        hi = np.minimum(np.floor(hi_f).astype(int), np.asarray(domain.shape) - 1)
        if np.any(hi < lo):
            continue
        sub = tuple(slice(a, b + 1) for a, b in zip(lo, hi))
        idx = np.argwhere(mask[sub]) + lo
        if len(idx) == 0:
            continue
        cell_lo = org + (idx - 0.5) * h
        cell_hi = cell_lo + h
        t0 = np.zeros(len(idx))
        t1 = np.ones(len(idx))
        alive = np.ones(len(idx), dtype=bool)
        for ax in range(domain.dim):
            if d[ax] == 0:
                alive &= (p[ax] >= cell_lo[:, ax]) & (p[ax] < cell_hi[:, ax])
            else:
                a = (cell_lo[:, ax] - p[ax]) / d[ax]
                b = (cell_hi[:, ax] - p[ax]) / d[ax]
                t0 = np.maximum(t0, np.minimum(a, b))
                t1 = np.minimum(t1, np.maximum(a, b))
        span = np.where(alive, np.clip(t1 - t0, 0.0, None), 0.0)
        total.append(float(span.sum()) * L)
    return math.fsum(total)


def _points_in_cells(pts: np.ndarray, domain: GridDomain, mask: np.ndarray) -> int:
    h = domain.spacing
    f = (pts - domain.origin[0]) / h + 0.5
    i = np.floor(f).astype(int)
    ok = (i >= 0) & (i < domain.shape[0])
    return int(mask[i[ok]].sum())


def measure_of(nu: GridMeasure, region: Ball | NodeSet) -> float:
    """``nu(region)``: density over the region's nodes plus clipped singular mass.

    Ball regions clip singular supports against the open ball; node-set
    regions clip against the union of the nodes' cells.
    """
    dom = nu.domain
    if isinstance(region, Ball):
        try:
            nodes = ball_nodes(dom, region)
        except BallOutside:
            if not _ball_meets_box(dom, region):
                raise
            nodes = NodeSet.empty(dom)
    else:
        nodes = region
    terms = [math.fsum(nu.density.values[nodes.mask]) * dom.cell_volume]
    for part in nu.singular_parts:
        if part.weight == 0:
            continue
        if isinstance(region, Ball):
            c = np.asarray(region.center)
            if part.is_points:
                n = int((np.abs(part.segments[:, 0, 0] - c[0]) < region.radius).sum())
                terms.append(part.weight * n)
            else:
                terms.append(part.weight * math.fsum(_chord_in_ball(part.segments, c, region.radius)))
        else:
            if part.is_points:
                terms.append(part.weight * _points_in_cells(part.segments[:, 0, 0], dom, nodes.mask))
            else:
                terms.append(part.weight * _length_in_cells(part.segments, dom, nodes.mask))
    return math.fsum(terms)


def _ball_meets_box(domain: GridDomain, ball: Ball) -> bool:
    c = np.asarray(ball.center)
    nearest = np.clip(c, domain.origin, domain.upper)
    return float(np.sqrt(((nearest - c) ** 2).sum())) < ball.radius


def tv_density_measure(u: ScalarField, stencil=None) -> GridMeasure:
    """Cell density whose node-set masses equal the half-weighted TV of ``u``.

    Each stencil edge splits ``w|u_p - u_q|`` evenly between its endpoints, so
    ``measure_of(nu, S) == total_variation(u, window=S)`` for node sets ``S``.
    """
    from .capacity import _pair_slices, default_stencil

    dom = u.domain
    st = stencil or default_stencil(dom)
    v = u.values
    acc = np.zeros(dom.shape)
    for o, w in zip(st.offsets, st.weights):
        sa, sb = _pair_slices(dom.shape, o)
        d = 0.5 * w * np.abs(v[sa] - v[sb])
        acc[sa] += d
        acc[sb] += d
    return GridMeasure(ScalarField(dom, acc / dom.cell_volume))


@dataclass
class ClassMReport:
    worst_ratio: float
    ratios: list[float]
    admissible: list[int]
    skipped: list[int]

    def to_json(self) -> dict:
        return {"worst_ratio": self.worst_ratio, "ratios": self.ratios,
                "admissible": self.admissible, "skipped": self.skipped}


def class_m_diagnostic(nu: GridMeasure, W: NodeSet, delta: float, candidates: Sequence[NodeSet],
                       r: float, stencil=None) -> ClassMReport:
    """Largest ``nu(A & W) / (delta nu(W))`` over candidates meeting the capacity test.

    A candidate is admissible when ``capa1(B(x, r) & A) < delta r^(n-1)`` for
    every node ``x`` of ``W``. The result is a lower bound for the class
    constant of ``nu``, never a membership certificate.
    """
    from .capacity import capa1, single_node_capacity

    if delta <= 0:
        raise ValueError("delta must be positive")
    dom = nu.domain
    limit = delta * r ** (dom.dim - 1)
    _, node_cap = single_node_capacity(dom, stencil)
    nuW = measure_of(nu, W)
    ratios, adm, skipped = [], [], []
    for k, A in enumerate(candidates):
        if _admissible(A, W, r, limit, node_cap, stencil, capa1):
            num = measure_of(nu, A & W)
            ratios.append(num / (delta * nuW) if nuW > 0 else (0.0 if num == 0 else math.inf))
            adm.append(k)
        else:
            skipped.append(k)
    if not adm:
        raise NoAdmissibleCandidate("no candidate satisfies the capacity hypothesis")
    return ClassMReport(max(ratios), ratios, adm, skipped)


def _admissible(A: NodeSet, W: NodeSet, r: float, limit: float, node_cap: float, stencil, capa1) -> bool:
    if A.is_empty():
        return True
    if capa1(A, stencil).value < limit:
        # capa1 is monotone, so every ball passes
        return True
    dom = A.domain
    for idx in np.argwhere(W.mask):
        x = tuple(dom.position(idx))
        B = ball_nodes(dom, Ball(x, r))
        piece = B & A
        if piece.is_empty():
            continue
        if node_cap >= limit or capa1(piece, stencil).value >= limit:
            return False
    return True
