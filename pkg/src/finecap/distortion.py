"""Distortion numbers of maps ``f: Omega -> R^n`` sampled on a grid.

``L_f(x, r)`` is the largest image displacement over nodes with
``|z - x| <= r`` and ``l_f(x, r)`` the smallest over nodes with
``|z - x| >= r`` inside a search box centered at ``x``. The box stands in
for the whole domain; its side defaults to ``4 r0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit
from scipy.spatial import ConvexHull, QhullError

from .capacity import PerimeterStencil, capa1, default_stencil, quantum, total_variation
from .errors import UndefinedAtCenter, ZeroMeasureBall
from .finetopo import ball_volume
from .grid import Ball, DensityProfile, GridDomain, NodeSet, RadiusSchedule, VectorField, ball_nodes
from .measure import GridMeasure, measure_of

BESICOVITCH = {1: 2, 2: 19}


def _ratio(L: float, l: float) -> float:
    """``L / l`` with ``inf`` when ``l = 0`` or ``L = inf`` and ``0`` for empty sup sets."""
    if math.isinf(L) or l == 0:
        return math.inf
    return L / l


@dataclass(frozen=True)
class DistortionProfile:
    radii: tuple[float, ...]
    L: tuple[float, ...]
    l: tuple[float, ...]
    H: tuple[float, ...]
    window: int = 2
    box_side: float = math.nan

    @property
    def samples(self) -> list[tuple[float, float, float, float]]:
        return list(zip(self.radii, self.L, self.l, self.H))

    def as_profile(self) -> DensityProfile:
        return DensityProfile(self.radii, self.H, self.window)

    @property
    def tail_limsup_H(self) -> float:
        return self.as_profile().tail_max

    @property
    def tail_liminf_H(self) -> float:
        return self.as_profile().tail_min

    def to_json(self) -> dict:
        return {
            "samples": [list(s) for s in self.samples],
            "tail_limsup_H": self.tail_limsup_H,
            "tail_liminf_H": self.tail_liminf_H,
            "window": self.window,
            "box_side": self.box_side,
        }


def _center_index(domain: GridDomain, x: Sequence[float]) -> tuple[int, ...]:
    idx = domain.node_index(x)
    return idx if idx is not None else domain.nearest_index(x)


def _box_slices(domain: GridDomain, center: tuple[int, ...], half: int) -> tuple[slice, ...]:
    return tuple(slice(max(c - half, 0), min(c + half + 1, s)) for c, s in zip(center, domain.shape))


@njit(cache=True)
def _stretch_kernel(coords, vals, usable, j, radii2):
    """Squared sup over ``|z - y| <= r`` and inf over ``|z - y| >= r`` of ``|f(z) - f(y)|``, one pass."""
    m = radii2.shape[0]
    sup2 = np.zeros(m)
    inf2 = np.full(m, np.inf)
    sup_inf = np.zeros(m, dtype=np.bool_)
    for i in range(coords.shape[0]):
        if not usable[i] & 1:
            continue
        d2 = 0.0
        for a in range(coords.shape[1]):
            t = float(coords[i, a] - coords[j, a])
            d2 += t * t
        img2 = 0.0
        if usable[i] & 2:
            for c in range(vals.shape[1]):
                t = vals[i, c] - vals[j, c]
                img2 += t * t
        else:
            img2 = np.inf
        for k in range(m):
            if d2 <= radii2[k]:
                if img2 > sup2[k]:
                    sup2[k] = img2
                if img2 == np.inf:
                    sup_inf[k] = True
            if d2 >= radii2[k]:
                if img2 < inf2[k]:
                    inf2[k] = img2
    return sup2, inf2, sup_inf


class _Box:
    """Node coordinates (in units of h) and image values inside a search box, flattened."""

    def __init__(self, f: VectorField, center: tuple[int, ...], side: float,
                 keep: np.ndarray | None = None):
        dom = f.domain
        half = max(int(math.floor(side / 2 / dom.spacing + 1e-9)), 1)
        sl = _box_slices(dom, center, half)
        self.start = np.array([s.start for s in sl])
        self.shape = tuple(s.stop - s.start for s in sl)
        grids = np.meshgrid(*[np.arange(s.stop - s.start, dtype=np.int64) for s in sl], indexing="ij")
        self.coords = np.stack([g.ravel() for g in grids], axis=1)
        self.vals = np.ascontiguousarray(f.values[sl].reshape(-1, f.components))
        self.defined = ~np.isnan(self.vals).any(axis=1)
        kept = np.ones(len(self.vals), dtype=bool) if keep is None else keep[sl].ravel()
        # bit 0: node belongs to U, bit 1: f is defined there
        self.usable = kept.astype(np.uint8) | (self.defined.astype(np.uint8) << 1)
        self.h = dom.spacing

    def locate(self, index: Sequence[int]) -> int | None:
        rel = np.asarray(index) - self.start
        if (rel < 0).any() or (rel >= np.asarray(self.shape)).any():
            return None
        return int(np.ravel_multi_index(tuple(rel), self.shape))

    def stretch(self, j: int, radii: Sequence[float]) -> list[tuple[float, float, float]]:
        """``(L, l, H)`` at box node ``j`` for each radius, restricted to kept nodes."""
        # lattice distances are integers in units of h; round the radii onto that scale
        rr = np.array([(r / self.h) ** 2 for r in radii])
        rr = np.where(np.abs(rr - np.rint(rr)) <= 1e-9 * rr, np.rint(rr), rr)
        sup2, inf2, sup_inf = _stretch_kernel(self.coords, self.vals, self.usable, j, rr)
        out = []
        for k in range(len(radii)):
            L = math.inf if sup_inf[k] else math.sqrt(sup2[k])
            l = math.sqrt(inf2[k])
            out.append((L, l, _ratio(L, l)))
        return out


def distortion_profile(f: VectorField, x: Sequence[float], schedule: RadiusSchedule,
                       U: NodeSet | None = None, box_side: float | None = None) -> DistortionProfile:
    """``L_f``, ``l_f`` and ``H_f = L_f / l_f`` at ``x`` over the schedule (restricted to ``U`` if given)."""
    dom = f.domain
    schedule.check(dom)
    ci = _center_index(dom, x)
    if not f.defined[ci]:
        raise UndefinedAtCenter(f"f is undefined at {tuple(x)}")
    side = 4 * schedule.r0 if box_side is None else box_side
    box = _Box(f, ci, side, None if U is None else U.mask)
    rows = box.stretch(box.locate(ci), schedule.radii)
    return DistortionProfile(schedule.radii, tuple(r[0] for r in rows), tuple(r[1] for r in rows),
                             tuple(r[2] for r in rows), schedule.window, side)


def image_diameter(points: np.ndarray) -> float:
    """Largest pairwise distance of a point cloud (``inf`` if any point is undefined)."""
    p = np.asarray(points, dtype=float)
    if len(p) <= 1:
        return 0.0
    if np.isnan(p).any() or np.isinf(p).any():
        return math.inf
    if p.shape[1] >= 2 and len(p) > p.shape[1] + 1:
        try:
            p = p[ConvexHull(p).vertices]
        except QhullError:
            # degenerate cloud: all points on a lower-dimensional flat
            d = p - p[0]
            far = p[int(np.argmax((d * d).sum(axis=1)))]
            axis = far - p[0]
            if not axis.any():
                return 0.0
            t = d @ (axis / np.linalg.norm(axis))
            resid = d - np.outer(t, axis / np.linalg.norm(axis))
            if np.abs(resid).max() <= 1e-12 * (1 + np.abs(d).max()):
                return float(t.max() - t.min())
    best = 0.0
    for i in range(len(p) - 1):
        dd = p[i + 1:] - p[i]
        best = max(best, float(np.sqrt((dd * dd).sum(axis=1)).max()))
    return best


def generalized_distortion(f: VectorField, x: Sequence[float], nu: GridMeasure,
                           schedule: RadiusSchedule,
                           box_side: float | None = None) -> tuple[DensityProfile, DensityProfile]:
    """Measure-normalized Lipschitz and distortion profiles at ``x``.

    ``lip_k = osc_B f / (2 r) * L(B) / nu(B)`` and
    ``h_k = H_f(x, r) * (L(B) / nu(B))^((n-1)/n)``; both tails are read as liminf.
    """
    dom = f.domain
    n = dom.dim
    H = distortion_profile(f, x, schedule, box_side=box_side)
    lips, hs = [], []
    for r, Hr in zip(schedule.radii, H.H):
        ball = Ball(tuple(x), r)
        mass = measure_of(nu, ball)
        if not mass > 0:
            raise ZeroMeasureBall(f"nu(B({tuple(x)}, {r})) = 0")
        scale = ball_volume(dom, ball) / mass
        B = ball_nodes(dom, ball)
        osc = image_diameter(f.values[B.mask])
        lips.append(0.5 * osc / r * scale if osc > 0 else 0.0)
        hs.append(Hr * scale ** ((n - 1) / n) if Hr > 0 else 0.0)
    lip = DensityProfile(schedule.radii, tuple(lips), schedule.window)
    hp = DensityProfile(schedule.radii, tuple(hs), schedule.window)
    lip.extra["estimate"] = lip.tail_min
    hp.extra["estimate"] = hp.tail_min
    hp.extra["H"] = H.to_json()
    return lip, hp


def _carve_map(f: VectorField, x_idx: tuple[int, ...], region: NodeSet, protect: np.ndarray,
               budget: float, stencil: PerimeterStencil) -> tuple[np.ndarray, int]:
    """Remove the nodes worst fitted by an affine map, largest prefix within the budget.

    Returns the removed mask and its quantized capacity.
    """
    dom = f.domain
    empty = np.zeros(dom.shape, dtype=bool)
    cand = region.mask & f.defined
    idx = np.argwhere(cand)
    if len(idx) <= dom.dim + 1:
        return empty, 0
    dy = (idx - np.asarray(x_idx)) * dom.spacing
    df = f.values[tuple(idx.T)]
    design = np.hstack([np.ones((len(idx), 1)), dy])
    coef, *_ = np.linalg.lstsq(design, df, rcond=None)
    res = np.sqrt(((df - design @ coef) ** 2).sum(axis=1))
    # rounding-level residuals mean the map is affine on the region
    if res.max() <= 1e-12 * (1 + np.abs(df).max()):
        return empty, 0
    ok = ~protect[tuple(idx.T)]
    order = np.lexsort((np.arange(len(idx)), -res))
    order = order[ok[order] & (res[order] > 0)]
    limit = int(math.floor(budget / quantum(dom, stencil)))

    def removed(m: int) -> np.ndarray:
        mask = empty.copy()
        mask[tuple(idx[order[:m]].T)] = True
        return mask

    cache: dict[int, int] = {0: 0}

    def units(m: int) -> int:
        if m not in cache:
            cache[m] = capa1(NodeSet(dom, removed(m)), stencil).quantized
        return cache[m]

    lo, hi = 0, 1
    while hi <= len(order) and units(hi) <= limit:
        lo, hi = hi, 2 * hi
    hi = min(hi, len(order) + 1)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if units(mid) <= limit:
            lo = mid
        else:
            hi = mid
    return removed(lo), cache[lo]


def _center_offsets(dim: int, reach: float) -> np.ndarray:
    """Lattice offsets on a ``reach / 2`` spaced grid within distance ``reach`` (units of h)."""
    step = max(1, int(round(reach / 2)))
    k = int(math.floor(reach / step + 1e-9))
    rng = np.arange(-k, k + 1) * step
    offs = np.stack(np.meshgrid(*([rng] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    keep = (offs ** 2).sum(axis=1) <= reach * reach * (1 + 1e-12)
    offs = np.unique(offs[keep], axis=0)
    return offs


def fine_distortion(f: VectorField, x: Sequence[float], beta: float, eta: float,
                    schedule: RadiusSchedule, stencil: PerimeterStencil | None = None,
                    box_side: float | None = None) -> DensityProfile:
    """Carved, drifting-center distortion ``sup_y H_{f,U_r}(y, r)`` per radius.

    ``U_r`` is the search box minus the nodes of ``B(x, (1 + eta) r)`` worst
    fitted by an affine map, removed while ``capa1 <= beta r^(n-1)``; the
    centers ``y`` sample ``|y - x| <= eta r`` and stay in ``U_r``. One carving
    per radius gives an upper estimate of the infimum over finely open sets;
    finitely many centers give a lower estimate of the inner supremum.
    """
    dom = f.domain
    schedule.check(dom)
    st = stencil or default_stencil(dom)
    ci = _center_index(dom, x)
    if not f.defined[ci]:
        raise UndefinedAtCenter(f"f is undefined at {tuple(x)}")
    n = dom.dim
    side = 4 * schedule.r0 if box_side is None else box_side
    q = quantum(dom, st)
    vals, info = [], []
    for r in schedule.radii:
        offs = _center_offsets(n, eta * r / dom.spacing)
        centers = offs + np.asarray(ci)
        inside = np.all((centers >= 0) & (centers < np.asarray(dom.shape)), axis=1)
        centers = centers[inside]
        protect = np.zeros(dom.shape, dtype=bool)
        protect[tuple(centers.T)] = True
        region = ball_nodes(dom, Ball(tuple(x), (1 + eta) * r))
        removed, units = _carve_map(f, ci, region, protect, beta * r ** (n - 1), st)
        box = _Box(f, ci, side, ~removed)
        worst, used = 0.0, 0
        for c in centers:
            j = box.locate(c)
            if j is None or not box.defined[j]:
                continue
            used += 1
            worst = max(worst, box.stretch(j, [r])[0][2])
        vals.append(worst)
        info.append({"radius": r, "removed_capacity": units * q, "removed_count": int(removed.sum()),
                     "centers": used})
    prof = DensityProfile(schedule.radii, tuple(vals), schedule.window)
    prof.extra["carving"] = info
    prof.extra["estimate"] = prof.tail_max
    prof.extra["box_side"] = side
    prof.extra["bounds"] = "upper for the infimum over U, lower for the supremum over centers"
    return prof


@dataclass
class VariationReport:
    lhs: float
    rhs: float
    constant: float
    integral: float
    image_volume: float
    besicovitch: int
    passed: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "constant": self.constant,
            "integral": self.integral,
            "image_volume": self.image_volume,
            "besicovitch": self.besicovitch,
            "passed": self.passed,
            **self.details,
        }


def variation_constant(n: int, besicovitch: int) -> float:
    return 2.0 ** (n * n + 2) * n * besicovitch


def cell_masses(nu: GridMeasure) -> np.ndarray:
    """``nu`` of every node cell."""
    dom = nu.domain
    out = nu.density.values * dom.cell_volume
    if not nu.singular_parts:
        return out
    out = out.copy()
    h = dom.spacing
    for part in nu.singular_parts:
        for seg in part.segments:
            lo = np.floor((seg.min(axis=0) - np.asarray(dom.origin)) / h - 0.5).astype(int)
            hi = np.ceil((seg.max(axis=0) - np.asarray(dom.origin)) / h + 0.5).astype(int)
            lo = np.clip(lo, 0, np.asarray(dom.shape) - 1)
            hi = np.clip(hi, 0, np.asarray(dom.shape) - 1)
            one = GridMeasure(GridMeasure.lebesgue(dom, 0.0).density, (type(part)(seg[None], part.weight),))
            for idx in np.ndindex(*(hi - lo + 1)):
                node = tuple(int(a + b) for a, b in zip(lo, idx))
                m = np.zeros(dom.shape, dtype=bool)
                m[node] = True
                out[node] += measure_of(one, NodeSet(dom, m))
    return out


def image_volume(f: VectorField) -> float:
    """Upper bound for ``L^2(f(Omega))``: the smaller of the summed cell-image areas and the image bounding box."""
    if f.domain.dim != 2 or f.components != 2:
        raise ValueError("image volume is implemented for planar maps")
    v = f.values
    if not f.defined.all():
        return math.inf
    a, b, c, d = v[:-1, :-1], v[1:, :-1], v[1:, 1:], v[:-1, 1:]
    quad = np.stack([a, b, c, d], axis=0)
    x, y = quad[..., 0], quad[..., 1]
    area = 0.5 * np.abs((x * np.roll(y, -1, axis=0) - np.roll(x, -1, axis=0) * y).sum(axis=0))
    span = v.reshape(-1, 2).max(axis=0) - v.reshape(-1, 2).min(axis=0)
    return float(min(math.fsum(area.ravel()), float(span[0] * span[1])))


def variation_bound_check(f: VectorField, nu: GridMeasure, schedule: RadiusSchedule,
                          split: NodeSet | None = None, besicovitch: int | None = None,
                          stencil: PerimeterStencil | None = None) -> VariationReport:
    """``sum_i |Df_i|(Omega) <= C (int min{lip, h^(n/(n-1))} dnu + L^n(f(Omega)))``.

    Without ``split`` each node takes the smaller of the two numbers; with a
    split, nodes in the set use ``lip`` and the others ``h^(n/(n-1))``.
    """
    dom = f.domain
    n = dom.dim
    N = BESICOVITCH.get(n) if besicovitch is None else besicovitch
    if N is None:
        raise ValueError(f"no Besicovitch constant configured for n = {n}")
    C = variation_constant(n, N)
    lhs = math.fsum(total_variation(f.component(i), stencil=stencil) for i in range(f.components))
    masses = cell_masses(nu)
    terms = []
    worst_node = None
    for idx in np.ndindex(*dom.shape):
        if masses[idx] == 0:
            continue
        x = tuple(dom.position(idx))
        lip, hp = generalized_distortion(f, x, nu, schedule)
        a, b = lip.tail_min, hp.tail_min ** (n / (n - 1))
        if split is None:
            val = min(a, b)
        else:
            val = a if split.mask[idx] else b
        terms.append(val * masses[idx])
        if math.isinf(val) and worst_node is None:
            worst_node = idx
    integral = math.fsum(terms) if all(math.isfinite(t) for t in terms) else math.inf
    vol = image_volume(f)
    rhs = C * (integral + vol)
    details = {"schedule": schedule.to_json()}
    if worst_node is not None:
        details["first_infinite_node"] = list(worst_node)
    return VariationReport(lhs, rhs, C, integral, vol, N, bool(lhs <= rhs), details)


def affine_map(domain: GridDomain, A: np.ndarray, b: Sequence[float] | None = None) -> VectorField:
    A = np.asarray(A, dtype=float)
    p = domain.points
    v = p @ A.T
    if b is not None:
        v = v + np.asarray(b, dtype=float)
    return VectorField(domain, v)


def jump_map(domain: GridDomain) -> VectorField:
    """``(x1, sign(x2))``, a jump of size 2 across ``x2 = 0``."""
    p = domain.points
    return VectorField(domain, np.stack([p[..., 0], np.sign(p[..., 1])], axis=-1))


@dataclass
class RankLevel:
    h: float
    radii: tuple[float, ...]
    box_side: float
    tail: float

    def to_json(self) -> dict:
        return {"h": self.h, "radii": list(self.radii), "box_side": self.box_side, "tail": self.tail}


def rank_experiment(A: np.ndarray | None = None, refinements: int = 3, beta: float = 0.5, eta: float = 0.25,
                    h0: float = 1 / 64, jump: bool = False) -> list[RankLevel]:
    """Fine-distortion tails of an affine map (or the jump map) at the origin under refinement.

    Level ``k`` uses ``h = h0 / 8^k`` and radii ``(4, 2, 1) * r_k`` with
    ``r_k = 4 h0 / 4^k``, so ``r_k / h`` doubles per level, while the search
    box keeps the fixed side ``32 h0``.
    """
    levels = []
    side = 32 * h0
    for k in range(refinements):
        h = h0 / 8 ** k
        rk = 4 * h0 / 4 ** k
        sched = RadiusSchedule(8 * rk, 0.5, 3, 2)
        half = side / 2
        dom = GridDomain.box([-half, -half], [half, half], h)
        f = jump_map(dom) if jump else affine_map(dom, A)
        prof = fine_distortion(f, (0.0, 0.0), beta, eta, sched, box_side=side)
        levels.append(RankLevel(h, sched.radii, side, prof.tail_max))
    return levels


def grows(tails: Sequence[float], factor: float = 10.0) -> bool:
    """Last tail at least ``factor`` times the first; an infinite tail counts as growth."""
    first, last = tails[0], tails[-1]
    if math.isinf(last):
        return True
    return last >= factor * first
