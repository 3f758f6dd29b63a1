"""Whitney-type ball coverings in exact rational arithmetic.

Windows are open axis boxes, so ``dist(x, R^n \\ W)`` and every radius are
rationals and all four covering properties are checked without tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyA
from .grid import NodeSet

Point = tuple[Fraction, ...]


def _frac_point(p: Iterable) -> Point:
    return tuple(v if isinstance(v, Fraction) else Fraction(float(v)) for v in p)


def _dist2(a: Point, b: Point) -> Fraction:
    return sum(((x - y) ** 2 for x, y in zip(a, b)), Fraction(0))


def _lt_sum(d2: Fraction, s: Fraction) -> bool:
    """``sqrt(d2) < s`` for ``s >= 0``."""
    return s > 0 and d2 < s * s


@dataclass(frozen=True)
class BoxWindow:
    """Open box ``prod (lo_k, hi_k)``."""

    lo: Point
    hi: Point

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", _frac_point(self.lo))
        object.__setattr__(self, "hi", _frac_point(self.hi))
        if len(self.lo) != len(self.hi) or any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError("window box needs lo < hi in every coordinate")

    @property
    def dim(self) -> int:
        return len(self.lo)

    def dist_to_complement(self, x: Point) -> Fraction:
        """Distance to ``R^n \\ W``; nonpositive outside the open box."""
        return min(min(v - a, b - v) for v, a, b in zip(x, self.lo, self.hi))

    def contains(self, x: Point) -> bool:
        return self.dist_to_complement(x) > 0

    def to_json(self) -> dict:
        return {"box": {"lo": [float(v) for v in self.lo], "hi": [float(v) for v in self.hi]}}

    @classmethod
    def from_json(cls, d: dict) -> "BoxWindow":
        b = d["box"] if "box" in d else d
        return cls(tuple(b["lo"]), tuple(b["hi"]))


def points_of(A: NodeSet | Sequence[Sequence[float]]) -> list[Point]:
    if isinstance(A, NodeSet):
        pts = A.domain.points[A.mask]
    else:
        pts = np.asarray(A, dtype=float).reshape(len(A), -1) if len(A) else np.zeros((0, 1))
    return [_frac_point(p) for p in pts]


def select_disjoint(centers: Sequence[Point], radii: Sequence[Fraction]) -> list[int]:
    """Greedy 5r-selection: largest radius first (lowest index on ties), keep balls disjoint from the kept ones.

    Every input ball meets a kept ball at least as large, so each center lies
    in the kept ball dilated by 5 (a dilation by 3 already suffices).
    """
    order = sorted(range(len(centers)), key=lambda i: (-radii[i], i))
    kept: list[int] = []
    for i in order:
        if all(not _lt_sum(_dist2(centers[i], centers[j]), radii[i] + radii[j]) for j in kept):
            kept.append(i)
    return kept


@dataclass
class WhitneyCovering:
    centers: list[Point]
    radii: list[Fraction]
    R: Fraction
    window: BoxWindow
    points: list[Point] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.centers)

    def to_json(self) -> dict:
        return {
            "R": float(self.R),
            "window": self.window.to_json(),
            "balls": [{"center": [float(c) for c in x], "radius": float(r),
                       "radius_exact": str(r)} for x, r in zip(self.centers, self.radii)],
        }


def whitney_radius(x: Point, W: BoxWindow, R: Fraction) -> Fraction:
    return min(R, W.dist_to_complement(x) / 8)


def whitney_cover(A: NodeSet | Sequence[Sequence[float]], W: BoxWindow, R: float | Fraction) -> WhitneyCovering:
    """Balls ``B(x_l, r_l)`` with ``r_x = min{R, dist(x, R^n \\ W) / 8}`` selected on the ``r_x / 20`` balls."""
    pts = points_of(A)
    if not pts:
        raise EmptyA("A has no points")
    R = Fraction(R) if not isinstance(R, Fraction) else R
    if not R > 0:
        raise ValueError("R must be positive")
    for p in pts:
        if len(p) != W.dim or not W.contains(p):
            raise ValueError(f"point {tuple(float(v) for v in p)} is not in the window")
    r = [whitney_radius(p, W, R) for p in pts]
    kept = select_disjoint(pts, [v / 20 for v in r])
    return WhitneyCovering([pts[i] for i in kept], [r[i] for i in kept], R, W, pts)


@dataclass
class CoverReport:
    violations: dict[str, list] = field(default_factory=dict)
    max_overlap: int = 0
    overlap_bound: int = 0
    probes: int = 0

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "max_overlap": self.max_overlap,
            "overlap_bound": self.overlap_bound,
            "probes": self.probes,
            "violations": {k: v[:10] for k, v in self.violations.items()},
            "violation_counts": {k: len(v) for k, v in self.violations.items()},
        }


def ball_probes(cov: WhitneyCovering) -> list[Point]:
    """Centers plus axis points at ``0.49 r_l`` from each center, all inside ``1/2 B_l``."""
    out = []
    step = Fraction(49, 100)
    for x, r in zip(cov.centers, cov.radii):
        out.append(x)
        for k in range(len(x)):
            for s in (1, -1):
                y = list(x)
                y[k] += s * step * r
                out.append(tuple(y))
    return out


def verify_cover(cov: WhitneyCovering, probe_points: Iterable[Sequence] = (),
                 include_ball_probes: bool = True) -> CoverReport:
    """Check the four covering properties exactly; violations carry their witnesses."""
    W, R = cov.window, cov.R
    n = W.dim
    rep = CoverReport(violations={"radius": [], "1": [], "2": [], "3": [], "4": []}, overlap_bound=280 ** n)
    m = len(cov)
    for l in range(m):
        if not 0 < cov.radii[l] <= R:
            rep.violations["radius"].append({"ball": l, "reason": "radius outside (0, R]"})
    # (1) balls inside W, cores disjoint, A covered by the quarter balls
    for l in range(m):
        if cov.radii[l] > W.dist_to_complement(cov.centers[l]):
            rep.violations["1"].append({"ball": l, "reason": "ball not inside W"})
    for l in range(m):
        for k in range(l + 1, m):
            if _lt_sum(_dist2(cov.centers[l], cov.centers[k]), (cov.radii[l] + cov.radii[k]) / 20):
                rep.violations["1"].append({"balls": [l, k], "reason": "1/20 balls intersect"})
    for i, p in enumerate(cov.points):
        if not any(_lt_sum(_dist2(p, x), r / 4) for x, r in zip(cov.centers, cov.radii)):
            rep.violations["1"].append({"point": i, "reason": "not in any quarter ball"})
    # (2) radius comparability of meeting doubled balls
    for l in range(m):
        for k in range(m):
            if k != l and _lt_sum(_dist2(cov.centers[l], cov.centers[k]), 2 * cov.radii[l] + 2 * cov.radii[k]):
                if cov.radii[l] > 2 * cov.radii[k]:
                    rep.violations["2"].append({"balls": [l, k]})
    probes = [_frac_point(p) for p in probe_points]
    if include_ball_probes:
        probes += ball_probes(cov)
    probes = [y for y in probes if W.contains(y)]
    rep.probes = len(probes)
    for j, y in enumerate(probes):
        d2 = [_dist2(y, x) for x in cov.centers]
        count = sum(1 for dd, r in zip(d2, cov.radii) if _lt_sum(dd, 2 * r))
        rep.max_overlap = max(rep.max_overlap, count)
        if count > rep.overlap_bound:
            rep.violations["3"].append({"probe": j, "count": count})
        s = min(R / 8, W.dist_to_complement(y) / 64)
        halves = [l for l, (dd, r) in enumerate(zip(d2, cov.radii)) if _lt_sum(dd, r / 2)]
        for l in halves:
            r = cov.radii[l]
            if not (r / 16 <= s <= r / 4):
                rep.violations["4"].append({"probe": j, "ball": l, "reason": "scale outside [r/16, r/4]"})
        if not halves:
            for i, p in enumerate(cov.points):
                if _lt_sum(_dist2(y, p), s):
                    rep.violations["4"].append({"probe": j, "point": i, "reason": "uncovered probe near A"})
                    break
    return rep
