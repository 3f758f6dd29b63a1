"""Precise representatives, pointwise variation, jump detection, set boundaries and
BV certificates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import fftconvolve

from .capacity import PerimeterStencil, capa1
from .finetopo import lip_from_carving
from .grid import (Ball, GridDomain, NodeSet, RadiusSchedule, ScalarField, ball_nodes, disk_footprint)
from .measure import GridMeasure, measure_of

# Factor turning an 8-connected skeleton pixel count into length: the mean of
# max(|cos t|, |sin t|) over all orientations is 2*sqrt(2)/pi.
SKELETON_LENGTH_FACTOR = math.pi / (2.0 * math.sqrt(2.0))


def ball_sums(values: np.ndarray, radius_over_h: float) -> np.ndarray:
    """Sum of ``values`` over the strict lattice ball at every node (zero outside)."""
    fp = disk_footprint(values.ndim, radius_over_h).astype(float)
    return fftconvolve(values, fp, mode="same")


def ball_counts(mask: np.ndarray, radius_over_h: float) -> np.ndarray:
    """Exact integer count of ``mask`` nodes in each lattice ball."""
    return np.rint(ball_sums(mask.astype(float), radius_over_h)).astype(np.int64)


def ball_averages(u: ScalarField, r: float) -> np.ndarray:
    """Average of ``u`` over ``B(x, r)`` restricted to the domain, at every node.

    Any ``+inf`` node in the ball makes the average ``+inf`` (``-inf`` likewise,
    ``+inf`` winning when both occur).
    """
    dom = u.domain
    rh = r / dom.spacing
    v = u.values
    fin = np.isfinite(v)
    total = ball_sums(np.where(fin, v, 0.0), rh)
    count = ball_counts(np.ones(dom.shape, dtype=bool), rh)
    avg = total / count
    if not fin.all():
        pos = ball_counts(v == math.inf, rh) > 0
        neg = ball_counts(v == -math.inf, rh) > 0
        avg = np.where(neg, -math.inf, avg)
        avg = np.where(pos, math.inf, avg)
    return avg


def precise_representative(u: ScalarField, schedule: RadiusSchedule, overflow_cap: float = 1e8) -> ScalarField:
    """Tail maximum of ball averages over the schedule's smallest radii.

    Averages above ``overflow_cap`` in absolute value at a tail radius are
    flagged as infinite.
    """
    schedule.check(u.domain)
    out = np.full(u.domain.shape, -math.inf)
    for r in schedule.tail_radii:
        avg = ball_averages(u, r)
        avg = np.where(avg > overflow_cap, math.inf, avg)
        avg = np.where(avg < -overflow_cap, -math.inf, avg)
        out = np.maximum(out, avg)
    return ScalarField(u.domain, out)


def pointwise_variation_1d(values: Sequence[float]) -> float:
    """``sum |w_{j+1} - w_j|`` over consecutive nodes (exact on a grid)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    if not np.all(np.isfinite(v)):
        return math.inf
    return math.fsum(np.abs(np.diff(v)))


def directional_variation(w: ScalarField, axis: int) -> float:
    """``h^(n-1)`` times the summed pointwise variation of every grid line along ``axis``."""
    dom = w.domain
    v = w.values
    if not np.all(np.isfinite(v)):
        return math.inf
    per_line = np.abs(np.diff(v, axis=axis)).sum(axis=axis)
    return dom.spacing ** (dom.dim - 1) * math.fsum(per_line.ravel())


def measure_boundary(F: NodeSet, schedule: RadiusSchedule, gamma1: float = 0.01,
                     gamma2: float = 0.01) -> NodeSet:
    """Nodes where both the upper density of ``F`` and of its complement reach the thresholds."""
    dom = F.domain
    schedule.check(dom)
    dens_in = np.zeros(dom.shape)
    dens_out = np.zeros(dom.shape)
    for r in schedule.tail_radii:
        rh = r / dom.spacing
        total = ball_counts(np.ones(dom.shape, dtype=bool), rh)
        inside = ball_counts(F.mask, rh)
        dens_in = np.maximum(dens_in, inside / total)
        dens_out = np.maximum(dens_out, (total - inside) / total)
    return NodeSet(dom, (dens_in >= gamma1) & (dens_out >= gamma2))


def set_representative(F: NodeSet, schedule: RadiusSchedule) -> NodeSet:
    """``F* = {chi_F* = 1}``: nodes whose ball lies in ``F`` at some tail radius."""
    dom = F.domain
    schedule.check(dom)
    out = np.zeros(dom.shape, dtype=bool)
    for r in schedule.tail_radii:
        rh = r / dom.spacing
        out |= ball_counts(F.mask, rh) == ball_counts(np.ones(dom.shape, dtype=bool), rh)
    return NodeSet(dom, out)


@dataclass(eq=False)
class BoundaryReport:
    band: NodeSet
    measure: float | None
    skeleton_count: int | None
    candidates: int
    c: float
    length_factor: float = SKELETON_LENGTH_FACTOR

    def to_json(self) -> dict:
        return {
            "band_count": self.band.count,
            "measure": self.measure,
            "skeleton_count": self.skeleton_count,
            "candidates": self.candidates,
            "c": self.c,
            "length_factor": self.length_factor,
        }


def boundary_measure(band: NodeSet) -> tuple[float | None, int | None]:
    """(n-1)-measure surrogate of a band: skeleton length in 2D, run count in 1D."""
    dom = band.domain
    if dom.dim == 1:
        m = band.mask.astype(np.int8)
        runs = int(((np.diff(np.concatenate([[0], m])) == 1)).sum())
        return float(runs), runs
    if dom.dim == 2:
        from skimage.morphology import skeletonize

        sk = skeletonize(band.mask.copy())
        count = int(sk.sum())
        return count * dom.spacing * SKELETON_LENGTH_FACTOR, count
    return None, None


def capacitary_boundary(F: NodeSet, c: float, schedule: RadiusSchedule,
                        stencil: PerimeterStencil | None = None) -> BoundaryReport:
    """Nodes where both ``capa1(B & F*) / r^(n-1)`` and ``capa1(B \\ F*) / r^(n-1)``
    reach ``c`` at some tail radius, with a skeleton-based length of the band.
    """
    dom = F.domain
    n = dom.dim
    Fs = set_representative(F, schedule)
    # only balls meeting both F* and its complement can qualify
    rmax = max(schedule.tail_radii)
    rh = rmax / dom.spacing
    total = ball_counts(np.ones(dom.shape, dtype=bool), rh)
    inside = ball_counts(Fs.mask, rh)
    cand = (inside > 0) & (inside < total)
    band = np.zeros(dom.shape, dtype=bool)
    for idx in np.argwhere(cand):
        x = tuple(dom.position(idx))
        hit_in = hit_out = False
        for r in schedule.tail_radii:
            B = ball_nodes(dom, Ball(x, r))
            a, b = B & Fs, B - Fs
            lim = c * r ** (n - 1)
            if not hit_in and not a.is_empty():
                hit_in = capa1(a, stencil).value >= lim
            if not hit_out and not b.is_empty():
                hit_out = capa1(b, stencil).value >= lim
            if hit_in and hit_out:
                break
        band[tuple(idx)] = hit_in and hit_out
    bandset = NodeSet(dom, band)
    meas, count = boundary_measure(bandset)
    return BoundaryReport(bandset, meas, count, int(cand.sum()), c)


def dilate(S: NodeSet, r: float) -> NodeSet:
    """Nodes within distance ``< r`` of ``S``."""
    return NodeSet(S.domain, ball_counts(S.mask, r / S.domain.spacing) > 0)


@dataclass(frozen=True)
class JumpClassification:
    is_jump: bool
    direction: tuple[float, ...]
    f_minus: float
    f_plus: float
    midpoint_residual: float
    score: float

    def to_json(self) -> dict:
        return {
            "is_jump": self.is_jump,
            "direction": list(self.direction),
            "f_minus": self.f_minus,
            "f_plus": self.f_plus,
            "midpoint_residual": self.midpoint_residual,
            "score": self.score,
        }


def direction_fan(dim: int, count: int = 16) -> np.ndarray:
    """Unit normals covering the half sphere: angles ``k pi / count`` in 2D."""
    if dim == 1:
        return np.array([[1.0]])
    if dim == 2:
        t = np.arange(count) * math.pi / count
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    dirs = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1),
            (0, 1, 1), (0, 1, -1), (1, 1, 1), (1, 1, -1), (1, -1, 1), (-1, 1, 1)]
    d = np.asarray(dirs, dtype=float)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def jump_classify(u: ScalarField, x: Sequence[float], schedule: RadiusSchedule, fan: int = 16,
                  rel_tol: float = 0.25, abs_tol: float = 1e-9) -> JumpClassification:
    """Best-fitting half-ball split at ``x`` and whether it is a stable jump.

    The direction minimizing the summed half-ball variances over the tail radii
    wins (lowest fan index on ties). A jump needs a gap ``f+ - f-`` above
    ``abs_tol`` with each half mean varying by at most ``rel_tol * gap``
    across the tail radii.
    """
    dom = u.domain
    schedule.check(dom)
    xv = np.asarray(x, dtype=float)
    dirs = direction_fan(dom.dim, fan)
    if not np.all(np.isfinite(u.values)):
        raise ValueError("jump classification needs finite values")
    pieces = []
    for r in schedule.tail_radii:
        B = ball_nodes(dom, Ball(tuple(x), r))
        idx = np.argwhere(B.mask)
        pieces.append(((idx * dom.spacing + np.asarray(dom.origin)) - xv, u.values[B.mask]))
    best = None
    for k, nu in enumerate(dirs):
        score = 0.0
        means = []
        for dy, vals in pieces:
            s = dy @ nu
            tol = 1e-9 * dom.spacing
            hp, hm = vals[s > tol], vals[s < -tol]
            if hp.size == 0 or hm.size == 0:
                score = math.inf
                break
            score += float(hp.var() + hm.var())
            means.append((float(hp.mean()), float(hm.mean())))
        if best is None or score < best[0]:
            best = (score, k, means)
    score, k, means = best
    nu = dirs[k]
    fp, fm = means[-1]
    if fp < fm:
        nu = -nu
        means = [(b, a) for a, b in means]
        fp, fm = fm, fp
    gap = fp - fm
    stable = all(abs(a - fp) <= rel_tol * gap and abs(b - fm) <= rel_tol * gap for a, b in means)
    is_jump = bool(gap > abs_tol and stable)
    ustar = max(float(ball_averages(u, r)[dom.nearest_index(x)]) for r in schedule.tail_radii)
    resid = abs(ustar - 0.5 * (fp + fm))
    return JumpClassification(is_jump, tuple(float(c) for c in nu), fm, fp, resid, score)


@dataclass
class BVCertificate:
    values: list[float]
    points: list[tuple[float, ...]]
    fraction_le_one: float
    total_mass: float
    delta: float
    label: str = "numerical certificate (not a proof)"
    profiles: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "delta": self.delta,
            "total_mass": self.total_mass,
            "fraction_le_one": self.fraction_le_one,
            "points": [list(p) for p in self.points],
            "tail_values": self.values,
            "profiles": self.profiles,
        }


def bv_certificate(u: ScalarField, nu: GridMeasure, delta: float, points: Sequence[Sequence[float]],
                   schedule: RadiusSchedule, stencil: PerimeterStencil | None = None,
                   ustar: ScalarField | None = None) -> BVCertificate:
    """Carving profile of ``u*`` against ``nu`` at each sample point."""
    if ustar is None:
        ustar = precise_representative(u, schedule)
    vals, profs = [], []
    for x in points:
        prof = lip_from_carving(ustar, tuple(x), nu, delta, schedule, stencil)
        vals.append(prof.tail_max)
        profs.append({"samples": [[r, v] for r, v in prof.samples], "tail_max": prof.tail_max})
    frac = sum(1 for v in vals if v <= 1.0) / len(vals) if vals else 1.0
    return BVCertificate(vals, [tuple(float(c) for c in p) for p in points], frac,
                         nu.total_mass, delta, profiles=profs)
