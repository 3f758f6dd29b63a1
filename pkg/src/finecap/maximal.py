"""Centered Hardy-Littlewood maximal functions on the lattice.

A ball average is taken over the lattice nodes of ``B(x, r)`` that lie in
the domain, so a constant field has itself as maximal function up to the
edges. Ball sums go through FFT convolution and carry rounding at the
``1e-15`` relative level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .capacity import PerimeterStencil, capa1, total_variation
from .errors import ZeroNorm
from .grid import GridDomain, NodeSet, ScalarField, ball_offsets, disk_footprint
from .measure import GridMeasure


def radius_steps(domain: GridDomain, R: float) -> list[int]:
    """Lattice radii ``k`` (in units of h) with ``2 <= k <= R/h``; R = inf means the domain diameter."""
    h = domain.spacing
    if R == math.inf:
        kmax = int(math.ceil(math.sqrt(sum((s - 1) ** 2 for s in domain.shape)))) + 1
    else:
        kmax = int(math.floor(R / h + 1e-9))
    return list(range(2, kmax + 1))


def _ball_sum(values: np.ndarray, k: int) -> np.ndarray:
    fp = disk_footprint(values.ndim, float(k)).astype(float)
    if values.size * fp.size <= 4096:
        from scipy.ndimage import correlate

        return correlate(values, fp, mode="constant", cval=0.0)
    return fftconvolve(values, fp, mode="same")


def _ball_counts(shape: tuple[int, ...], k: int) -> np.ndarray:
    return np.rint(_ball_sum(np.ones(shape), k))


def maximal_function(u: ScalarField, R: float) -> ScalarField:
    """``max_{2h <= r <= R} avg_{B(x, r)} |u|`` with radii on the lattice ``r = k h``."""
    dom = u.domain
    a = np.abs(u.values)
    fin = np.isfinite(a)
    base = np.where(fin, a, 0.0)
    out = np.zeros(dom.shape)
    bad = np.zeros(dom.shape, dtype=bool)
    for k in radius_steps(dom, R):
        count = _ball_counts(dom.shape, k)
        s = _ball_sum(base, k)
        out = np.maximum(out, np.maximum(s, 0.0) / count)
        if not fin.all():
            bad |= _ball_sum((~fin).astype(float), k) > 0.5
    return ScalarField(dom, np.where(bad, math.inf, out))


def ball_average_direct(u: ScalarField, index: tuple[int, ...], k: int) -> float:
    """Average of ``|u|`` over the in-domain lattice ball of radius ``k h`` (reference path)."""
    offs = ball_offsets(u.domain.dim, float(k))
    pts = offs + np.asarray(index)
    inside = np.all((pts >= 0) & (pts < np.asarray(u.domain.shape)), axis=1)
    vals = np.abs(u.values[tuple(pts[inside].T)])
    return math.fsum(vals) / len(vals)


def measure_maximal(nu: GridMeasure, R: float) -> ScalarField:
    """``max_r nu(B(x, r)) / L(B(x, r))`` over lattice radii.

    ``L`` is the in-domain lattice volume of the ball; singular parts count
    with their full chord length inside the ball.
    """
    dom = nu.domain
    h = dom.spacing
    dens = nu.density.values
    pts = dom.points.reshape(-1, dom.dim)
    out = np.zeros(dom.shape)
    for k in radius_steps(dom, R):
        vol = _ball_counts(dom.shape, k) * dom.cell_volume
        mass = np.maximum(_ball_sum(dens, k), 0.0) * dom.cell_volume
        r = k * h
        for part in nu.singular_parts:
            if part.weight == 0:
                continue
            if part.is_points:
                p = part.segments[:, 0, 0]
                hits = (np.abs(pts[:, 0:1] - p[None, :]) < r).sum(axis=1)
                mass = mass + part.weight * hits.reshape(dom.shape)
            else:
                acc = np.zeros(len(pts))
                for seg in part.segments:
                    acc += _chord_per_center(seg, pts, r)
                mass = mass + part.weight * acc.reshape(dom.shape)
        out = np.maximum(out, mass / vol)
    return ScalarField(dom, out)


def _chord_per_center(seg: np.ndarray, centers: np.ndarray, r: float) -> np.ndarray:
    """Length of one segment inside ``B(c, r)`` for every center ``c``."""
    p, q = seg
    d = q - p
    L2 = float(d @ d)
    if L2 == 0:
        return np.zeros(len(centers))
    a = p[None, :] - centers
    b = a @ d
    c = (a * a).sum(axis=1) - r * r
    disc = b * b - L2 * c
    pos = disc > 0
    sq = np.sqrt(np.where(pos, disc, 0.0))
    t0 = np.clip((-b - sq) / L2, 0.0, 1.0)
    t1 = np.clip((-b + sq) / L2, 0.0, 1.0)
    return np.where(pos, (t1 - t0) * math.sqrt(L2), 0.0)


def bv_norm(u: ScalarField, stencil: PerimeterStencil | None = None) -> float:
    """``||u||_L1 + |Du|(R^n)`` of the zero extension of ``u``."""
    dom = u.domain
    if not np.all(np.isfinite(u.values)):
        return math.inf
    reach = 2
    big = GridDomain(dom.dim, tuple(s + 2 * reach for s in dom.shape), dom.spacing,
                     tuple(o - reach * dom.spacing for o in dom.origin))
    ext = ScalarField(big, np.pad(u.values, reach))
    return math.fsum(np.abs(u.values).ravel()) * dom.cell_volume + total_variation(ext, stencil=stencil)


@dataclass
class WeakTypeRow:
    t: float
    capacity: float
    ratio: float

    def to_json(self) -> dict:
        return {"t": self.t, "capacity": self.capacity, "ratio": self.ratio}


def weak_type_diagnostic(u: ScalarField, t_values, R: float = math.inf,
                         stencil: PerimeterStencil | None = None,
                         Mu: ScalarField | None = None) -> list[WeakTypeRow]:
    """``t * capa1({Mu > t}) / ||u||_BV`` for each level ``t``.

    The superlevel set is taken inside the domain, so its capacity is a lower
    bound for the capacity of the full superlevel set in R^n.
    """
    norm = bv_norm(u, stencil)
    if not norm > 0:
        raise ZeroNorm("u has zero BV norm")
    if Mu is None:
        Mu = maximal_function(u, R)
    rows = []
    for t in t_values:
        S = NodeSet(u.domain, Mu.values > t)
        cap = capa1(S, stencil).value if not S.is_empty() else 0.0
        rows.append(WeakTypeRow(float(t), cap, float(t) * cap / norm))
    return rows
