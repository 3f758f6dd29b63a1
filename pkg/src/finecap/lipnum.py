"""Classical Lipschitz numbers, the vanishing-budget generalized number, fine
derivative fitting and Stepanov sets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .capacity import PerimeterStencil, capa1, default_stencil, quantum, single_node_capacity
from .errors import NotFittable
from .finetopo import lip_from_carving, vanishing_budgets
from .grid import (Ball, DensityProfile, GridDomain, NodeSet, RadiusSchedule, ScalarField, ball_nodes,
                   disk_footprint)
from .measure import GridMeasure


def _center_index(domain: GridDomain, x: Sequence[float]) -> tuple[int, ...]:
    idx = domain.node_index(x)
    return idx if idx is not None else domain.nearest_index(x)


def classical_lip(w: ScalarField, x: Sequence[float], schedule: RadiusSchedule,
                  mode: str = "limsup") -> DensityProfile:
    """``sup_{B(x, r)} |w(y) - w(x)| / r`` per radius; ``extra["estimate"]`` by mode."""
    if mode not in ("limsup", "liminf"):
        raise ValueError("mode must be limsup or liminf")
    dom = w.domain
    schedule.check(dom)
    i = _center_index(dom, x)
    wx = w.values[i]
    vals = []
    for r in schedule.radii:
        B = ball_nodes(dom, Ball(tuple(x), r))
        y = w.values[B.mask]
        if not math.isfinite(wx) or not np.all(np.isfinite(y)):
            vals.append(math.inf)
        else:
            vals.append(float(np.abs(y - wx).max()) / r)
    prof = DensityProfile(schedule.radii, tuple(vals), schedule.window)
    prof.extra["estimate"] = prof.tail_max if mode == "limsup" else prof.tail_min
    prof.extra["mode"] = mode
    return prof


def lip_zero_profile(w: ScalarField, x: Sequence[float], schedule: RadiusSchedule,
                     stencil: PerimeterStencil | None = None) -> DensityProfile:
    """Lebesgue-normalized carving profile with budgets ``r_k^(n-1) / k``."""
    dom = w.domain
    return lip_from_carving(w, x, GridMeasure.lebesgue(dom), 1.0, schedule, stencil,
                            budgets=vanishing_budgets(schedule, dom.dim))


@dataclass(eq=False)
class FineDerivativeFit:
    v: np.ndarray
    score: float
    beta: float
    kept: NodeSet
    removed_capacity: float
    history: list[float] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "v": [float(c) for c in self.v],
            "score": self.score,
            "beta": self.beta,
            "removed_capacity": self.removed_capacity,
            "kept_count": self.kept.count,
            "history": self.history,
        }


def _fit(dy: np.ndarray, dw: np.ndarray) -> np.ndarray:
    v, *_ = np.linalg.lstsq(dy, dw, rcond=None)
    return v


def _quotients(dy: np.ndarray, dw: np.ndarray, v: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        q = np.abs(dw - dy @ v) / np.sqrt((dy * dy).sum(axis=1))
    return np.where(np.isfinite(dw), q, math.inf)


def fine_derivative_fit(w: ScalarField, x: Sequence[float], ball: Ball, beta: float,
                        stencil: PerimeterStencil | None = None, rel_improvement: float = 1e-3,
                        max_removals: int | None = None) -> FineDerivativeFit:
    """Least-squares gradient at ``x`` with greedy removal of the worst node.

    Each step removes the node with the largest residual quotient (lowest
    index on ties) if the removed set keeps ``capa1 <= beta r^(n-1)``, refits
    and keeps the step only when the score drops; it stops once a step gains
    less than ``rel_improvement``.
    """
    dom = w.domain
    st = stencil or default_stencil(dom)
    ci = _center_index(dom, x)
    wx = float(w.values[ci])
    if not math.isfinite(wx):
        raise NotFittable("w is infinite at the center")
    B = ball_nodes(dom, ball)
    idx = np.argwhere(B.mask)
    is_center = np.all(idx == np.asarray(ci), axis=1)
    idx = idx[~is_center]
    dy = (idx - np.asarray(ci)) * dom.spacing
    dw = w.values[tuple(idx.T)] - wx
    if int(np.isfinite(dw).sum()) < dom.dim + 1:
        raise NotFittable("too few finite nodes in the ball")
    limit_units = int(math.floor(beta * ball.radius ** (dom.dim - 1) / quantum(dom, st)))
    node_units, _ = single_node_capacity(dom, st)

    alive = np.ones(len(idx), dtype=bool)
    fin = np.isfinite(dw)

    def evaluate(mask):
        use = mask & fin
        if use.sum() < dom.dim:
            return None, math.inf
        v = _fit(dy[use], dw[use])
        q = _quotients(dy[mask], dw[mask], v)
        return v, float(q.max()) if q.size else 0.0

    v, score = evaluate(alive)
    history = [score]
    # residuals at rounding level count as an exact fit
    slopes = np.abs(dw[fin]) / np.sqrt((dy[fin] ** 2).sum(axis=1))
    exact = 1e-12 * (1.0 + float(slopes.max()))
    removed_units = 0
    removed_mask = np.zeros(dom.shape, dtype=bool)
    steps = 0
    while limit_units >= node_units and alive.any() and score > exact:
        if max_removals is not None and steps >= max_removals:
            break
        q = np.full(len(idx), -1.0)
        q[alive] = _quotients(dy[alive], dw[alive], v)
        worst = int(np.argmax(q))
        trial_mask = removed_mask.copy()
        trial_mask[tuple(idx[worst])] = True
        units = capa1(NodeSet(dom, trial_mask), st).quantized
        if units > limit_units:
            break
        trial = alive.copy()
        trial[worst] = False
        v2, s2 = evaluate(trial)
        if v2 is None or s2 > score:
            break
        gain = (score - s2) / score if score > 0 and math.isfinite(score) else (1.0 if s2 < score else 0.0)
        alive, v, removed_mask, removed_units = trial, v2, trial_mask, units
        history.append(s2)
        score = s2
        steps += 1
        if gain < rel_improvement:
            break
    kept_mask = B.mask & ~removed_mask
    q = quantum(dom, st)
    return FineDerivativeFit(np.asarray(v, dtype=float), score, beta, NodeSet(dom, kept_mask),
                             removed_units * q, history)


def _osc_filter(values: np.ndarray, footprint: np.ndarray) -> np.ndarray:
    """Oscillation over the lattice ball at every node (``inf`` on infinite values)."""
    finite = np.isfinite(values)
    big = np.where(finite, values, 0.0)
    hi = ndimage.maximum_filter(big, footprint=footprint, mode="constant", cval=-np.inf)
    lo = ndimage.minimum_filter(big, footprint=footprint, mode="constant", cval=np.inf)
    bad = ndimage.maximum_filter((~finite).astype(np.uint8), footprint=footprint, mode="constant", cval=0)
    return np.where(bad > 0, np.inf, hi - lo)


def stepanov_set(w: ScalarField, threshold: float, schedule: RadiusSchedule,
                 stencil: PerimeterStencil | None = None) -> NodeSet:
    """Nodes whose vanishing-budget profile has ``tail_max <= threshold``.

    When every budget is below one node's capacity nothing can be carved and
    the profile reduces to ``osc(B) / (2r)``, computed with ball filters;
    otherwise each node is carved individually.
    """
    dom = w.domain
    schedule.check(dom)
    if threshold == math.inf:
        return NodeSet.full(dom)
    st = stencil or default_stencil(dom)
    budgets = vanishing_budgets(schedule, dom.dim)
    node_units, _ = single_node_capacity(dom, st)
    q = quantum(dom, st)
    tail = schedule.radii[-schedule.window:]
    if all(math.floor(b / 2 / q) < node_units for b in budgets[-schedule.window:]):
        worst = np.zeros(dom.shape)
        for r in tail:
            osc = _osc_filter(w.values, disk_footprint(dom.dim, r / dom.spacing))
            worst = np.maximum(worst, osc / (2 * r))
        return NodeSet(dom, worst <= threshold)
    mask = np.zeros(dom.shape, dtype=bool)
    for idx in np.ndindex(*dom.shape):
        prof = lip_zero_profile(w, tuple(dom.position(idx)), schedule, st)
        mask[idx] = prof.tail_max <= threshold
    return NodeSet(dom, mask)
