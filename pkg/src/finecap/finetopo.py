"""Capacitary density profiles and level-set carving of balls.

``carve`` removes from a ball the two superlevel sets of ``(w - M)_+`` and
``(w - M)_-`` (``M`` the median over the ball) at the lowest thresholds whose
capacities each fit into half of the budget. The kept set is one admissible
choice in the infimum defining the generalized Lipschitz number, so every
profile built from it is an upper bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .capacity import PerimeterStencil, capa1, default_stencil, quantum, single_node_capacity
from .grid import Ball, DensityProfile, NodeSet, RadiusSchedule, ScalarField, ball_nodes, oscillation
from .measure import GridMeasure, measure_of


@dataclass(frozen=True, eq=False)
class CarvingResult:
    kept: NodeSet
    removed_capacity: float
    t_plus: float
    t_minus: float
    median: float
    budget: float
    budget_too_small: bool = False

    @property
    def oscillation_bound(self) -> float:
        return self.t_plus + self.t_minus

    def to_json(self) -> dict:
        return {
            "t_plus": self.t_plus,
            "t_minus": self.t_minus,
            "oscillation_bound": self.oscillation_bound,
            "median": self.median,
            "removed_capacity": self.removed_capacity,
            "budget": self.budget,
            "budget_too_small": self.budget_too_small,
            "kept_count": self.kept.count,
        }


def thinness_profile(A: NodeSet, x: Sequence[float], schedule: RadiusSchedule,
                     stencil: PerimeterStencil | None = None, tol: float = 1e-2) -> DensityProfile:
    """``capa1(A & B(x, r_k)) / r_k^(n-1)`` over the schedule.

    ``extra["thin"]`` is the advisory verdict ``tail_max < tol``.
    """
    dom = A.domain
    schedule.check(dom)
    n = dom.dim
    vals = []
    for r in schedule.radii:
        piece = A & ball_nodes(dom, Ball(tuple(x), r))
        vals.append(capa1(piece, stencil).value / r ** (n - 1) if not piece.is_empty() else 0.0)
    prof = DensityProfile(schedule.radii, tuple(vals), schedule.window)
    prof.extra["thin"] = bool(prof.tail_max < tol)
    return prof


def _lowest_threshold(excess: np.ndarray, B: NodeSet, limit_units: int, node_units: int,
                      stencil: PerimeterStencil) -> tuple[float, int]:
    """Smallest ``t`` in ``{0} + values`` with ``Q(capa1({excess > t})) <= limit_units``.

    ``excess`` is defined on the whole grid (``-inf`` outside ``B``). Returns
    the threshold and the quantized capacity of its superlevel set.
    """
    inside = excess[B.mask]
    levels = np.unique(np.concatenate([[0.0], inside[inside > 0]]))
    if len(levels) == 1:
        return 0.0, 0
    top = len(levels) - 1
    if limit_units < node_units:
        # no nonempty set fits; only the empty set {excess > max} is admissible
        return float(levels[top]), 0
    cache: dict[int, int] = {top: 0}

    def units(i: int) -> int:
        if i not in cache:
            cache[i] = capa1(NodeSet(B.domain, excess > levels[i]), stencil).quantized
        return cache[i]

    lo, hi = 0, top  # invariant: units(hi) fits
    if units(0) <= limit_units:
        return 0.0, cache[0]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if units(mid) <= limit_units:
            hi = mid
        else:
            lo = mid
    return float(levels[hi]), cache[hi]


def carve(w: ScalarField, ball: Ball, budget: float, stencil: PerimeterStencil | None = None) -> CarvingResult:
    """Remove the high and low tails of ``w`` on ``ball`` within the capacity budget.

    The thresholds are exact over the sorted distinct excess values. Budget
    comparisons use the quantized capacities, so ``removed_capacity`` (the
    quantized capacity of the removed set, times the quantum) never exceeds
    ``budget``.
    """
    if not budget > 0:
        raise ValueError("carving budget must be positive")
    dom = w.domain
    st = stencil or default_stencil(dom)
    B = ball_nodes(dom, ball)
    vals = np.sort(w.values[B.mask])
    M = float(vals[(len(vals) - 1) // 2])  # lower median, attained on the ball
    if not math.isfinite(M):
        raise ValueError("median of the ball is infinite")
    q = quantum(dom, st)
    half_units = int(math.floor(budget / 2 / q))
    node_units, _ = single_node_capacity(dom, st)
    too_small = half_units < node_units

    full = np.where(B.mask, w.values - M, 0.0)
    plus = np.where(B.mask, np.maximum(full, 0.0), -math.inf)
    minus = np.where(B.mask, np.maximum(-full, 0.0), -math.inf)
    t_plus, _ = _lowest_threshold(plus, B, half_units, node_units, st)
    t_minus, _ = _lowest_threshold(minus, B, half_units, node_units, st)

    removed = NodeSet(dom, (plus > t_plus) | (minus > t_minus))
    kept = B - removed
    if removed.is_empty():
        units = 0
    else:
        units = capa1(removed, st).quantized
    if units > 2 * half_units:
        raise AssertionError("carving exceeded its capacity budget")
    return CarvingResult(kept, units * q, t_plus, t_minus, M, budget, too_small)


def ball_volume(domain, ball: Ball) -> float:
    """Lattice volume ``#nodes * h^n`` of the ball (the discrete Lebesgue measure)."""
    return ball_nodes(domain, ball).count * domain.cell_volume


def scaled_ratio(osc: float, r: float, vol: float, mass: float) -> float:
    """``osc / (2 r) * vol / mass`` with ``0 * inf = 0`` and ``x / 0 = inf``."""
    if osc == 0:
        return 0.0
    if mass == 0 or math.isinf(osc):
        return math.inf
    return 0.5 * osc / r * vol / mass


def lip_from_carving(w: ScalarField, x: Sequence[float], nu: GridMeasure, delta: float,
                     schedule: RadiusSchedule, stencil: PerimeterStencil | None = None,
                     budgets: Sequence[float] | None = None) -> DensityProfile:
    """Upper-bound profile ``osc(w, U_r) / (2r) * L(B) / nu(B)`` with ``U_r`` from ``carve``.

    The budget at radius ``r`` is ``delta * r^(n-1)`` unless explicit
    ``budgets`` (one per radius) are given.
    """
    if not delta > 0 and budgets is None:
        raise ValueError("delta must be positive")
    dom = w.domain
    schedule.check(dom)
    n = dom.dim
    vals, cuts = [], []
    for k, r in enumerate(schedule.radii):
        ball = Ball(tuple(x), r)
        bud = budgets[k] if budgets is not None else delta * r ** (n - 1)
        res = carve(w, ball, bud, stencil)
        osc = oscillation(w, res.kept)
        vals.append(scaled_ratio(osc, r, ball_volume(dom, ball), measure_of(nu, ball)))
        cuts.append(res.to_json())
    prof = DensityProfile(schedule.radii, tuple(vals), schedule.window)
    prof.extra["carving"] = cuts
    return prof


def vanishing_budgets(schedule: RadiusSchedule, dim: int) -> tuple[float, ...]:
    """``r_k^(n-1) / k``: the shrinking-delta stand-in for the delta = 0 number."""
    return tuple(r ** (dim - 1) / k for k, r in enumerate(schedule.radii, start=1))


def necessity_constant(c_maz: float, dim: int) -> float:
    """``4 C_maz omega_n``, the bound on ``delta * Lip`` against the TV measure."""
    from .capacity import omega

    return 4.0 * c_maz * omega(dim)
