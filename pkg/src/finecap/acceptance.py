"""The acceptance battery: thirteen seeded checks with one pass/fail line each.

Every criterion returns a ``CriterionResult`` whose ``details`` hold the
measured numbers. Wall-clock times are kept out of ``details`` so reports
from two runs with the same seed are byte-identical.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import io
from .bvtools import capacitary_boundary, pointwise_variation_1d
from .capacity import (capa1, coarea_integral, make_stencil, quantized_weights, rcapa1, total_variation)
from .config import SCHEMA_VERSION, Config
from .corpus import DEFAULT_B, CantorDistortion, by_tag, cantor_distortion_map, cantor_intervals, cantor_vitali
from .covering import BoxWindow, verify_cover, whitney_cover
from .distortion import (affine_map, distortion_profile, generalized_distortion, grows, rank_experiment,
                         variation_bound_check)
from .finetopo import carve, lip_from_carving, vanishing_budgets
from .grid import Ball, GridDomain, NodeSet, RadiusSchedule, ScalarField, ball_nodes, oscillation
from .maximal import maximal_function, weak_type_diagnostic
from .measure import GridMeasure


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}: {self.summary}"

    def to_json(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "summary": self.summary, "details": self.details}


def _rng(cfg: Config, number: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, number])


# 1. cut oracle


def enumerate_capacity(A: np.ndarray, W: np.ndarray, node_units: int,
                       offsets, weight_units) -> int:
    """Smallest quantized energy over all ``A <= E <= W`` by exhaustive enumeration.

    Nodes outside the array count as outside ``E``.
    """
    dim = A.ndim
    free = np.flatnonzero((W & ~A).ravel())
    codes = np.arange(1 << free.size, dtype=np.int64)
    E = np.repeat(A.ravel()[None, :].astype(np.int8), codes.size, axis=0)
    if free.size:
        E[:, free] = ((codes[:, None] >> np.arange(free.size)) & 1).astype(np.int8)
    reach = max(max(abs(c) for c in o) for o in offsets)
    P = np.pad(E.reshape((codes.size,) + A.shape), [(0, 0)] + [(reach, reach)] * dim)
    total = node_units * E.sum(axis=1, dtype=np.int64)
    for o, w in zip(offsets, weight_units):
        sa = (slice(None),) + tuple(slice(max(0, -c), P.shape[k + 1] - max(0, c)) for k, c in enumerate(o))
        sb = (slice(None),) + tuple(slice(max(0, c), P.shape[k + 1] - max(0, -c)) for k, c in enumerate(o))
        total += w * (P[sa] != P[sb]).reshape(codes.size, -1).sum(axis=1, dtype=np.int64)
    return int(total.min())


CUT_SHAPES = {1: [(12,), (9,), (5,)], 2: [(3, 4), (2, 6), (3, 3), (2, 5)], 3: [(2, 2, 3), (2, 2, 2)]}


def cut_oracle(cfg: Config, quick: bool = False) -> CriterionResult:
    rng = _rng(cfg, 1)
    per_dim = 40 if quick else 200
    checked = 0
    mismatches = []
    for dim, shapes in CUT_SHAPES.items():
        for i in range(per_dim):
            shape = shapes[i % len(shapes)]
            h = float(rng.choice([0.25, 0.5, 1.0, 0.3]))
            name = "cc-8" if dim == 2 and i % 2 else "l1-4"
            d = GridDomain(dim, shape, h, (0.0,) * dim)
            st = make_stencil(name, dim, h)
            _, wq, volq = quantized_weights(d, st)
            A = rng.random(shape) < 0.2
            W = A | (rng.random(shape) < 0.7)
            got = capa1(NodeSet(d, A), st).quantized
            want = enumerate_capacity(A, np.ones(shape, bool), volq, st.offsets, wq)
            checked += 1
            if got != want:
                mismatches.append({"op": "capa1", "dim": dim, "instance": i, "got": got, "want": want})
            if (W & ~A).any():
                got = rcapa1(NodeSet(d, A), NodeSet(d, W), st).quantized
                want = enumerate_capacity(A, W, 0, st.offsets, wq)
                checked += 1
                if got != want:
                    mismatches.append({"op": "rcapa1", "dim": dim, "instance": i, "got": got, "want": want})
    ok = not mismatches
    return CriterionResult(1, "cut-oracle exactness", ok,
                           f"{checked} capacities, {len(mismatches)} mismatches",
                           {"instances_per_dim": per_dim, "checked": checked, "mismatches": mismatches[:10]})


# 2. closed-form capacity


def closed_form_capacity(cfg: Config, quick: bool = False) -> CriterionResult:
    r_in, r_out = 0.25, 0.5
    target = 2 * math.pi * r_in
    rows = []
    hs = (1 / 16, 1 / 32, 1 / 64) if quick else (1 / 32, 1 / 64, 1 / 128)
    for h in hs:
        d = GridDomain.box([-1, -1], [1, 1], h)
        r = np.sqrt((d.points ** 2).sum(-1))
        v = rcapa1(NodeSet(d, r < r_in), NodeSet(d, r < r_out)).value
        rows.append({"h": h, "rcapa1": v, "rel_error": abs(v - target) / target})
    ones = []
    for h in (0.1, 0.01, 0.001):
        d1 = GridDomain.box([0], [1], h)
        m = np.zeros(d1.shape, bool)
        m[d1.shape[0] // 2] = True
        v = capa1(NodeSet(d1, m)).value
        ones.append({"h": h, "capa1": v, "rel_error": abs(v - 2) / 2})
    tol = cfg.tol_capacity_rel
    ok = rows[-1]["rel_error"] <= tol and ones[-1]["rel_error"] <= tol
    return CriterionResult(2, "closed-form capacity", ok,
                           f"annulus error {rows[-1]['rel_error']:.4f}, single node error {ones[-1]['rel_error']:.4f}"
                           f" (tol {tol})",
                           {"annulus_target": target, "annulus": rows, "single_node": ones})


# 3. coarea


def _piecewise_constant(rng: np.random.Generator, i: int) -> ScalarField:
    dim = (1, 2, 2, 3)[i % 4]
    shape = {1: (40,), 2: (16, 16), 3: (7, 7, 7)}[dim]
    d = GridDomain(dim, shape, float(rng.choice([0.1, 0.125, 0.3])), (0.0,) * dim)
    if i % 2:
        v = rng.integers(-3, 4, size=shape) * 0.5
    else:
        v = np.zeros(shape)
        for _ in range(4):
            lo = [int(rng.integers(0, s)) for s in shape]
            hi = [int(rng.integers(a, s + 1)) for a, s in zip(lo, shape)]
            v[tuple(slice(a, b) for a, b in zip(lo, hi))] += rng.normal()
    return ScalarField(d, v)


def coarea(cfg: Config, quick: bool = False) -> CriterionResult:
    rng = _rng(cfg, 3)
    count = 20 if quick else 50
    worst = 0.0
    for i in range(count):
        u = _piecewise_constant(rng, i)
        tv = total_variation(u)
        co = coarea_integral(u)
        rel = abs(tv - co) / tv if tv > 0 else abs(co)
        worst = max(worst, rel)
    ok = worst <= cfg.tol_coarea_rel
    return CriterionResult(3, "coarea identity", ok, f"worst relative gap {worst:.3e} over {count} fields",
                           {"fields": count, "worst_relative_gap": worst})


# 4. carving contract


def _rough_field(rng: np.random.Generator, d: GridDomain) -> np.ndarray:
    p = d.points
    k = rng.normal(size=(3, d.dim))
    w = sum(np.sin(p @ kk + rng.uniform(0, 6)) for kk in k)
    return w + np.where(rng.random(d.shape) < 0.05, rng.normal(0, 20, d.shape), 0.0)


def carving_contract(cfg: Config, quick: bool = False) -> CriterionResult:
    rng = _rng(cfg, 4)
    count = 25 if quick else 100
    d = GridDomain.box([-1, -1], [1, 1], 1 / 16)
    failures = []
    for i in range(count):
        u = ScalarField(d, _rough_field(rng, d))
        ball = Ball(tuple(rng.uniform(-0.3, 0.3, 2)), float(rng.uniform(0.25, 0.6)))
        b1 = float(rng.uniform(0.05, 1.0))
        b2 = b1 * float(rng.uniform(1.0, 4.0))
        a, b = carve(u, ball, b1), carve(u, ball, b2)
        B = ball_nodes(d, ball)
        for res in (a, b):
            if not res.removed_capacity <= res.budget:
                failures.append({"instance": i, "reason": "budget exceeded", "removed": res.removed_capacity,
                                 "budget": res.budget})
            if not res.kept.issubset(B):
                failures.append({"instance": i, "reason": "kept set leaves the ball"})
            if oscillation(u, res.kept) > res.oscillation_bound * (1 + 1e-12):
                failures.append({"instance": i, "reason": "oscillation above the thresholds"})
        if not (b.t_plus <= a.t_plus and b.t_minus <= a.t_minus):
            failures.append({"instance": i, "reason": "thresholds not monotone in budget"})
    return CriterionResult(4, "carving contract", not failures, f"{count} instances, {len(failures)} failures",
                           {"instances": count, "failures": failures[:10]})


# 5. Sobolev upper bound


def sobolev_upper(cfg: Config, quick: bool = False) -> CriterionResult:
    rng = _rng(cfg, 5)
    npts = 5 if quick else 20
    sched = RadiusSchedule(0.5, 0.5, 3, 2)
    h = sched.radii[-1] / 8
    budgets = vanishing_budgets(sched, 2)
    rows = []
    worst = 0.0
    for e in by_tag("smooth"):
        d = e.domain(h)
        u = ScalarField(d, e.func(d.points))
        grad = np.sqrt((e.gradient(d.points) ** 2).sum(-1))
        nu = GridMeasure(ScalarField(d, grad + 0.01))
        fmax = 0.0
        for _ in range(npts):
            x = tuple(float(v) for v in d.position(d.nearest_index(rng.uniform(-0.6, 0.6, 2))))
            prof = lip_from_carving(u, x, nu, 0.0, sched, budgets=budgets)
            fmax = max(fmax, prof.tail_max)
        worst = max(worst, fmax)
        rows.append({"field": e.name, "worst_tail_max": fmax})
    ok = worst <= cfg.tol_lip_upper
    return CriterionResult(5, "Sobolev upper bound", ok,
                           f"worst tail {worst:.4f} (limit {cfg.tol_lip_upper}) at h = r_K/8",
                           {"h": h, "points_per_field": npts, "fields": rows, "worst": worst})


# 6. Cantor-Vitali


def cantor_vitali_dichotomy(cfg: Config, quick: bool = False) -> CriterionResult:
    rng = _rng(cfg, 6)
    depth, h = 8, 1e-5
    u = cantor_vitali(depth, h)
    pv = pointwise_variation_1d(u.values)
    d = u.domain
    t = d.points[..., 0]
    left = cantor_intervals(depth) / 3 ** depth
    k = np.searchsorted(left, t, side="right") - 1
    on = (k >= 0) & (t <= left[np.clip(k, 0, None)] + 3.0 ** -depth)
    sched = RadiusSchedule(2.0 ** -9, 0.5, 6, 2)
    budgets = vanishing_budgets(sched, 1)
    reach = sched.radii[0]
    cand = np.flatnonzero(~on & (t > reach) & (t < 1 - reach))
    count = 40 if quick else 200
    pick = np.sort(rng.choice(cand, size=count, replace=False))
    nu = GridMeasure.lebesgue(d)
    good = 0
    tails = []
    for i in pick:
        prof = lip_from_carving(u, (float(t[i]),), nu, 0.0, sched, budgets=budgets)
        tails.append(prof.tail_max)
        good += prof.tail_max <= cfg.tol_cantor_lip
    frac = good / count
    ok = frac >= 0.95 and abs(pv - 1) <= cfg.tol_pv
    return CriterionResult(6, "Cantor-Vitali dichotomy", ok,
                           f"{frac:.1%} of off-Cantor points with lip tail <= {cfg.tol_cantor_lip}; pV = {pv!r}",
                           {"depth": depth, "h": h, "samples": count, "fraction_small": frac,
                            "pointwise_variation": pv, "worst_tail": max(tails)})


# 7. Whitney


def random_whitney_instance(rng: np.random.Generator, n: int):
    """Box window, points (a third pushed toward the boundary), scale R and probe points."""
    lo = rng.uniform(-1, 0, size=n)
    hi = lo + rng.uniform(0.5, 2.0, size=n)
    W = BoxWindow(tuple(lo), tuple(hi))
    k = int(rng.integers(5, 40))
    t = rng.uniform(size=(k, n))
    t[: k // 3] = np.where(t[: k // 3] < 0.5, t[: k // 3] ** 4, 1 - (1 - t[: k // 3]) ** 4)
    t = np.clip(t, 1e-6, 1 - 1e-6)
    A = lo + t * (hi - lo)
    R = float(10 ** rng.uniform(-2.5, 0))
    probes = lo + rng.uniform(size=(30, n)) * (hi - lo)
    return A, W, R, probes


def whitney_properties(cfg: Config, quick: bool = False) -> CriterionResult:
    rng = _rng(cfg, 7)
    per_dim = 10 if quick else 50
    bad = []
    max_overlap = {}
    for n in (1, 2, 3):
        worst = 0
        for i in range(per_dim):
            A, W, R, probes = random_whitney_instance(rng, n)
            rep = verify_cover(whitney_cover(A, W, R), probes)
            worst = max(worst, rep.max_overlap)
            if not rep.ok:
                bad.append({"dim": n, "instance": i, "report": rep.to_json()})
        max_overlap[str(n)] = {"observed": worst, "bound": 280 ** n}
    return CriterionResult(7, "Whitney properties", not bad,
                           f"{3 * per_dim} instances, {len(bad)} with violations",
                           {"instances_per_dim": per_dim, "max_overlap": max_overlap, "violations": bad[:5]})


# 8. capacitary boundary


def capacitary_boundary_disk(cfg: Config, quick: bool = False) -> CriterionResult:
    R = 0.5
    rows = []
    hs = (1 / 16, 1 / 32, 1 / 64) if quick else (1 / 32, 1 / 64, 1 / 128)
    for h in hs:
        d = GridDomain.box([-1, -1], [1, 1], h)
        F = NodeSet(d, np.sqrt((d.points ** 2).sum(-1)) < R)
        rep = capacitary_boundary(F, 0.5, RadiusSchedule(16 * h, 0.5, 3, 2))
        m = rep.measure
        rows.append({"h": h, "measure": m, "rel_error": abs(m - 2 * math.pi * R) / (2 * math.pi * R)})
    d = GridDomain.box([-1, -1], [1, 1], hs[0])
    whole = capacitary_boundary(NodeSet.full(d), 0.5, RadiusSchedule(0.5, 0.5, 3, 2)).band.is_empty()
    ok = rows[-1]["rel_error"] <= cfg.tol_boundary_rel and whole
    return CriterionResult(8, "capacitary boundary", ok,
                           f"disk error {rows[-1]['rel_error']:.4f} (tol {cfg.tol_boundary_rel}); "
                           f"whole domain empty: {whole}",
                           {"refinements": rows, "whole_domain_empty": whole})


# 9. maximal function


def maximal_checks(cfg: Config, quick: bool = False) -> CriterionResult:
    h = 1 / 128
    d = GridDomain.box([-2], [4], h)
    x = d.points[..., 0]
    M = maximal_function(ScalarField(d, ((x >= 0) & (x <= 1)).astype(float)), 2.0)
    v = float(M.values[d.node_index((2.0,))])
    closed = abs(v - 0.25) <= 2 * h
    fields = [e for e in by_tag("smooth") + by_tag("bv") if e.kind == "scalar" and "singular" not in e.tags]
    if quick:
        fields = fields[::2]
    hs = (1 / 8, 1 / 16) if quick else (1 / 16, 1 / 32)
    fractions = (0.1, 0.25, 0.5, 0.75, 0.9)
    rows = []
    ok_drift = True
    for e in fields:
        maxima = []
        for hh in hs:
            u = e.build(hh)
            Mu = maximal_function(u, math.inf)
            top = float(np.abs(u.values).max())
            wt = weak_type_diagnostic(u, [f * top for f in fractions], Mu=Mu)
            maxima.append(max(r.ratio for r in wt))
        finite = all(math.isfinite(m) and m > 0 for m in maxima)
        drift = max(maxima) / min(maxima) if finite else math.inf
        ok_drift &= finite and drift < 2
        rows.append({"field": e.name, "max_ratio": maxima, "drift": drift})
    ok = closed and ok_drift
    worst = max(r["drift"] for r in rows)
    return CriterionResult(9, "maximal function", ok,
                           f"M chi(2) = {v:.6f} (|err| <= 2h: {closed}); worst weak-type drift {worst:.3f}",
                           {"closed_form": {"h": h, "value": v, "target": 0.25}, "weak_type": rows,
                            "spacings": list(hs), "level_fractions": list(fractions)})


# 10. distortion


CANTOR_POINTS = (0.25, 1 / 3, 0.7)
CANTOR_ADJACENT = (0.25 + 5e-8, 0.5)


def distortion_dichotomy(cfg: Config, quick: bool = False) -> CriterionResult:
    d = GridDomain.box([-1, -1], [1, 1], 1 / 64)
    sched = RadiusSchedule(0.5, 0.5, 4, 2)
    ident = distortion_profile(affine_map(d, np.eye(2)), (0.0, 0.0), sched)
    ident_ok = all(H == 1.0 for H in ident.H)
    stretch = distortion_profile(affine_map(d, np.diag([2.0, 1.0])), (0.0, 0.0), sched)
    stretch_ok = abs(stretch.tail_limsup_H - 2.0) <= 0.1
    r0 = 2.0 ** -24
    h = r0 / 32
    csched = RadiusSchedule(r0, 0.5, 3, 2)
    raw = {}
    weighted = {}
    points = CANTOR_POINTS[:2] if quick else CANTOR_POINTS
    for x2 in points + CANTOR_ADJACENT:
        raw[repr(x2)], weighted[repr(x2)] = [], []
        for J in (1, 2, 3):
            cd = CantorDistortion(J, DEFAULT_B[:J])
            center = (0.5, x2)
            dom = cd.local_domain(center, 2 * r0, h)
            f = cd.field(dom)
            _, hp = generalized_distortion(f, center, GridMeasure.lebesgue(dom), csched)
            _, ha = generalized_distortion(f, center, cd.weight(dom), csched)
            raw[repr(x2)].append(hp.tail_max)
            weighted[repr(x2)].append(ha.tail_max)
    worst_a = max(max(v) for v in weighted.values())
    growth = all(all(b > a for a, b in zip(raw[repr(x)], raw[repr(x)][1:])) for x in points)
    ok = ident_ok and stretch_ok and worst_a <= 1.2 and growth
    return CriterionResult(10, "distortion dichotomy", ok,
                           f"identity exact: {ident_ok}; stretch tail {stretch.tail_limsup_H:.4f}; "
                           f"weighted tail max {worst_a:.4f}; raw growth at Cantor points: {growth}",
                           {"identity_H": list(ident.H), "stretch_H": list(stretch.H),
                            "cantor": {"r0": r0, "h": h, "raw_h_f": raw, "weighted_h_f": weighted,
                                       "cantor_points": [repr(x) for x in points]}})


# 11. rank experiment


def _random_full_rank(rng: np.random.Generator) -> np.ndarray:
    while True:
        A = rng.normal(size=(2, 2))
        s = np.linalg.svd(A, compute_uv=False)
        if s[1] > 0 and s[0] / s[1] <= 10:
            return A


def rank_dichotomy(cfg: Config, quick: bool = False) -> CriterionResult:
    rng = _rng(cfg, 11)
    nfull, nrank1 = (4, 3) if quick else (20, 10)
    full = []
    for _ in range(nfull):
        A = _random_full_rank(rng)
        s = np.linalg.svd(A, compute_uv=False)
        cond = float(s[0] / s[1])
        tails = [lv.tail for lv in rank_experiment(A, refinements=3)]
        full.append({"matrix": A.tolist(), "cond": cond, "tails": tails, "ok": max(tails) <= 4 * cond})
    deg = []
    for _ in range(nrank1):
        A = np.outer(rng.normal(size=2), rng.normal(size=2))
        tails = [lv.tail for lv in rank_experiment(A, refinements=3)]
        deg.append({"matrix": A.tolist(), "tails": tails, "ok": grows(tails)})
    jt = [lv.tail for lv in rank_experiment(jump=True, refinements=3)]
    deg.append({"matrix": "jump", "tails": jt, "ok": grows(jt)})
    nf = sum(r["ok"] for r in full)
    nd = sum(r["ok"] for r in deg)
    ok = nf == len(full) and nd == len(deg)
    return CriterionResult(11, "rank experiment", ok,
                           f"full rank bounded {nf}/{len(full)}; degenerate growth {nd}/{len(deg)}",
                           {"full_rank": full, "degenerate": deg})


# 12. variation bound


def variation_bound(cfg: Config, quick: bool = False) -> CriterionResult:
    h = 1 / 8 if quick else 1 / 16
    sched = RadiusSchedule(1.0, 0.5, 3, 2) if not quick else RadiusSchedule(2.0, 0.5, 3, 2)
    rows = []
    for e in by_tag("map"):
        f = e.build(h)
        rep = variation_bound_check(f, GridMeasure.lebesgue(f.domain), sched, besicovitch=cfg.N_2)
        rows.append({"map": e.name, **rep.to_json()})
    dom = GridDomain(2, (32, 32), 1 / 32, (1 / 64, 1 / 64)) if quick else None
    f, a, cd = cantor_distortion_map(3, domain=dom)
    csched = RadiusSchedule(0.5 if quick else 0.25, 0.5, 3, 2)
    rep = variation_bound_check(f, a, csched, besicovitch=cfg.N_2)
    rows.append({"map": "cantor_distortion", **rep.to_json()})
    ok = all(r["passed"] for r in rows)
    margin = min(r["rhs"] / r["lhs"] if r["lhs"] > 0 else math.inf for r in rows)
    return CriterionResult(12, "variation bound", ok,
                           f"{sum(r['passed'] for r in rows)}/{len(rows)} maps pass with N_2 = {cfg.N_2}; "
                           f"smallest rhs/lhs {margin:.3g}",
                           {"maps": rows})


CRITERIA: dict[int, Callable[[Config, bool], CriterionResult]] = {
    1: cut_oracle,
    2: closed_form_capacity,
    3: coarea,
    4: carving_contract,
    5: sobolev_upper,
    6: cantor_vitali_dichotomy,
    7: whitney_properties,
    8: capacitary_boundary_disk,
    9: maximal_checks,
    10: distortion_dichotomy,
    11: rank_dichotomy,
    12: variation_bound,
}

RUNTIME_LIMIT = 15 * 60.0


def run_criterion(number: int, cfg: Config, quick: bool = False) -> CriterionResult:
    t0 = time.perf_counter()
    res = CRITERIA[number](cfg, quick)
    res.seconds = time.perf_counter() - t0
    return res


def battery_report(results: list[CriterionResult], cfg: Config, quick: bool) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "quick": quick,
        "config": cfg.resolved(2),
        "criteria": [r.to_json() for r in results],
        "passed": all(r.passed for r in results),
    }


def determinism(cfg: Config, quick: bool, first: list[CriterionResult] | None = None,
                elapsed: float | None = None, log: Callable[[str], None] | None = None) -> CriterionResult:
    """Rerun the battery and compare canonical report bytes.

    With ``first`` given, that run is compared against one fresh rerun of the
    same criteria; otherwise the quick battery is run twice.
    """
    if first is None:
        first = [run_criterion(k, cfg, True) for k in CRITERIA]
        quick_ref = True
    else:
        quick_ref = quick
    numbers = [r.number for r in first]
    second = [run_criterion(k, cfg, quick_ref) for k in numbers]
    a = io.dumps(battery_report(first, cfg, quick_ref))
    b = io.dumps(battery_report(second, cfg, quick_ref))
    same = a == b
    diff = [r1.number for r1, r2 in zip(first, second) if io.dumps(r1) != io.dumps(r2)]
    in_time = elapsed is None or elapsed <= RUNTIME_LIMIT
    if log is not None:
        log(f"determinism rerun: {sum(r.seconds for r in second):.1f}s")
    return CriterionResult(13, "determinism", same and in_time,
                           f"rerun byte-identical: {same} over criteria {numbers}; "
                           f"runtime within {RUNTIME_LIMIT / 60:.0f} min: {in_time}",
                           {"compared_criteria": numbers, "differing_criteria": diff,
                            "report_bytes": len(a)})


def run_suite(cfg: Config, quick: bool = False, only: list[int] | None = None,
              log: Callable[[str], None] | None = None, rerun: bool = True) -> dict:
    """Run the battery; criterion 13 reruns everything that ran and compares bytes."""
    numbers = sorted(only) if only else list(CRITERIA) + [13]
    results = []
    t0 = time.perf_counter()
    for k in numbers:
        if k == 13:
            continue
        res = run_criterion(k, cfg, quick)
        if log is not None:
            log(f"{res.line()}  ({res.seconds:.1f}s)")
        results.append(res)
    if 13 in numbers and rerun:
        elapsed = time.perf_counter() - t0
        res = determinism(cfg, quick, results or None, elapsed, log)
        if log is not None:
            log(res.line())
        results.append(res)
    return battery_report(results, cfg, quick)
