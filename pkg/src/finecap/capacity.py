"""Discrete perimeter, total variation and 1-capacities via s-t min-cut.

Sets live on the lattice and are embedded in R^n: every node outside the
domain counts as outside the set. ``perimeter`` and ``total_variation`` are
the only exceptions; they measure inside the domain with a free boundary.

Capacities solve

    capa1(A)      = min { |E| h^n + Per(E) : A <= E }
    rcapa1(A, W)  = min { Per(E)           : A <= E <= W }

with integer weights, so the minimum is exact in quantized units. The graph
is restricted to the bounding box of ``A``: cutting any competitor with an
axis-aligned half-space containing ``A`` never increases the energy (each
stencil edge lies on a lattice chain whose boundary count cannot grow), so an
optimal set always lies inside that box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import BadDimension, FinecapError, InfiniteValue
from .grid import Ball, GridDomain, NodeSet, ScalarField, ball_nodes
from .maxflow import min_cut

# Unit-ball volumes omega_n.
OMEGA = {0: 1.0, 1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}
# H^{n-1} measure of the unit sphere, s_{n-1}.
SPHERE = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}

QUANT_BITS = 40


@dataclass(frozen=True)
class PerimeterStencil:
    """Half set of neighbour offsets (one of each +-pair) with edge weights."""

    name: str
    dim: int
    offsets: tuple[tuple[int, ...], ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.offsets) != len(self.weights):
            raise ValueError("offsets and weights differ in length")
        if any(w < 0 for w in self.weights):
            raise ValueError("stencil weights must be nonnegative")
        for o in self.offsets:
            if len(o) != self.dim or not any(o):
                raise ValueError(f"bad offset {o}")

    @property
    def reach(self) -> int:
        return max(max(abs(c) for c in o) for o in self.offsets)

    @property
    def full_offsets(self) -> list[tuple[tuple[int, ...], float]]:
        out = []
        for o, w in zip(self.offsets, self.weights):
            out.append((o, w))
            out.append((tuple(-c for c in o), w))
        return out


def make_stencil(name: str, dim: int, h: float) -> PerimeterStencil:
    """Preset stencils for spacing ``h``.

    ``l1-4`` charges ``h^(n-1)`` per axis face (4/6-neighbourhood).
    ``cc-8`` uses the 2D 8-neighbourhood with Cauchy-Crofton weights
    ``pi*h/8`` (axis) and ``pi*h/(8*sqrt 2)`` (diagonal), whose orientation
    average reproduces Euclidean length.
    """
    if name == "l1-4":
        offs = tuple(tuple(1 if i == j else 0 for i in range(dim)) for j in range(dim))
        return PerimeterStencil(name, dim, offs, tuple(h ** (dim - 1) for _ in offs))
    if name == "cc-8":
        if dim != 2:
            raise BadDimension("cc-8 is a 2D stencil")
        wa = math.pi * h / 8.0
        wd = math.pi * h / (8.0 * math.sqrt(2.0))
        return PerimeterStencil(name, 2, ((1, 0), (0, 1), (1, 1), (1, -1)), (wa, wa, wd, wd))
    raise ValueError(f"unknown stencil {name!r}")


def default_stencil(domain: GridDomain, name: str | None = None) -> PerimeterStencil:
    if name is None:
        name = "cc-8" if domain.dim == 2 else "l1-4"
    return _stencil_cached(name, domain.dim, domain.spacing)


@lru_cache(maxsize=64)
def _stencil_cached(name: str, dim: int, h: float) -> PerimeterStencil:
    return make_stencil(name, dim, h)


def quantum(domain: GridDomain, stencil: PerimeterStencil) -> float:
    """Power of two at most ``max_weight * 2**-40``."""
    maxw = max(max(stencil.weights), domain.cell_volume)
    return math.ldexp(1.0, math.floor(math.log2(maxw)) - QUANT_BITS)


def quantized_weights(domain: GridDomain, stencil: PerimeterStencil) -> tuple[float, tuple[int, ...], int]:
    q = quantum(domain, stencil)
    ws = tuple(int(round(w / q)) for w in stencil.weights)
    vol = int(round(domain.cell_volume / q))
    return q, ws, vol


def _pair_slices(shape: Sequence[int], o: Sequence[int]) -> tuple[tuple[slice, ...], tuple[slice, ...]]:
    """Slices selecting all pairs (p, p + o) with both ends inside ``shape``."""
    sa, sb = [], []
    for n, c in zip(shape, o):
        lo = max(0, -c)
        hi = min(n, n - c)
        sa.append(slice(lo, hi))
        sb.append(slice(lo + c, hi + c))
    return tuple(sa), tuple(sb)


def _edge_factors(domain: GridDomain, window, o: Sequence[int], sa, sb) -> np.ndarray | None:
    """Per-edge window factor for the pairs selected by ``sa``/``sb``.

    A node-set window weighs an edge by ``(in(p) + in(q)) / 2``; a ball window
    keeps an edge when its midpoint lies in the open ball.
    """
    if window is None:
        return None
    if isinstance(window, Ball):
        c = (np.asarray(window.center, dtype=float) - np.asarray(domain.origin)) / domain.spacing
        rr = (window.radius / domain.spacing) ** 2
        d2 = 0.0
        for ax, (s, oc) in enumerate(zip(sa, o)):
            shape = [1] * domain.dim
            shape[ax] = -1
            i = np.arange(s.start, s.stop, dtype=float) + 0.5 * oc - c[ax]
            d2 = d2 + (i * i).reshape(shape)
        return (d2 < rr).astype(float)
    m = window.mask.astype(float)
    return (m[sa] + m[sb]) * 0.5


def perimeter(E: NodeSet, window: NodeSet | Ball | None = None,
              stencil: PerimeterStencil | None = None) -> float:
    """Weighted count of stencil edges cut by ``E`` inside the domain.

    Edges leaving the domain cost nothing. Window semantics follow
    :func:`_edge_factors`.
    """
    dom = E.domain
    st = stencil or default_stencil(dom)
    m = E.mask
    terms = []
    for o, w in zip(st.offsets, st.weights):
        sa, sb = _pair_slices(dom.shape, o)
        cut = m[sa] != m[sb]
        fac = _edge_factors(dom, window, o, sa, sb)
        if fac is None:
            terms.append(w * float(np.count_nonzero(cut)))
        else:
            terms.append(w * float(np.broadcast_to(fac, cut.shape)[cut].sum()))
    return math.fsum(terms)


def total_variation(u: ScalarField, window: NodeSet | Ball | None = None,
                    stencil: PerimeterStencil | None = None, coarea_check: bool = False) -> float:
    """``sum w_e |u_p - u_q|`` over stencil edges, window factors as in ``perimeter``.

    With ``coarea_check`` the level-set integral is computed independently and
    a mismatch above ``1e-12`` relative raises.
    """
    dom = u.domain
    st = stencil or default_stencil(dom)
    if not np.all(np.isfinite(u.values)):
        raise InfiniteValue("total variation needs finite values")
    v = u.values
    terms = []
    for o, w in zip(st.offsets, st.weights):
        sa, sb = _pair_slices(dom.shape, o)
        d = np.abs(v[sa] - v[sb])
        fac = _edge_factors(dom, window, o, sa, sb)
        if fac is not None:
            d = d * fac
        terms.append(w * float(d.sum()))
    tv = math.fsum(terms)
    if coarea_check:
        co = coarea_integral(u, window, st)
        if abs(tv - co) > 1e-12 * max(abs(tv), abs(co), 1e-300):
            raise FinecapError(f"coarea mismatch: TV={tv!r} level-set integral={co!r}")
    return tv


def coarea_integral(u: ScalarField, window: NodeSet | Ball | None = None,
                    stencil: PerimeterStencil | None = None) -> float:
    """``sum_i (t_{i+1} - t_i) * Per({u > t_i})`` over consecutive distinct values."""
    if not np.all(np.isfinite(u.values)):
        raise InfiniteValue("coarea integral needs finite values")
    levels = np.unique(u.values)
    terms = []
    for a, b in zip(levels[:-1], levels[1:]):
        terms.append((b - a) * perimeter(NodeSet(u.domain, u.values > a), window, stencil))
    return math.fsum(terms)


@dataclass(frozen=True, eq=False)
class CapacityResult:
    value: float
    optimal_set: NodeSet
    quantization_bound: float
    quantized: int | None
    quantum: float
    infinite: bool = False

    def to_json(self) -> dict:
        return {
            "value": self.value if not self.infinite else "inf",
            "quantization_bound": self.quantization_bound,
            "quantized": self.quantized,
            "quantum": self.quantum,
            "infinite": self.infinite,
        }


def _solve(A: NodeSet, W: NodeSet | None, stencil: PerimeterStencil | None,
           with_volume: bool) -> CapacityResult:
    dom = A.domain
    st = stencil or default_stencil(dom)
    q, wq, volq = quantized_weights(dom, st)
    if not with_volume:
        volq = 0
    if A.is_empty():
        return CapacityResult(0.0, NodeSet.empty(dom), 0.0, 0, q)

    idx = np.nonzero(A.mask)
    lo = [int(i.min()) for i in idx]
    hi = [int(i.max()) + 1 for i in idx]
    inner = tuple(slice(a, b) for a, b in zip(lo, hi))
    R = st.reach
    wshape = tuple(b - a for a, b in zip(lo, hi))
    pshape = tuple(s + 2 * R for s in wshape)
    core = tuple(slice(R, R + s) for s in wshape)

    # 0 = fixed outside, 1 = fixed inside (A), 2 = free
    state = np.zeros(pshape, dtype=np.int8)
    la = A.mask[inner]
    lw = np.ones(wshape, dtype=bool) if W is None else W.mask[inner]
    state[core] = np.where(la, 1, np.where(lw, 2, 0))
    free = state == 2
    nfree = int(free.sum())
    ids = np.full(pshape, -1, dtype=np.int64)
    ids[free] = np.arange(nfree)

    src = np.zeros(nfree, dtype=np.int64)
    snk = np.full(nfree, volq, dtype=np.int64)
    const = volq * int(la.sum())
    eu, ev, ew = [], [], []
    n_edges = 0
    for o, w in zip(st.offsets, wq):
        sa, sb = _pair_slices(pshape, o)
        a, b = state[sa], state[sb]
        ia, ib = ids[sa], ids[sb]
        touch = (a != 0) | (b != 0)
        n_edges += int(touch.sum())
        ff = (a == 2) & (b == 2)
        if ff.any():
            eu.append(ia[ff])
            ev.append(ib[ff])
            ew.append(np.full(int(ff.sum()), w, dtype=np.int64))
        for x, y, ix, iy in ((a, b, ia, ib), (b, a, ib, ia)):
            sel = (x == 2) & (y == 1)
            if sel.any():
                src += w * np.bincount(ix[sel], minlength=nfree)
            sel = (x == 2) & (y == 0)
            if sel.any():
                snk += w * np.bincount(ix[sel], minlength=nfree)
        const += w * int((((a == 1) & (b == 0)) | ((a == 0) & (b == 1))).sum())

    if nfree:
        cat = lambda parts: np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
        flow, reach = min_cut(nfree, src, snk, cat(eu), cat(ev), cat(ew))
    else:
        flow, reach = 0, np.zeros(0, dtype=bool)
    Q = const + flow

    local = state == 1
    if nfree:
        local[free] = reach
    E = np.zeros(dom.shape, dtype=bool)
    E[inner] = local[core]
    Eset = NodeSet(dom, E)
    value = set_energy(Eset, st, with_volume)
    bound = q * float(n_edges + int(np.prod(wshape)))
    return CapacityResult(value, Eset, bound, int(Q), q)


def set_energy(E: NodeSet, stencil: PerimeterStencil | None = None, with_volume: bool = True) -> float:
    """``|E| h^n + Per_Rn(E)`` in floating point, with the domain exterior outside ``E``."""
    dom = E.domain
    st = stencil or default_stencil(dom)
    R = st.reach
    m = np.pad(E.mask, R)
    terms = [dom.cell_volume * E.count] if with_volume else []
    for o, w in zip(st.offsets, st.weights):
        sa, sb = _pair_slices(m.shape, o)
        terms.append(w * float(np.count_nonzero(m[sa] != m[sb])))
    return math.fsum(terms)


def capa1(A: NodeSet, stencil: PerimeterStencil | None = None) -> CapacityResult:
    """Discrete Sobolev 1-capacity ``min_{E >= A} vol(E) + Per(E)``."""
    return _solve(A, None, stencil, with_volume=True)


def rcapa1(A: NodeSet, W: NodeSet, stencil: PerimeterStencil | None = None) -> CapacityResult:
    """Relative 1-capacity ``min_{A <= E <= W} Per(E)``; infinite when ``A == W``."""
    if not A.issubset(W):
        raise ValueError("rcapa1 needs A to be a subset of W")
    if A == W:
        st = stencil or default_stencil(A.domain)
        return CapacityResult(math.inf, A, 0.0, None, quantum(A.domain, st), infinite=True)
    return _solve(A, W, stencil, with_volume=False)


@lru_cache(maxsize=64)
def _single_node(domain: GridDomain, stencil: PerimeterStencil) -> tuple[int, float]:
    q, wq, volq = quantized_weights(domain, stencil)
    Q = volq + 2 * sum(wq)
    return Q, Q * q


def single_node_capacity(domain: GridDomain, stencil: PerimeterStencil | None = None) -> tuple[int, float]:
    """Quantized and real capacity of one node; a lower bound for every nonempty set."""
    return _single_node(domain, stencil or default_stencil(domain))


def budget_units(budget: float, domain: GridDomain, stencil: PerimeterStencil | None = None) -> int:
    """Largest integer ``k`` with ``k * q <= budget``."""
    q = quantum(domain, stencil or default_stencil(domain))
    if budget == math.inf:
        return np.iinfo(np.int64).max // 8
    return int(math.floor(budget / q))


def omega(n: int) -> float:
    if n not in OMEGA:
        raise BadDimension(f"no unit-ball volume for n={n}")
    return OMEGA[n]


def cn_constant(n: int, C_I: float) -> float:
    """``min{w_(n-1), w_n} / (2^(13n) n^n C_I)``."""
    if n not in (1, 2, 3):
        raise BadDimension(f"dimension {n} unsupported")
    if C_I < 1:
        raise ValueError("C_I must be at least 1")
    return min(OMEGA[n - 1], OMEGA[n]) / (2.0 ** (13 * n) * n ** n * C_I)


def isoperimetric_ratio(E: NodeSet, ball: Ball, stencil: PerimeterStencil | None = None) -> float | None:
    """``min{vol(B&E), vol(B\\E)} / (r Per(E; B))``; None when the perimeter vanishes."""
    dom = E.domain
    B = ball_nodes(dom, ball)
    inside = (B & E).count * dom.cell_volume
    outside = (B - E).count * dom.cell_volume
    small = min(inside, outside)
    if small == 0:
        return 0.0
    per = perimeter(E, ball, stencil)
    if per == 0:
        return None
    return small / (ball.radius * per)


def calibrate_isoperimetric(samples: Iterable[tuple[NodeSet, Ball]],
                            stencil: PerimeterStencil | None = None) -> float:
    """Largest isoperimetric ratio over the samples (degenerate ones skipped)."""
    best = 0.0
    for E, ball in samples:
        r = isoperimetric_ratio(E, ball, stencil)
        if r is not None:
            best = max(best, r)
    return best


def standard_isoperimetric_samples(dim: int, stencil_name: str | None = None,
                                   h: float = 1.0 / 32) -> list[tuple[NodeSet, Ball]]:
    """Half-spaces, balls and cubes against balls at three scales."""
    dom = GridDomain.box([-1.0] * dim, [1.0] * dim, h)
    pts = dom.points
    samples = []
    c = (0.0,) * dim
    for r in (0.25, 0.5, 0.75):
        ball = Ball(c, r)
        angles = (0.0, math.pi / 8, math.pi / 4) if dim >= 2 else (0.0,)
        for a in angles:
            n = np.zeros(dim)
            n[0] = math.cos(a)
            if dim >= 2:
                n[1] = math.sin(a)
            samples.append((NodeSet(dom, pts @ n > 0), ball))
        for s in (0.3, 0.6):
            shift = np.zeros(dim)
            shift[0] = 0.5 * r
            rad = np.sqrt(((pts - shift) ** 2).sum(axis=-1))
            samples.append((NodeSet(dom, rad < s * r), ball))
            cube = np.all(np.abs(pts - shift) < s * r, axis=-1)
            samples.append((NodeSet(dom, cube), ball))
    return samples


@lru_cache(maxsize=8)
def calibrated_isoperimetric_constant(dim: int) -> float:
    """Empirical ratio maximum over the standard family (may be below 1)."""
    h = {1: 1.0 / 128, 2: 1.0 / 32, 3: 1.0 / 12}[dim]
    samples = standard_isoperimetric_samples(dim, h=h)
    return calibrate_isoperimetric(samples)


def mazya_ratio(u: ScalarField, ball: Ball, stencil: PerimeterStencil | None = None) -> float | None:
    """``avg_B |u| * capa1(B & {u = 0}) / TV(u; B)``; None if the TV vanishes."""
    dom = u.domain
    B = ball_nodes(dom, ball)
    vals = np.abs(u.values[B.mask])
    zero = NodeSet(dom, B.mask & (u.values == 0))
    tv = total_variation(u, ball, stencil)
    if tv == 0:
        return None
    cap = capa1(zero, stencil).value
    return float(vals.mean()) * cap / tv


@lru_cache(maxsize=8)
def calibrated_mazya_constant(dim: int) -> float:
    """Empirical Maz'ya constant over ramps and cones vanishing on part of a ball."""
    h = {1: 1.0 / 128, 2: 1.0 / 32, 3: 1.0 / 12}[dim]
    dom = GridDomain.box([-1.0] * dim, [1.0] * dim, h)
    pts = dom.points
    rad = np.sqrt((pts ** 2).sum(axis=-1))
    best = 0.0
    for r in (0.25, 0.5):
        ball = Ball((0.0,) * dim, r)
        fields = []
        for s in (-0.5, 0.0, 0.5):
            fields.append(np.maximum(pts[..., 0] - s * r, 0.0))
            fields.append(np.minimum(np.maximum(pts[..., 0] - s * r, 0.0), 0.25 * r))
        for s in (0.25, 0.5):
            fields.append(np.maximum(rad - s * r, 0.0))
            fields.append(np.maximum(s * r - rad, 0.0))
        for f in fields:
            ratio = mazya_ratio(ScalarField(dom, f), ball)
            if ratio is not None:
                best = max(best, ratio)
    return best
