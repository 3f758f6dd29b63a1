"""Exact integer s-t max-flow (Dinic) on a compact arc list.

The graph has ``n`` free nodes plus a source (index ``n``) and a sink
(``n + 1``). Terminal capacities are given per node; inner arcs are
undirected with symmetric capacity. All arithmetic is int64.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_I64_MAX = np.iinfo(np.int64).max


@njit(cache=True)
def _build(n, src, snk, eu, ev, ew):
    # Arc layout: every undirected edge and terminal link becomes a pair of
    # opposite arcs, stored in CSR order with explicit reverse indices.
    N = n + 2
    s = n
    t = n + 1
    m = len(eu)
    deg = np.zeros(N, np.int64)
    for i in range(m):
        deg[eu[i]] += 1
        deg[ev[i]] += 1
    for v in range(n):
        if src[v] > 0:
            deg[s] += 1
            deg[v] += 1
        if snk[v] > 0:
            deg[t] += 1
            deg[v] += 1
    start = np.zeros(N + 1, np.int64)
    for v in range(N):
        start[v + 1] = start[v] + deg[v]
    A = start[N]
    to = np.empty(A, np.int64)
    frm = np.empty(A, np.int64)
    cap = np.empty(A, np.int64)
    rev = np.empty(A, np.int64)
    pos = start[:N].copy()
    for i in range(m):
        a = pos[eu[i]]
        pos[eu[i]] += 1
        b = pos[ev[i]]
        pos[ev[i]] += 1
        to[a] = ev[i]
        frm[a] = eu[i]
        cap[a] = ew[i]
        rev[a] = b
        to[b] = eu[i]
        frm[b] = ev[i]
        cap[b] = ew[i]
        rev[b] = a
    for v in range(n):
        if src[v] > 0:
            a = pos[s]
            pos[s] += 1
            b = pos[v]
            pos[v] += 1
            to[a] = v
            frm[a] = s
            cap[a] = src[v]
            rev[a] = b
            to[b] = s
            frm[b] = v
            cap[b] = 0
            rev[b] = a
        if snk[v] > 0:
            a = pos[v]
            pos[v] += 1
            b = pos[t]
            pos[t] += 1
            to[a] = t
            frm[a] = v
            cap[a] = snk[v]
            rev[a] = b
            to[b] = v
            frm[b] = t
            cap[b] = 0
            rev[b] = a
    return start, to, frm, cap, rev


@njit(cache=True)
def _bfs(N, s, start, to, cap, level, queue):
    for i in range(N):
        level[i] = -1
    level[s] = 0
    head = 0
    tail = 1
    queue[0] = s
    while head < tail:
        u = queue[head]
        head += 1
        for a in range(start[u], start[u + 1]):
            v = to[a]
            if cap[a] > 0 and level[v] < 0:
                level[v] = level[u] + 1
                queue[tail] = v
                tail += 1


@njit(cache=True)
def _dinic(n, src, snk, eu, ev, ew):
    start, to, frm, cap, rev = _build(n, src, snk, eu, ev, ew)
    N = n + 2
    s = n
    t = n + 1
    level = np.empty(N, np.int64)
    queue = np.empty(N, np.int64)
    it = np.empty(N, np.int64)
    path = np.empty(N, np.int64)
    flow = 0
    big = np.iinfo(np.int64).max
    while True:
        _bfs(N, s, start, to, cap, level, queue)
        if level[t] < 0:
            break
        for v in range(N):
            it[v] = start[v]
        depth = 0
        u = s
        while True:
            if u == t:
                f = big
                for i in range(depth):
                    if cap[path[i]] < f:
                        f = cap[path[i]]
                back = depth
                for i in range(depth):
                    a = path[i]
                    cap[a] -= f
                    cap[rev[a]] += f
                    if cap[a] == 0 and i < back:
                        back = i
                flow += f
                # Retreat to the tail of the first saturated arc.
                depth = back
                u = frm[path[back]]
                continue
            advanced = False
            while it[u] < start[u + 1]:
                a = it[u]
                v = to[a]
                if cap[a] > 0 and level[v] == level[u] + 1:
                    path[depth] = a
                    depth += 1
                    u = v
                    advanced = True
                    break
                it[u] += 1
            if not advanced:
                if u == s:
                    break
                level[u] = -2
                depth -= 1
                u = frm[path[depth]]
                it[u] += 1
    # Source side of the minimum cut: nodes reachable in the residual graph.
    _bfs(N, s, start, to, cap, level, queue)
    reach = np.zeros(n, np.bool_)
    for v in range(n):
        reach[v] = level[v] >= 0
    return flow, reach


def min_cut(n: int, src: np.ndarray, snk: np.ndarray, eu: np.ndarray, ev: np.ndarray,
            ew: np.ndarray) -> tuple[int, np.ndarray]:
    """Return ``(cut value, source-side mask)`` for the described graph.

    The returned side is the minimal source set (residual reachability), so it
    is unique for a given instance.
    """
    src = np.ascontiguousarray(src, dtype=np.int64)
    snk = np.ascontiguousarray(snk, dtype=np.int64)
    eu = np.ascontiguousarray(eu, dtype=np.int64)
    ev = np.ascontiguousarray(ev, dtype=np.int64)
    ew = np.ascontiguousarray(ew, dtype=np.int64)
    if n == 0:
        return 0, np.zeros(0, dtype=bool)
    if (src < 0).any() or (snk < 0).any() or (ew < 0).any():
        raise ValueError("capacities must be nonnegative")
    total = int(src.sum()) + int(snk.sum()) + 2 * int(ew.sum())
    if total >= _I64_MAX // 4:
        raise OverflowError("capacity total too large for int64 max-flow")
    flow, reach = _dinic(n, src, snk, eu, ev, ew)
    return int(flow), reach
