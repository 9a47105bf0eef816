"""Contraction complexity of small multigraphs and order-driven tensor contraction.

A graph is given as a vertex count ``r`` plus a list of edges ``(u, v)``;
parallel edges are allowed. Contracting ``u`` and ``v`` merges them into one
vertex (keeping the id ``u``) whose degree is ``deg(u) + deg(v) - 2 * mult(u, v)``.
The cost of an order is the largest degree seen, counting the starting degrees.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


def _multiplicity(r: int, edges) -> np.ndarray:
    m = np.zeros((r, r), dtype=np.int64)
    for u, v in edges:
        if u == v:
            raise ValueError(f"self-loop on vertex {u}")
        m[u, v] += 1
        m[v, u] += 1
    return m


def order_cost(r: int, edges, order) -> int:
    """Max degree along ``order`` (list of merges ``(u, v)``), initial degrees included."""
    m = _multiplicity(r, edges)
    alive = set(range(r))
    worst = int(m.sum(axis=1).max()) if r else 0
    for u, v in order:
        if u not in alive or v not in alive or u == v:
            raise ValueError(f"invalid merge ({u}, {v})")
        m[u] += m[v]
        m[:, u] += m[:, v]
        m[u, u] = 0
        m[v] = 0
        m[:, v] = 0
        alive.discard(v)
        worst = max(worst, int(m[u].sum()))
    return worst


def greedy_order(r: int, edges):
    """Repeatedly merge the adjacent pair with the smallest merged degree (lowest ids on ties)."""
    m = _multiplicity(r, edges)
    alive = list(range(r))
    worst = int(m.sum(axis=1).max()) if r else 0
    order = []
    while len(alive) > 1:
        best = None
        for i, u in enumerate(alive):
            for v in alive[i + 1:]:
                if m[u, v] == 0:
                    continue
                deg = int(m[u].sum() + m[v].sum() - 2 * m[u, v])
                if best is None or deg < best[0]:
                    best = (deg, u, v)
        if best is None:  # disconnected: join components, all degrees are zero now
            best = (int(m[alive[0]].sum() + m[alive[1]].sum()), alive[0], alive[1])
        deg, u, v = best
        m[u] += m[v]
        m[:, u] += m[:, v]
        m[u, u] = 0
        m[v] = 0
        m[:, v] = 0
        alive.remove(v)
        order.append((u, v))
        worst = max(worst, deg)
    return worst, order


def exact_order(r: int, edges):
    """Exhaustive search over merge sequences, memoized on the current vertex partition."""
    if r > 12:
        raise ValueError("exact contraction complexity is limited to 12 vertices")
    base = _multiplicity(r, edges)
    start_worst = int(base.sum(axis=1).max()) if r else 0

    def degree(group: frozenset) -> int:
        inside = list(group)
        return int(base[inside].sum() - base[np.ix_(inside, inside)].sum())

    def mult(g1: frozenset, g2: frozenset) -> int:
        return int(base[np.ix_(list(g1), list(g2))].sum())

    @lru_cache(maxsize=None)
    def best(state: frozenset):
        groups = sorted(state, key=min)
        if len(groups) <= 1:
            return 0, ()
        pairs = [
            (a, b)
            for i, a in enumerate(groups)
            for b in groups[i + 1:]
            if mult(a, b) > 0
        ]
        if not pairs:
            pairs = [(groups[0], groups[1])]
        result = None
        for a, b in pairs:
            merged = a | b
            here = degree(merged)
            if result is not None and here >= result[0]:
                continue
            rest, tail = best((state - {a, b}) | {merged})
            cost = max(here, rest)
            if result is None or cost < result[0]:
                result = (cost, ((min(a), min(b)),) + tail)
        return result

    cost, order = best(frozenset(frozenset([v]) for v in range(r)))
    return max(start_worst, cost), list(order)


def contraction_complexity(r: int, edges, mode: str = "exact"):
    """(cc value, contraction order); ``exact`` is cc(g), ``greedy`` an upper bound."""
    edges = [tuple(e) for e in edges]
    if mode == "exact":
        return exact_order(r, edges)
    if mode == "greedy":
        return greedy_order(r, edges)
    raise ValueError(f"unknown mode {mode!r}")


def contract_with_order(r: int, edges, tensors, order=None, dims=8):
    """Sum over all edge labellings of the product of vertex tensors.

    ``tensors[j]`` has one axis per edge incident to ``j``, in edge-list order.
    ``dims`` is the common index range or a per-edge list; the default 8 matches
    one wire cut per edge. Missing merges are completed greedily.
    """
    edges = [tuple(e) for e in edges]
    if np.isscalar(dims):
        dims = [int(dims)] * len(edges)
    live = {}
    for j in range(r):
        incident = [k for k, (u, v) in enumerate(edges) if j in (u, v)]
        t = np.asarray(tensors[j])
        want = tuple(dims[k] for k in incident)
        if t.shape != want:
            raise ValueError(f"tensor {j} has shape {t.shape}, expected {want}")
        live[j] = (t, incident)
    if order is None:
        order = greedy_order(r, edges)[1]
    order = list(order)
    while True:
        for u, v in order:
            tu, eu = live.pop(u)
            tv, ev = live.pop(v)
            shared = [k for k in eu if k in ev]
            axes_u = [eu.index(k) for k in shared]
            axes_v = [ev.index(k) for k in shared]
            t = np.tensordot(tu, tv, axes=(axes_u, axes_v))
            rest = [k for k in eu if k not in shared] + [k for k in ev if k not in shared]
            live[u] = (t, rest)
        if len(live) <= 1:
            break
        ids = sorted(live)  # the order left vertices alone; finish them off
        order = [(ids[0], v) for v in ids[1:]]
    (t, rest), = live.values()
    if rest:
        raise ValueError("contraction left open edges")
    return complex(t) if np.iscomplexobj(t) else float(t)
