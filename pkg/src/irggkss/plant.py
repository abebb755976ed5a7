"""Density-preserving anomaly injection: planted hubs and planted cliques.

Both procedures only move existing edges, so the edge count of the output
equals that of the input whenever something is planted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, degree_vector, pair_arrays
from .models import as_rng

TOO_SPARSE = "too-sparse"
NO_CANDIDATES = "no-candidates"
ALREADY_CLIQUE = "already-clique"


@dataclass
class PlantOutcome:
    graph: Graph
    planted: bool
    attempts: int = 1
    skipped_reason: str | None = None
    added: list = field(default_factory=list)
    deleted: list = field(default_factory=list)


def _flat(n, u, v):
    i, j = min(u, v), max(u, v)
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def _neighbours(A, v):
    return np.flatnonzero(A[v])


def plant_hub(g: Graph, d_m: int, k: float, labels=None, seed=None,
              target: str = "relative", max_tries: int = 100) -> PlantOutcome:
    """Turn the first vertex of degree ``d_m`` into a hub (one attempt).

    With ``target="relative"`` the hub's degree is raised by
    max(1, ceil(k * s_d)), s_d the sample standard deviation of the degrees;
    ``target="absolute"`` uses max(1, ceil(k * s_d)) itself as the target
    degree.  Each new hub neighbour v gives up one edge to a neighbour of v
    in the hub's group; candidates whose deletions would repeat a pair are
    re-drawn up to ``max_tries`` times and then dropped.
    """
    labels = g.labels if labels is None else np.asarray(labels, dtype=np.int64)
    rng = as_rng(seed)
    A = g.adjacency()
    d = degree_vector(g)
    s_d = float(np.std(d, ddof=1)) if g.n > 1 else 0.0
    hits = np.flatnonzero(d == d_m)
    if hits.size == 0:
        return PlantOutcome(g, False, skipped_reason=NO_CANDIDATES)
    hub = int(hits[0])
    step = max(1, math.ceil(k * s_d))
    d_star = d[hub] + step if target == "relative" else step
    n_new = int(d_star - d[hub])
    target_v = np.array([v for v in range(g.n) if v != hub and not A[hub, v]], dtype=np.int64)
    if d_star == d[hub] or target_v.size == 0 or n_new <= 0:
        return PlantOutcome(g, False, skipped_reason=NO_CANDIDATES)
    hub_group = labels[hub]
    filtered = [v for v in target_v if (labels[_neighbours(A, v)] == hub_group).any()]
    if not filtered:
        return PlantOutcome(g, False, skipped_reason=NO_CANDIDATES)
    if len(filtered) <= n_new:
        pot = list(filtered)
    else:
        pot = [int(v) for v in rng.choice(filtered, size=n_new, replace=False)]

    to_del: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    new_nei: list[int] = []
    for v in pot:
        nv = _neighbours(A, v)
        nv = nv[labels[nv] == hub_group]
        if nv.size == 0:
            continue
        for _ in range(max_tries):
            w = int(rng.choice(nv))
            pair = (min(v, w), max(v, w))
            if pair not in seen:
                seen.add(pair)
                to_del.append(pair)
                new_nei.append(int(v))
                break
    if not to_del or len(to_del) != len(new_nei):
        return PlantOutcome(g, False, skipped_reason=NO_CANDIDATES)
    x = g.x.copy()
    for u, v in to_del:
        x[_flat(g.n, u, v)] = 0
    added = []
    for v in new_nei:
        x[_flat(g.n, hub, v)] = 1
        added.append((min(hub, v), max(hub, v)))
    return PlantOutcome(Graph(g.n, x, g.labels), True, added=added, deleted=to_del)


def plant_hubs(g: Graph, R: int, k: float, labels=None, seed=None,
               target: str = "relative", max_tries: int = 100) -> PlantOutcome:
    """Up to R hub-planting rounds; round i targets the i-th largest distinct degree."""
    if R < 1 or k < 1:
        raise ValueError("need R >= 1 and k >= 1")
    rng = as_rng(seed)
    cur = g
    planted = False
    added, deleted = [], []
    d_m = int(degree_vector(g).max())
    i = 1
    rounds = 0
    while d_m is not None and i <= R:
        out = plant_hub(cur, d_m, k, labels, rng, target, max_tries)
        rounds += 1
        if out.planted:
            planted = True
            added += out.added
            deleted += out.deleted
        cur = out.graph
        i += 1
        uniq = np.unique(degree_vector(cur))[::-1]
        d_m = int(uniq[i - 1]) if i - 1 < uniq.size else None
    return PlantOutcome(cur, planted, attempts=rounds,
                        skipped_reason=None if planted else NO_CANDIDATES,
                        added=added, deleted=deleted)


def edge_types(labels, n):
    """Unordered label pair of every vertex pair, as (min, max) columns."""
    labels = np.asarray(labels, dtype=np.int64)
    rows, cols = pair_arrays(n)
    a, b = labels[rows], labels[cols]
    return np.minimum(a, b), np.maximum(a, b)


def plant_clique(g: Graph, K: int, labels=None, max_rep: int = 100, seed=None) -> PlantOutcome:
    """Plant a K-clique, deleting as many outside edges of each type as are added.

    On failure after ``max_rep`` draws the returned graph is the empty graph
    and ``skipped_reason`` is ``"too-sparse"``.
    """
    if K < 2:
        raise ValueError("clique size must be >= 2")
    if K > g.n:
        raise ValueError("clique larger than the graph")
    labels = g.labels if labels is None else np.asarray(labels, dtype=np.int64)
    rng = as_rng(seed)
    n = g.n
    ta, tb = edge_types(labels, n)
    tcode = ta * (int(labels.max()) + 1) + tb
    x = g.x
    counter = 0
    while True:
        counter += 1
        smpl = np.sort(rng.choice(n, size=K, replace=False))
        iu, ju = np.triu_indices(K, k=1)
        new = np.array([_flat(n, smpl[a], smpl[b]) for a, b in zip(iu, ju)], dtype=np.int64)
        to_add = new[x[new] == 0]
        if to_add.size == 0:
            return PlantOutcome(g, True, attempts=counter, skipped_reason=ALREADY_CLIQUE)
        need_types, need = np.unique(tcode[to_add], return_counts=True)
        in_new = np.zeros(x.size, dtype=bool)
        in_new[new] = True
        poten = np.flatnonzero((x == 1) & ~in_new)
        have = np.array([(tcode[poten] == t).sum() for t in need_types])
        if (have >= need).all():
            break
        if counter > max_rep:
            return PlantOutcome(Graph(n, None, g.labels), False, attempts=counter,
                                skipped_reason=TOO_SPARSE)
    to_del = []
    for t, c in zip(need_types, need):
        pool = poten[tcode[poten] == t]
        to_del.extend(int(s) for s in rng.choice(pool, size=c, replace=False))
    y = x.copy()
    y[np.array(to_del, dtype=np.int64)] = 0
    y[to_add] = 1
    rows, cols = pair_arrays(n)
    return PlantOutcome(
        Graph(n, y, g.labels), True, attempts=counter,
        added=[(int(rows[s]), int(cols[s])) for s in to_add],
        deleted=[(int(rows[s]), int(cols[s])) for s in sorted(to_del)],
    )
