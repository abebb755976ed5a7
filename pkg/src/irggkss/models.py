"""Edge-probability models, samplers and estimators.

Every constructor returns a flat probability vector ``p`` aligned with the
canonical pair order of :mod:`irggkss.graph`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph, degree_vector, num_pairs, pair_arrays


def as_rng(seed) -> np.random.Generator:
    """Generator from an int, a tuple of ints (derived stream) or a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (tuple, list)):
        return np.random.default_rng([int(s) for s in seed])
    return np.random.default_rng(seed)


def n_from_pairs(N: int) -> int:
    n = int(round((1 + math.sqrt(1 + 8 * N)) / 2))
    if num_pairs(n) != N:
        raise ValueError(f"{N} is not a triangular pair count")
    return n


def labels_from_sizes(sizes) -> np.ndarray:
    sizes = [int(s) for s in sizes]
    if any(s <= 0 for s in sizes):
        raise ValueError("group sizes must be positive")
    return np.repeat(np.arange(1, len(sizes) + 1), sizes)


def _check_square_symmetric(Q, name="Q"):
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape[0] != Q.shape[1]:
        raise ValueError(f"{name} must be square")
    if not np.allclose(Q, Q.T):
        raise ValueError(f"{name} must be symmetric")
    return Q


def _pair_blocks(labels):
    labels = np.asarray(labels, dtype=np.int64)
    rows, cols = pair_arrays(labels.size)
    return labels[rows] - 1, labels[cols] - 1


@dataclass
class ErmmParams:
    """Block probabilities ``Q`` (L x L) and per-vertex group labels (1..L).

    ``undefined`` marks block pairs with no possible vertex pairs (only set
    by :func:`ermm_mle`).
    """

    Q: np.ndarray
    labels: np.ndarray
    undefined: np.ndarray | None = None

    def __post_init__(self):
        self.Q = _check_square_symmetric(self.Q)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if ((self.Q < 0) | (self.Q > 1)).any():
            raise ValueError("Q entries must lie in [0, 1]")
        if self.labels.size and (self.labels.min() < 1 or self.labels.max() > len(self.Q)):
            raise ValueError("labels must lie in 1..L")

    @classmethod
    def from_sizes(cls, sizes, Q) -> "ErmmParams":
        return cls(Q, labels_from_sizes(sizes))

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=len(self.Q) + 1)[1:]


@dataclass
class DcsbmParams:
    """Propensities ``theta``, Poisson-rate block matrix ``Q`` and labels."""

    theta: np.ndarray
    Q: np.ndarray
    labels: np.ndarray
    zero_blocks: np.ndarray | None = None

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.Q = _check_square_symmetric(self.Q)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if (self.theta < 0).any():
            raise ValueError("theta must be non-negative")
        if (self.Q < 0).any():
            raise ValueError("Q must be non-negative")
        if self.theta.shape != self.labels.shape:
            raise ValueError("theta and labels must have the same length")


@dataclass
class NlpaParams:
    """Non-linear preferential attachment: m edges per arrival, exponent alpha."""

    m: int = 1
    alpha: float = 1.0
    m0: int | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.m0 is None:
            self.m0 = max(self.m, 2)
        if self.m0 < self.m:
            raise ValueError("m0 must be >= m")


def ermm_probabilities(params: ErmmParams) -> np.ndarray:
    bu, bv = _pair_blocks(params.labels)
    return params.Q[bu, bv].astype(float)


def er_probabilities(n: int, p: float) -> np.ndarray:
    return np.full(num_pairs(n), float(p))


def dcsbm_probabilities(params: DcsbmParams) -> np.ndarray:
    """Bernoulli-Poisson link: p_uv = 1 - exp(-theta_u theta_v Q_{g_u g_v})."""
    rows, cols = pair_arrays(params.labels.size)
    bu, bv = _pair_blocks(params.labels)
    rate = params.theta[rows] * params.theta[cols] * params.Q[bu, bv]
    return -np.expm1(-rate)


def chung_lu_probabilities(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if (w <= 0).any():
        raise ValueError("Chung-Lu weights must be positive")
    rows, cols = pair_arrays(w.size)
    return np.minimum(1.0, w[rows] * w[cols] / w.sum())


def dcsbm_preset(which: int, labels, seed):
    """Random-propensity DCSBM of the synthetic misfit experiment.

    p_uv = exp(beta_u + beta_v + alpha_{g_u g_v}) with beta_u = log U(0,1).
    Returns ``(p, p_proxy)`` where the proxy ERMM has entries
    0.25 * exp(alpha_{g_u g_v}), the expectation over beta.
    """
    alphas = {
        1: np.log([[0.6, 0.2], [0.2, 0.6]]),
        2: np.log([[0.6, 0.1], [0.1, 0.3]]),
    }
    if which not in alphas:
        raise ValueError("preset must be 1 or 2")
    alpha = alphas[which]
    labels = np.asarray(labels, dtype=np.int64)
    rng = as_rng(seed)
    beta = np.log(rng.uniform(size=labels.size))
    rows, cols = pair_arrays(labels.size)
    bu, bv = _pair_blocks(labels)
    p = np.exp(beta[rows] + beta[cols] + alpha[bu, bv])
    return p, 0.25 * np.exp(alpha[bu, bv])


def irg_sample(p, seed, labels=None) -> Graph:
    """Independent Bernoulli(p_s) edges."""
    p = np.asarray(p, dtype=float)
    n = n_from_pairs(p.size)
    x = (as_rng(seed).random(p.size) < p).astype(np.uint8)
    return Graph(n, x, labels)


def nlpa_sample(n: int, params: NlpaParams, seed, labels=None) -> Graph:
    """Grow a graph by attachment probability proportional to degree**alpha.

    The seed graph is a ring on m0 vertices (a single edge when m0 = 2).
    Each arrival picks m distinct targets one at a time, renormalising the
    weights over the vertices not yet picked.
    """
    m, alpha, m0 = params.m, params.alpha, params.m0
    if n <= m0:
        raise ValueError("n must exceed m0")
    rng = as_rng(seed)
    deg = np.zeros(n)
    edges = []
    ring = [(i, (i + 1) % m0) for i in range(m0)] if m0 > 2 else [(0, 1)]
    for u, v in ring:
        edges.append((u, v))
        deg[u] += 1
        deg[v] += 1
    for new in range(m0, n):
        w = deg[:new] ** alpha if alpha > 0 else np.ones(new)
        w = w.copy()
        targets = []
        for _ in range(m):
            t = int(rng.choice(new, p=w / w.sum()))
            targets.append(t)
            w[t] = 0.0
        for t in targets:
            edges.append((t, new))
            deg[t] += 1
            deg[new] += 1
    return Graph.from_edges(n, edges, labels)


def _block_pair_counts(labels, L):
    sizes = np.bincount(labels, minlength=L + 1)[1:].astype(float)
    Npairs = np.outer(sizes, sizes)
    np.fill_diagonal(Npairs, sizes * (sizes - 1) / 2)
    return Npairs


def block_edge_counts(g: Graph, labels, L: int | None = None) -> np.ndarray:
    """Symmetric L x L matrix of edge counts between (and within) blocks."""
    labels = np.asarray(labels, dtype=np.int64)
    L = int(labels.max()) if L is None else L
    bu, bv = _pair_blocks(labels)
    on = g.x.astype(bool)
    E = np.zeros((L, L))
    np.add.at(E, (bu[on], bv[on]), 1.0)
    return E + E.T - np.diag(np.diag(E))


def ermm_mle(g: Graph, labels=None) -> ErmmParams:
    """Block-wise edge frequencies; undefined blocks are set to 0 and flagged."""
    labels = g.labels if labels is None else np.asarray(labels, dtype=np.int64)
    L = int(labels.max())
    E = block_edge_counts(g, labels, L)
    Npairs = _block_pair_counts(labels, L)
    undefined = Npairs == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        Q = np.where(undefined, 0.0, E / np.where(undefined, 1.0, Npairs))
    return ErmmParams(Q, labels, undefined=undefined)


def dcsbm_estimate(g: Graph, labels=None, eps: float = 0.001) -> DcsbmParams:
    """Karrer-Newman fit.

    Q_rs counts edge ends between blocks r and s (so the diagonal is twice
    the within-block edge count) plus ``eps``; theta_u is the degree of u
    over the total degree of its block.
    """
    labels = g.labels if labels is None else np.asarray(labels, dtype=np.int64)
    L = int(labels.max())
    E = block_edge_counts(g, labels, L)
    Q = E + np.diag(np.diag(E)) + eps
    d = degree_vector(g).astype(float)
    block_deg = np.bincount(labels, weights=d, minlength=L + 1)[1:]
    zero = block_deg == 0
    denom = np.where(zero, 1.0, block_deg)[labels - 1]
    theta = np.where(zero[labels - 1], 0.0, d / denom)
    return DcsbmParams(theta, Q, labels, zero_blocks=zero)


def probabilities_for(g_or_n, spec: dict, seed=None) -> np.ndarray:
    """Edge probabilities from a small dict spec.

    kinds: ``er`` (n, p), ``ermm`` (sizes or labels, Q), ``chung-lu`` (w or
    w_range), ``dcsbm`` (theta, Q, labels), ``ermm-fit`` / ``dcsbm-fit``
    (estimated from a graph passed as ``g_or_n``).
    """
    kind = spec["kind"]
    if kind == "er":
        n = int(spec.get("n", g_or_n.n if isinstance(g_or_n, Graph) else g_or_n))
        return er_probabilities(n, spec["p"])
    if kind == "ermm":
        if "sizes" in spec:
            params = ErmmParams.from_sizes(spec["sizes"], spec["Q"])
        else:
            params = ErmmParams(spec["Q"], spec["labels"])
        return ermm_probabilities(params)
    if kind == "dcsbm":
        return dcsbm_probabilities(DcsbmParams(spec["theta"], spec["Q"], spec["labels"]))
    if kind == "chung-lu":
        if "w" in spec:
            w = np.asarray(spec["w"], dtype=float)
        else:
            lo, hi = spec.get("w_range", (2.0, 8.0))
            w = as_rng(seed).uniform(lo, hi, size=int(spec["n"]))
        return chung_lu_probabilities(w + float(spec.get("shift", 0.0)))
    if kind == "ermm-fit":
        return ermm_probabilities(ermm_mle(g_or_n))
    if kind == "dcsbm-fit":
        return dcsbm_probabilities(dcsbm_estimate(g_or_n, eps=spec.get("eps", 0.001)))
    raise ValueError(f"unknown model kind {kind!r}")
