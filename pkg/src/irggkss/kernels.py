"""Graph kernels over lists of graphs on a common vertex set.

Three kernels are provided: the Weisfeiler-Lehman subtree kernel, the
size-3 graphlet kernel and the Gaussian vertex-edge histogram (VEH) kernel.
For WL and graphlet there is also a fast path that returns the feature
differences phi(F_s) - phi(g) for all one-edge flips F_s of a base graph g
without materialising the N+1 graph list.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import Graph, degree_vector, num_pairs, pair_arrays

KINDS = ("wl", "graphlet3", "veh-gauss")


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "wl"
    h: int = 3
    sigma: float = 1.0
    normalize: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kernel kind must be one of {KINDS}, got {self.kind!r}")
        if self.h < 0:
            raise ValueError("WL height must be >= 0")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def is_product(self) -> bool:
        return self.kind == "veh-gauss"

    @classmethod
    def parse(cls, text: str) -> "KernelSpec":
        """Parse ``wl``, ``wl:2``, ``graphlet3``, ``graphlet3:norm``, ``veh-gauss:0.5``."""
        kind, _, arg = text.partition(":")
        kind = kind.strip().lower()
        if kind == "graphlet":
            kind = "graphlet3"
        if kind in ("veh", "veh_gauss"):
            kind = "veh-gauss"
        if kind == "wl":
            return cls("wl", h=int(arg) if arg else 3)
        if kind == "graphlet3":
            return cls("graphlet3", normalize=arg.strip().lower() in ("norm", "normalize"))
        if kind == "veh-gauss":
            return cls("veh-gauss", sigma=float(arg) if arg else 1.0)
        raise ValueError(f"unknown kernel {text!r}")

    def label(self) -> str:
        if self.kind == "wl":
            return f"wl:{self.h}"
        if self.kind == "veh-gauss":
            return f"veh-gauss:{self.sigma:g}"
        return "graphlet3:norm" if self.normalize else "graphlet3"


@dataclass
class KernelMatrix:
    """Kernel values over a graph list.

    When built from :func:`perturbation_list`, ``base`` is the base graph and
    row 0 is the base while row s+1 is the flip of pair s.
    """

    values: np.ndarray
    base: Graph | None = None
    spec: KernelSpec | None = None

    @property
    def is_perturbation(self) -> bool:
        return self.base is not None and self.values.shape[0] == self.base.N + 1

    def to_csv(self, path) -> None:
        np.savetxt(path, self.values, delimiter=",", fmt="%.10g")


def perturbation_list(g: Graph) -> list[Graph]:
    """[g, flip(g,0), ..., flip(g,N-1)]."""
    return [g] + [g.flip(s) for s in range(g.N)]


def _check_common_n(graphs) -> int:
    if not graphs:
        raise ValueError("empty graph list")
    n = graphs[0].n
    if any(gr.n != n for gr in graphs):
        raise ValueError("all graphs in the list must have the same vertex count")
    return n


# --- Weisfeiler-Lehman -----------------------------------------------------


_HASH_MULT = np.uint64(0x9E3779B97F4A7C15)


def _padded_signatures(own, row_of_entry, nb_labels, nrows):
    """Rows [own label, -1 padding..., sorted neighbour labels]."""
    counts = np.bincount(row_of_entry, minlength=nrows)
    width = int(counts.max()) if counts.size else 0
    out = np.full((nrows, width + 1), -1, dtype=np.int64)
    out[:, 0] = own
    if row_of_entry.size:
        order = np.argsort(row_of_entry, kind="stable")
        r = row_of_entry[order]
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        pos = np.arange(r.size) - starts[r]
        out[r, pos + 1] = nb_labels[order]
        out[:, 1:].sort(axis=1)
    return out


def _widen(sig, width):
    """Insert padding after the own-label column so rows reach ``width``."""
    extra = width - sig.shape[1]
    if extra == 0:
        return sig
    pad = np.full((sig.shape[0], extra), -1, dtype=sig.dtype)
    return np.hstack((sig[:, :1], pad, sig[:, 1:]))


def _compress(rows: np.ndarray) -> np.ndarray:
    """Exact dictionary compression of signature rows to consecutive ids."""
    if rows.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    # hash each row, then confirm that rows sharing a hash are identical;
    # on a collision fall back to comparing raw row bytes
    r = rows.astype(np.uint64) + np.uint64(1)
    h = np.zeros(rows.shape[0], dtype=np.uint64)
    with np.errstate(over="ignore"):
        for c in range(r.shape[1]):
            h = (h * _HASH_MULT) ^ r[:, c]
            h ^= h >> np.uint64(29)
    first, inv = np.unique(h, return_index=True, return_inverse=True)[1:]
    inv = inv.reshape(-1)
    if np.array_equal(rows[first][inv], rows):
        return inv.astype(np.int64)
    packed = np.ascontiguousarray(rows.astype(np.int32))
    void = packed.view(np.dtype((np.void, packed.itemsize * packed.shape[1]))).ravel()
    return np.unique(void, return_inverse=True)[1].reshape(-1).astype(np.int64)


def wl_features(graphs, h: int, initial_labels=None) -> sp.csr_matrix:
    """Stacked WL label histograms for iterations 0..h (rows = graphs).

    Initial labels default to each graph's group labels.  All graphs are
    refined together so label ids are shared across the list.
    """
    n = _check_common_n(graphs)
    G = len(graphs)
    if initial_labels is None:
        lab = np.concatenate([gr.labels for gr in graphs]).astype(np.int64)
    else:
        lab = np.tile(np.asarray(initial_labels, dtype=np.int64), G)
    rows, cols = pair_arrays(n)
    src, dst = [], []
    for i, gr in enumerate(graphs):
        on = np.flatnonzero(gr.x)
        a, b = rows[on] + i * n, cols[on] + i * n
        src.extend((a, b))
        dst.extend((b, a))
    src = np.concatenate(src) if src else np.zeros(0, dtype=np.int64)
    dst = np.concatenate(dst) if dst else np.zeros(0, dtype=np.int64)
    graph_of_node = np.repeat(np.arange(G), n)

    _, lab = np.unique(lab, return_inverse=True)
    blocks = []
    for it in range(h + 1):
        if it > 0:
            sig = _padded_signatures(lab, src, lab[dst], G * n)
            lab = _compress(sig)
        nlab = int(lab.max()) + 1 if lab.size else 0
        data = np.ones(lab.size)
        blocks.append(sp.csr_matrix((data, (graph_of_node, lab)), shape=(G, nlab)))
    return sp.hstack(blocks, format="csr")


def wl_kernel(graphs, h: int = 3, initial_labels=None, normalize: bool = False) -> KernelMatrix:
    phi = wl_features(graphs, h, initial_labels)
    K = (phi @ phi.T).toarray()
    if normalize:
        K = _normalize(K)
    return KernelMatrix(K)


def _normalize(K):
    d = np.sqrt(np.diag(K))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = K / np.outer(d, d)
    return np.nan_to_num(out)


def _wl_base_refinement(g: Graph, h: int):
    """Per-iteration label vectors of the base graph (ids local to g)."""
    n = g.n
    A = sp.csr_matrix(g.adjacency())
    indptr, indices = A.indptr, A.indices
    _, lab = np.unique(g.labels, return_inverse=True)
    labs = [lab.astype(np.int64)]
    row = np.repeat(np.arange(n), np.diff(indptr))
    for _ in range(h):
        lab = _compress(_padded_signatures(lab, row, lab[indices], n))
        labs.append(lab)
    return labs, indptr, indices


def _lookup(keys_sorted, vals, query, default):
    """vals[key] where present in keys_sorted, else default (elementwise)."""
    if keys_sorted.size == 0:
        return default
    pos = np.searchsorted(keys_sorted, query)
    pos = np.minimum(pos, keys_sorted.size - 1)
    hit = keys_sorted[pos] == query
    return np.where(hit, vals[pos], default)


def wl_flip_deltas(g: Graph, h: int, pairs=None):
    """Sparse WL feature differences phi(F_s) - phi(g) for each flipped pair.

    Only vertices whose WL label can change after flipping pair s are
    re-labelled: at iteration 1 the two endpoints, afterwards the vertices
    that changed plus their neighbours.  Signatures of all re-labelled
    vertices are compressed jointly with the base graph's signatures, so the
    result equals the difference of full histograms under a dictionary
    shared by the whole perturbation list.

    Returns a list (one entry per iteration 1..h) of
    ``(row, col, val)`` triples: row = position in ``pairs``, col = label id
    within that iteration, val = +1/-1.  Iteration 0 never changes.
    """
    n = g.n
    pu_all, pv_all = pair_arrays(n)
    pairs = np.arange(g.N) if pairs is None else np.asarray(pairs, dtype=np.int64)
    S = pairs.size
    pu, pv = pu_all[pairs], pv_all[pairs]
    bit = g.x[pairs].astype(np.int64)

    A = sp.csr_matrix(g.adjacency())
    indptr, indices = A.indptr, A.indices
    deg = np.diff(indptr)
    base_row = np.repeat(np.arange(n), deg)

    _, base_lab = np.unique(g.labels, return_inverse=True)
    base_lab = base_lab.astype(np.int64)
    ch_keys = np.zeros(0, dtype=np.int64)   # changed (s, x) keys, sorted
    ch_lab = np.zeros(0, dtype=np.int64)
    out = []
    for _ in range(h):
        # candidates: both endpoints, changed vertices and their neighbours
        ch_s, ch_x = ch_keys // n, ch_keys % n
        nb_cnt = deg[ch_x]
        nb_s = np.repeat(ch_s, nb_cnt)
        nb_x = indices[_csr_positions(indptr, ch_x, nb_cnt)]
        cand = np.concatenate((
            np.arange(S) * n + pu, np.arange(S) * n + pv, ch_keys, nb_s * n + nb_x,
        ))
        cand = np.unique(cand)
        cs, cx = cand // n, cand % n
        own = _lookup(ch_keys, ch_lab, cand, base_lab[cx])

        # neighbour lists in the flipped graph
        cnt = deg[cx]
        e_row = np.repeat(np.arange(cand.size), cnt)
        e_nb = indices[_csr_positions(indptr, cx, cnt)]
        e_s = cs[e_row]
        partner = np.where(cx == pu[cs], pv[cs], np.where(cx == pv[cs], pu[cs], -1))
        is_end = partner >= 0
        # flipping an existing edge removes the partner; a missing one adds it
        drop = is_end[e_row] & (bit[e_s] == 1) & (e_nb == partner[e_row])
        e_row, e_nb, e_s = e_row[~drop], e_nb[~drop], e_s[~drop]
        add = np.flatnonzero(is_end & (bit[cs] == 0))
        e_row = np.concatenate((e_row, add))
        e_nb = np.concatenate((e_nb, partner[add]))
        e_s = np.concatenate((e_s, cs[add]))
        nb_lab = _lookup(ch_keys, ch_lab, e_s * n + e_nb, base_lab[e_nb])

        base_sig = _padded_signatures(base_lab, base_row, base_lab[indices], n)
        cand_sig = _padded_signatures(own, e_row, nb_lab, cand.size)
        w = max(base_sig.shape[1], cand_sig.shape[1])
        base_sig = _widen(base_sig, w)
        cand_sig = _widen(cand_sig, w)
        ids = _compress(np.vstack((base_sig, cand_sig)))
        base_lab, new_lab = ids[:n], ids[n:]

        changed = new_lab != base_lab[cx]
        ch_keys, ch_lab = cand[changed], new_lab[changed]
        r = cs[changed]
        out.append((
            np.concatenate((r, r)),
            np.concatenate((ch_lab, base_lab[cx[changed]])),
            np.concatenate((np.ones(r.size), -np.ones(r.size))),
            int(ids.max()) + 1,
        ))
    return out


def _csr_positions(indptr, rows, counts):
    """Flat positions into a CSR index array for the given rows."""
    if rows.size == 0:
        return np.zeros(0, dtype=np.int64)
    starts = np.repeat(indptr[rows], counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    return starts + offs


def wl_flip_delta_matrix(g: Graph, h: int, pairs=None) -> sp.csr_matrix:
    """Stacked sparse (len(pairs) x total labels) difference matrix."""
    S = g.N if pairs is None else len(pairs)
    blocks = []
    for r, c, v, ncol in wl_flip_deltas(g, h, pairs):
        blocks.append(sp.csr_matrix((v, (r, c)), shape=(S, ncol)))
    if not blocks:
        return sp.csr_matrix((S, 0))
    return sp.hstack(blocks, format="csr")


# --- graphlets ---------------------------------------------------------------


def graphlet_features(g: Graph) -> np.ndarray:
    """Counts of 3-vertex induced subgraphs with 0, 1, 2, 3 edges."""
    n = g.n
    if n < 3:
        raise ValueError("graphlet kernel needs n >= 3")
    A = g.adjacency().astype(np.int64)
    d = A.sum(axis=1)
    m = int(d.sum()) // 2
    c3 = int(np.trace(A @ A @ A)) // 6
    c2 = int((d * (d - 1) // 2).sum()) - 3 * c3
    c1 = m * (n - 2) - 2 * c2 - 3 * c3
    c0 = n * (n - 1) * (n - 2) // 6 - c1 - c2 - c3
    return np.array([c0, c1, c2, c3], dtype=np.int64)


def graphlet_kernel(graphs, normalize: bool = False) -> KernelMatrix:
    _check_common_n(graphs)
    F = np.array([graphlet_features(gr) for gr in graphs], dtype=float)
    K = F @ F.T
    if normalize:
        K = _normalize(K)
    return KernelMatrix(K)


def graphlet_flip_deltas(g: Graph) -> np.ndarray:
    """(N, 4) array of graphlet feature changes for every one-pair flip."""
    n = g.n
    if n < 3:
        raise ValueError("graphlet kernel needs n >= 3")
    A = g.adjacency().astype(np.int64)
    d = degree_vector(g)
    rows, cols = pair_arrays(n)
    x = g.x.astype(np.int64)
    j2 = (A @ A)[rows, cols]
    j1 = d[rows] + d[cols] - 2 * x - 2 * j2
    j0 = (n - 2) - j1 - j2
    add = np.column_stack([-j0, j0 - j1, j1 - j2, j2])
    return np.where(x[:, None] == 1, -add, add)


# --- VEH Gaussian --------------------------------------------------------------


def veh_gauss_kernel(x: Graph, y: Graph, sigma: float = 1.0) -> float:
    if x.n != y.n:
        raise ValueError("graphs must have the same vertex count")
    ham = int(np.count_nonzero(x.x != y.x))
    return float(np.exp(-ham / (2.0 * sigma**2)))


def veh_gauss_matrix(graphs, sigma: float = 1.0) -> KernelMatrix:
    _check_common_n(graphs)
    X = np.array([gr.x for gr in graphs], dtype=float)
    ham = X @ (1 - X).T + (1 - X) @ X.T
    return KernelMatrix(np.exp(-ham / (2.0 * sigma**2)))


def veh_l10(sigma: float) -> float:
    """Per-pair kernel value l_s(1, 0) of the VEH product form."""
    return float(np.exp(-1.0 / (2.0 * sigma**2)))


# --- dispatch ------------------------------------------------------------------


def kernel_matrix(graphs, spec: KernelSpec) -> KernelMatrix:
    graphs = list(graphs)
    if spec.kind == "wl":
        km = wl_kernel(graphs, spec.h, normalize=spec.normalize)
    elif spec.kind == "graphlet3":
        km = graphlet_kernel(graphs, normalize=spec.normalize)
    else:
        km = veh_gauss_matrix(graphs, spec.sigma)
    km.spec = spec
    return km


def perturbation_kernel_matrix(g: Graph, spec: KernelSpec) -> KernelMatrix:
    km = kernel_matrix(perturbation_list(g), spec)
    km.base = g
    return km


def pair_count_check(g: Graph, km: KernelMatrix) -> None:
    if km.base is None or km.values.shape != (num_pairs(g.n) + 1,) * 2 or km.base != g:
        raise ValueError("kernel matrix was not computed over this graph's perturbation list")
