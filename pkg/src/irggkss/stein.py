"""IRG Stein operator, the kernel Stein statistic and its moment diagnostics.

For a base graph g and null probabilities p, with F_s the graph g with pair
s flipped and gamma_s = 1 - p_s if x_s = 1 else p_s,

    h(s, s') = gamma_s gamma_s' [K(F_s,F_s') - K(F_s,g) - K(g,F_s') + K(g,g)]

and the statistic is sum_{s,s'} h(s, s') / N^2.  For kernels with explicit
features this equals ||sum_s gamma_s (phi(F_s) - phi(g))||^2 / N^2, which is
how the WL and graphlet paths evaluate it.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import kernels as kn
from .graph import Graph, num_pairs
from .kernels import KernelMatrix, KernelSpec
from .models import as_rng, n_from_pairs

MAX_EXHAUSTIVE_PAIRS = 12
MAX_TABLE_PAIRS = 20
HMATRIX_MAX_N = 200


class CapacityError(ValueError):
    """Exhaustive enumeration requested beyond the supported size."""


class UnsupportedKernelError(ValueError):
    """Operation needs a product kernel."""


class DegenerateGramError(ArithmeticError):
    """2x2 Gram system of the per-pair kernel is singular."""


def gamma(g: Graph, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (g.N,):
        raise ValueError(f"need {g.N} edge probabilities, got {p.shape}")
    return np.where(g.x == 1, 1.0 - p, p)


# --- Stein operator on explicit function tables -----------------------------


def state_index(x) -> int:
    """Integer code of a bit vector: bit s of the code is x_s."""
    x = np.asarray(x, dtype=np.int64)
    return int((x << np.arange(x.size)).sum())


def _all_states(N):
    codes = np.arange(2**N, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(N)) & 1
    return codes, bits


def _likelihood(bits, p):
    p = np.asarray(p, dtype=float)
    return np.prod(np.where(bits == 1, p, 1.0 - p), axis=1)


def stein_op_apply(f, g: Graph, p, s: int) -> float:
    """p_s (f(x^(s,1)) - f(x)) + (1 - p_s)(f(x^(s,0)) - f(x)) for a table f."""
    f = np.asarray(f, dtype=float)
    if f.size != 2**g.N:
        raise ValueError("function table must cover all 2^N states")
    code = state_index(g.x)
    on, off = code | (1 << s), code & ~(1 << s)
    ps = float(p[s])
    return ps * (f[on] - f[code]) + (1.0 - ps) * (f[off] - f[code])


def stein_identity_check(f, p, per_pair: bool = False):
    """Exact E[A f(X)] under IRG(p) by enumerating all 2^N graphs.

    Returns the average over pairs (the full operator), or the vector of
    per-pair expectations when ``per_pair`` is set.
    """
    p = np.asarray(p, dtype=float)
    N = p.size
    if N > MAX_TABLE_PAIRS:
        raise CapacityError(f"N={N} exceeds the enumeration limit {MAX_TABLE_PAIRS}")
    f = np.asarray(f, dtype=float)
    if f.size != 2**N:
        raise ValueError("function table must cover all 2^N states")
    codes, bits = _all_states(N)
    w = _likelihood(bits, p)
    out = np.empty(N)
    for s in range(N):
        on = f[codes | (1 << s)] - f
        off = f[codes & ~(1 << s)] - f
        out[s] = np.dot(w, p[s] * on + (1.0 - p[s]) * off)
    return out if per_pair else float(out.mean())


# --- h matrix and the statistic ----------------------------------------------


def _check_kernel_matrix(g: Graph, K: KernelMatrix):
    if K.base is None or K.values.shape != (g.N + 1, g.N + 1) or K.base != g:
        raise ValueError("kernel matrix is stale: not built over this graph's perturbation list")


def kernel_gap_matrix(K: KernelMatrix) -> np.ndarray:
    """D[s,s'] = K(F_s,F_s') - K(F_s,g) - K(g,F_s') + K(g,g)."""
    V = K.values
    kg = V[1:, 0]
    return V[1:, 1:] - kg[:, None] - kg[None, :] + V[0, 0]


def h_matrix(g: Graph, p, K: KernelMatrix) -> np.ndarray:
    _check_kernel_matrix(g, K)
    if g.n > HMATRIX_MAX_N:
        raise CapacityError("h matrix is only materialised for n <= 200")
    gam = gamma(g, p)
    H = gam[:, None] * kernel_gap_matrix(K) * gam[None, :]
    return 0.5 * (H + H.T)  # exact symmetry despite rounding order


def h_entry(g: Graph, p, K: KernelMatrix, s: int, t: int) -> float:
    _check_kernel_matrix(g, K)
    V = K.values
    gam = gamma(g, p)
    return float(gam[s] * gam[t] * (V[s + 1, t + 1] - V[s + 1, 0] - V[0, t + 1] + V[0, 0]))


def h_matrix_for(g: Graph, p, spec: KernelSpec) -> np.ndarray:
    """h matrix via the explicit kernel route for ``spec``."""
    if spec.kind == "wl" and not spec.normalize:
        D = kn.wl_flip_delta_matrix(g, spec.h)
        gam = gamma(g, p)
        return gam[:, None] * (D @ D.T).toarray() * gam[None, :]
    return h_matrix(g, p, kn.perturbation_kernel_matrix(g, spec))


def _weighted_norm2(g: Graph, spec: KernelSpec, pairs, w) -> float:
    """||sum_i w_i (phi(F_{pairs_i}) - phi(g))||^2 in the kernel's feature space."""
    if spec.kind == "wl" and not spec.normalize:
        total = 0.0
        for r, c, v, ncol in kn.wl_flip_deltas(g, spec.h, pairs):
            acc = np.bincount(c, weights=w[r] * v, minlength=ncol)
            total += float(acc @ acc)
        return total
    if spec.kind == "graphlet3":
        phi0 = kn.graphlet_features(g).astype(float)
        F = phi0 + kn.graphlet_flip_deltas(g)[pairs]
        if spec.normalize:
            F = F / np.linalg.norm(F, axis=1, keepdims=True)
            phi0 = phi0 / np.linalg.norm(phi0)
        acc = w @ (F - phi0)
        return float(acc @ acc)
    # kernel-matrix route (VEH, normalised WL)
    graphs = [g] + [g.flip(int(s)) for s in pairs]
    km = kn.kernel_matrix(graphs, spec)
    V = km.values
    kg = V[1:, 0]
    D = V[1:, 1:] - kg[:, None] - kg[None, :] + V[0, 0]
    return float(w @ D @ w)


def gkss_squared(g: Graph, p, spec: KernelSpec) -> float:
    """The IRG kernel Stein statistic (squared)."""
    gam = gamma(g, p)
    N = g.N
    pairs = np.flatnonzero(gam)
    if pairs.size == 0:
        return 0.0
    val = _weighted_norm2(g, spec, pairs, gam[pairs]) / N**2
    return max(val, 0.0)


def resample_counts(N: int, B: int, seed) -> np.ndarray:
    """Multinomial counts of B uniform draws with replacement from N pairs."""
    if B < 1:
        raise ValueError("B must be >= 1")
    draws = as_rng(seed).integers(0, N, size=B)
    return np.bincount(draws, minlength=N)


def gkss_squared_resampled(g: Graph, p, spec: KernelSpec, B: int, seed=None, counts=None) -> float:
    """Edge-resampled statistic sum k_s k_s' h(s,s') / B^2.

    ``counts`` overrides the random draw (e.g. all ones for exact coverage).
    """
    N = g.N
    if counts is None:
        counts = resample_counts(N, B, seed)
    else:
        counts = np.asarray(counts)
        if counts.shape != (N,):
            raise ValueError("counts must have one entry per pair")
        B = int(counts.sum())
    gam = gamma(g, p)
    w = counts * gam
    pairs = np.flatnonzero(w)
    if pairs.size == 0:
        return 0.0
    val = _weighted_norm2(g, spec, pairs, w[pairs]) / float(B) ** 2
    return max(val, 0.0)


# --- product-kernel moments ----------------------------------------------------


def _l10(spec: KernelSpec) -> float:
    if not spec.is_product:
        raise UnsupportedKernelError(f"{spec.kind} is not a product kernel")
    return kn.veh_l10(spec.sigma)


def _pair_l10(p, l10) -> np.ndarray:
    return np.broadcast_to(np.asarray(l10, dtype=float), np.shape(p)).astype(float)


def analytic_offdiag_mean(p, l10) -> float:
    """(1/N^2) sum_{s != s'} 4 p_s q_s p_s' q_s' (l_s - 1)(l_s' - 1), q = 1 - p."""
    p = np.asarray(p, dtype=float)
    a = 2.0 * p * (1.0 - p) * (_pair_l10(p, l10) - 1.0)
    N = p.size
    return float((a.sum() ** 2 - (a**2).sum()) / N**2)


def norm_gap(l00: float, l01: float, l11: float) -> float:
    """||l(1,.) - l(0,.)||^2 in the two-point RKHS, solved through its Gram matrix."""
    G = np.array([[l00, l01], [l01, l11]], dtype=float)
    if abs(np.linalg.det(G)) < 1e-14:
        raise DegenerateGramError("per-pair Gram matrix is singular (l(1,0) = +/-1)")
    v = np.array([l01 - l00, l11 - l01])  # values of l(1,.) - l(0,.) at 0 and 1
    c = np.linalg.solve(G, v)
    return float(v @ c)


def g_norms(spec: KernelSpec) -> tuple[float, float]:
    """(g_s(0), g_s(1)) for a product kernel with l(0,0) = l(1,1) = 1.

    The factor l_s(x_s, .) carried by the remaining coordinates has unit
    norm, so both equal the squared norm of l(1,.) - l(0,.).
    """
    c = _l10(spec)
    g = norm_gap(1.0, c, 1.0)
    return g, g


def diag_h(x_s, p_s, g0: float, g1: float):
    """Pointwise h(s,s) = (1 - x_s) p_s^2 g_s(0) + x_s (1 - p_s)^2 g_s(1)."""
    x_s = np.asarray(x_s, dtype=float)
    p_s = np.asarray(p_s, dtype=float)
    return (1.0 - x_s) * p_s**2 * g0 + x_s * (1.0 - p_s) ** 2 * g1


def diag_mean(p, spec: KernelSpec) -> float:
    """(1/N^2) sum_s E h(s,s), averaging ``diag_h`` over x_s ~ Bernoulli(p_s)."""
    p = np.asarray(p, dtype=float)
    g0, g1 = g_norms(spec)
    e = (1.0 - p) * diag_h(0, p, g0, g1) + p * diag_h(1, p, g0, g1)
    return float(e.sum() / p.size**2)


def exhaustive_moments(p, spec: KernelSpec) -> tuple[float, float]:
    """Exact mean and variance of the statistic by enumerating every graph."""
    p = np.asarray(p, dtype=float)
    N = p.size
    if N > MAX_EXHAUSTIVE_PAIRS:
        raise CapacityError(f"N={N} exceeds the enumeration limit {MAX_EXHAUSTIVE_PAIRS}")
    n = n_from_pairs(N)
    _, bits = _all_states(N)
    w = _likelihood(bits, p)
    stats = np.array([gkss_squared(Graph(n, b), p, spec) for b in bits])
    mean = float(w @ stats)
    var = float(w @ (stats - mean) ** 2)
    return mean, var


def _extremes(p, spec):
    p = np.asarray(p, dtype=float)
    d = np.abs(_pair_l10(p, _l10(spec)) - 1.0)
    pq = p * (1.0 - p)
    nondeg = (p > 0) & (p < 1)
    N0 = int(nondeg.sum())
    p_min = float(pq[nondeg].min()) if N0 else 0.0
    return p, d, pq, N0, p_min


def variance_lower_bound(p, spec: KernelSpec) -> tuple[float, bool]:
    """32 N0^3 d_min^4 p_min^3 / N^4; second value flags N0 = 0."""
    p, d, _, N0, p_min = _extremes(p, spec)
    if N0 == 0:
        return 0.0, True
    N = p.size
    return float(32.0 * N0**3 * d.min() ** 4 * p_min**3 / N**4), False


@dataclass
class SteinDiagnostics:
    N: int
    N0: int
    d_min: float
    d_max: float
    p_min: float
    p_max: float
    d0: float
    sigma2: float
    sigma2_exact: bool
    sigma2_lower: float
    C: float
    C1: float
    wasserstein_bound: float
    main_text_bound: float
    mean_offdiag: float
    mean_diag: float

    def as_dict(self) -> dict:
        return asdict(self)


def bound_constants(N, N0, d_max, p_max, d0, sigma2):
    """C(N, d0, p_max, d_max) and C1 of the refined normal-approximation bound."""
    C = p_max**4 + (N + 2) / N**2 * p_max**2
    if d_max > 0:
        C += d0 * p_max / (N**3 * d_max**4)
    if p_max == 0 or sigma2 <= 0:
        return C, 0.0 if p_max == 0 else float("inf")
    Ns2 = N * sigma2
    t1 = 16.0 * np.sqrt(2.0) * d_max**4 * p_max**4 / (Ns2 * np.sqrt(np.pi))
    t2 = 8.0 / np.sqrt(N) * (2.0 * N0 / N) ** 2 * d_max**6 * p_max**2 / Ns2**1.5 * np.sqrt(C)
    return float(C), float(t1 + t2)


def theorem_bound(p, spec: KernelSpec, sigma2: float | None = None) -> SteinDiagnostics:
    """Constants of the Wasserstein-1 normal approximation for the statistic.

    sigma^2 is taken from ``sigma2`` when given (e.g. a Monte Carlo
    estimate), else the enumerated variance when N <= 12, else the lower
    bound (``sigma2_exact`` False, making the result an upper estimate).
    """
    p, d, pq, N0, p_min = _extremes(p, spec)
    N = p.size
    g0, g1 = g_norms(spec)
    d0 = (g0 + g1) ** 2
    p_max = float(pq.max())
    lower, _ = variance_lower_bound(p, spec)
    if sigma2 is not None:
        exact = False
    elif N <= MAX_EXHAUSTIVE_PAIRS:
        sigma2 = exhaustive_moments(p, spec)[1]
        exact = True
    else:
        sigma2, exact = lower, False
    C, C1 = bound_constants(N, N0, float(d.max()), p_max, d0, sigma2)
    bound = C1 / np.sqrt(N)
    main = bound * (N / N0) ** 3 if N0 else (0.0 if bound == 0 else float("inf"))
    return SteinDiagnostics(
        N=N, N0=N0, d_min=float(d.min()), d_max=float(d.max()), p_min=p_min, p_max=p_max,
        d0=d0, sigma2=sigma2, sigma2_exact=exact, sigma2_lower=lower, C=C, C1=C1,
        wasserstein_bound=float(bound), main_text_bound=float(main),
        mean_offdiag=analytic_offdiag_mean(p, _l10(spec)), mean_diag=diag_mean(p, spec),
    )


# --- discrepancy between two IRG models ---------------------------------------


def discrepancy_bound(p, p_star, delta_h_norm=None) -> float:
    """delta_h_norm * sum_s |p_s - p*_s|; default delta is 3/N (triangle proportion)."""
    p = np.asarray(p, dtype=float)
    p_star = np.asarray(p_star, dtype=float)
    if p.shape != p_star.shape:
        raise ValueError("probability vectors differ in length")
    if delta_h_norm is None:
        delta_h_norm = 3.0 / p.size
    return float(delta_h_norm * np.abs(p - p_star).sum())


def ermm_er_discrepancy(Q, labels, p: float, delta_h_norm=None) -> float:
    """Block form sum_{i<=j} N_ij |Q_ij - p| of the ER-vs-ERMM bound."""
    Q = np.asarray(Q, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    sizes = np.bincount(labels, minlength=len(Q) + 1)[1:].astype(float)
    Npairs = np.outer(sizes, sizes)
    np.fill_diagonal(Npairs, sizes * (sizes - 1) / 2)
    iu = np.triu_indices(len(Q))
    total = float((Npairs[iu] * np.abs(Q[iu] - p)).sum())
    if delta_h_norm is None:
        delta_h_norm = 3.0 / num_pairs(labels.size)
    return delta_h_norm * total
