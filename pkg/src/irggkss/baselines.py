"""Comparison tests: generalised likelihood ratio and the bootstrap-corrected
spectral test of Lei for a given block labelling.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.special import chdtri, gammaincc, xlog1py, xlogy

from .graph import Graph, pair_arrays
from .models import (
    as_rng,
    dcsbm_estimate,
    dcsbm_probabilities,
    ermm_mle,
    ermm_probabilities,
    irg_sample,
)


class DegenerateScalingError(ArithmeticError):
    """A fitted edge probability is 0 or 1, so residuals cannot be standardised."""

    def __init__(self, u: int, v: int, value: float):
        self.pair = (u, v)
        self.value = value
        super().__init__(
            f"fitted probability {value:g} at vertex pair ({u + 1}, {v + 1}) cannot be standardised"
        )


# --- chi-square -----------------------------------------------------------------


def chi2_survival(x: float, k: int) -> float:
    """P(chi2_k > x) through the regularised upper incomplete gamma function."""
    if k < 1 or int(k) != k:
        raise ValueError("degrees of freedom must be a positive integer")
    if x < 0:
        raise ValueError("x must be >= 0")
    if np.isinf(x):
        return 0.0
    return float(gammaincc(k / 2.0, x / 2.0))


def chi2_critical(alpha: float, k: int) -> float:
    """Upper-alpha critical value of chi2_k."""
    return float(chdtri(k, alpha))


def log_likelihood(x, p) -> float:
    """IRG log-likelihood with 0 log 0 = 0; -inf when a bit is impossible."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    return float(xlogy(x, p).sum() + xlog1py(1.0 - x, -p).sum())


@dataclass
class GlrResult:
    lambda_log: float
    df: int
    p_value: float
    critical: float
    reject: bool
    family: str
    infinite: bool = False
    exact_alternative: bool = True


def _alt_params(family, L, n, N):
    if family == "ermm":
        return L * (L + 1) // 2
    if family == "dcsbm":
        return L * (L + 1) // 2 + n - L
    if family == "irg":
        return N
    raise ValueError(f"unknown alternative family {family!r}")


def glr_test(g: Graph, p0, labels=None, alpha: float = 0.05, family: str = "ermm",
             null_params: int = 1, eps: float = 0.001) -> GlrResult:
    """-2 log(L(p0) / sup L(alt)) against chi2 with df = alt params - null params.

    ``null_params`` counts the free parameters of the null (1 for a fitted
    ER null, 0 for a fully specified p0).  The ``irg`` family puts one
    parameter on every pair so its supremum is attained at p = x (likelihood
    1); Wilks' approximation is doubtful there.  For ``dcsbm`` the Karrer-
    Newman fit is plugged into the Bernoulli-Poisson link, which is not the
    exact Bernoulli maximiser, so the statistic can be slightly negative.
    """
    labels = g.labels if labels is None else np.asarray(labels, dtype=np.int64)
    L = int(labels.max())
    if family == "ermm":
        p_alt = ermm_probabilities(ermm_mle(g, labels))
    elif family == "dcsbm":
        p_alt = dcsbm_probabilities(dcsbm_estimate(g, labels, eps))
    elif family == "irg":
        p_alt = g.x.astype(float)
    else:
        raise ValueError(f"unknown alternative family {family!r}")
    df = _alt_params(family, L, g.n, g.N) - null_params
    if df < 1:
        raise ValueError("alternative must have more free parameters than the null")
    ll0 = log_likelihood(g.x, p0)
    ll1 = log_likelihood(g.x, p_alt)
    crit = chi2_critical(alpha, df)
    if np.isinf(ll0):
        return GlrResult(float("inf"), df, 0.0, crit, True, family, infinite=True,
                         exact_alternative=family != "dcsbm")
    stat = -2.0 * (ll0 - ll1)
    if abs(stat) < 1e-9:
        stat = 0.0
    pval = chi2_survival(max(stat, 0.0), df)
    return GlrResult(stat, df, pval, crit, bool(stat > crit), family,
                     exact_alternative=family != "dcsbm")


# --- Tracy-Widom (index 1) --------------------------------------------------------


@lru_cache(maxsize=1)
def _tw1_table():
    text = resources.files("irggkss").joinpath("data/tw1.csv").read_text(encoding="utf-8")
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")][1:]
    arr = np.array([[float(v) for v in ln.split(",")] for ln in rows])
    s, F = arr[:, 0], arr[:, 1]
    dens = np.gradient(F, s)
    mean = float(np.trapezoid(s * dens, s))
    sd = float(np.sqrt(np.trapezoid((s - mean) ** 2 * dens, s)))
    return s, F, mean, sd


def tw1_moments() -> tuple[float, float]:
    """Mean and standard deviation of the tabulated TW1 law."""
    _, _, mean, sd = _tw1_table()
    return mean, sd


def tw1_cdf(x: float) -> float:
    s, F, _, _ = _tw1_table()
    return float(np.interp(x, s, F, left=0.0, right=1.0))


def tw1_quantile(q: float) -> float:
    s, F, _, _ = _tw1_table()
    if not (F[0] <= q <= F[-1]) or not (0.0 < q < 1.0):
        raise ValueError(f"level {q} outside the tabulated range [{F[0]:.3g}, {F[-1]:.15g}]")
    # the tail of F is flat to machine precision; interpolate on the strictly increasing part
    keep = np.concatenate(([True], np.diff(F) > 0))
    return float(np.interp(q, F[keep], s[keep]))


# --- spectral test ----------------------------------------------------------------


def lei_residual(A, P) -> np.ndarray:
    """(A - P) / sqrt((n - 1) P (1 - P)) off the diagonal, zero on it."""
    A = np.asarray(A, dtype=float)
    P = np.asarray(P, dtype=float)
    n = A.shape[0]
    off = ~np.eye(n, dtype=bool)
    bad = off & ((P <= 0.0) | (P >= 1.0))
    if bad.any():
        u, v = np.argwhere(bad)[0]
        raise DegenerateScalingError(int(u), int(v), float(P[u, v]))
    R = np.zeros_like(A)
    R[off] = (A[off] - P[off]) / np.sqrt((n - 1) * P[off] * (1.0 - P[off]))
    return R


def _prob_matrix(p, n):
    P = np.zeros((n, n))
    rows, cols = pair_arrays(n)
    P[rows, cols] = p
    P[cols, rows] = p
    return P


def eig_extremes(R) -> tuple[float, float]:
    """Largest and smallest eigenvalue of a symmetric matrix (LAPACK syevd)."""
    w = np.linalg.eigvalsh(R)
    return float(w[-1]), float(w[0])


def _fitted_extremes(g: Graph, labels):
    p_hat = ermm_probabilities(ermm_mle(g, labels))
    return eig_extremes(lei_residual(g.adjacency(), _prob_matrix(p_hat, g.n))), p_hat


@dataclass
class SpectralResult:
    T_boot: float
    lambda1: float
    lambdan: float
    mu1: float
    s1: float
    mun: float
    sn: float
    threshold: float
    p_value: float
    reject: bool
    M_boot: int


def lei_bootstrap_test(g: Graph, labels=None, M_boot: int = 50, alpha: float = 0.05,
                       seed=0) -> SpectralResult:
    """Spectral goodness-of-fit test of a block model with known labels.

    The residual extremes of the observed graph are centred and scaled by
    their bootstrap mean and standard deviation over ``M_boot`` graphs
    simulated from the fitted block model (each refitted with the same
    labels), then mapped onto the TW1 scale.
    """
    labels = g.labels if labels is None else np.asarray(labels, dtype=np.int64)
    (l1, ln), p_hat = _fitted_extremes(g, labels)
    boot = np.empty((M_boot, 2))
    for b in range(M_boot):
        gb = irg_sample(p_hat, as_rng(_key(seed, b)), labels)
        boot[b] = _fitted_extremes(gb, labels)[0]
    mu1, mun = boot.mean(axis=0)
    s1, sn = boot.std(axis=0, ddof=1)
    mu_tw, s_tw = tw1_moments()
    T = mu_tw + s_tw * max((l1 - mu1) / s1, -(ln - mun) / sn)
    thr = tw1_quantile(1.0 - alpha / 2.0)
    pval = min(1.0, 2.0 * (1.0 - tw1_cdf(T)))
    return SpectralResult(float(T), l1, ln, float(mu1), float(s1), float(mun), float(sn),
                          thr, pval, bool(T >= thr), M_boot)


def _key(seed, *more):
    base = tuple(seed) if isinstance(seed, (tuple, list)) else (int(seed),)
    return base + tuple(more)
