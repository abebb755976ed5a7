"""Monte Carlo goodness-of-fit tests and power experiments.

Seeds are tuples of integers fed to ``numpy.random.default_rng`` so every
random stream is derived from (master seed, replicate, purpose, index) and
results do not depend on the number of worker processes.  Within a test
with key k: null graph j uses (k..., 0, j), its edge resample (k..., 1, j),
the observed resample (k..., 2) and the tie-breaking permutation (k..., 3).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import DegenerateScalingError, glr_test, lei_bootstrap_test
from .graph import Graph, degree_vector
from .kernels import KernelSpec
from .models import (
    ErmmParams,
    NlpaParams,
    as_rng,
    chung_lu_probabilities,
    dcsbm_estimate,
    dcsbm_preset,
    dcsbm_probabilities,
    er_probabilities,
    ermm_mle,
    ermm_probabilities,
    irg_sample,
    labels_from_sizes,
    nlpa_sample,
    probabilities_for,
)
from .plant import plant_clique, plant_hubs
from .stein import gkss_squared, gkss_squared_resampled

log = logging.getLogger(__name__)


def key(seed, *more) -> tuple:
    base = tuple(int(s) for s in seed) if isinstance(seed, (tuple, list)) else (int(seed),)
    return base + tuple(int(m) for m in more)


def empirical_quantile(values, q: float, seed=0) -> float:
    """Linear interpolation at position q (m - 1) of the sorted sample.

    Exact ties are put in random (seeded) order before ranking; the value
    returned does not depend on that order, but ranks of tied entries do.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("empty sample")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    perm = as_rng(seed).permutation(v.size)
    srt = v[perm][np.argsort(v[perm], kind="stable")]
    pos = q * (v.size - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, v.size - 1)
    return float(srt[lo] + (pos - lo) * (srt[hi] - srt[lo]))


def two_sided_pvalue(phi: float, null_phis) -> float:
    """2 min(#{phi_i <= phi}, #{phi_i >= phi}) / (M + 1), capped at 1.

    The smaller count is floored at 1, so a statistic beyond every null value
    gets the smallest attainable value 2 / (M + 1) rather than 0.
    """
    null = np.asarray(null_phis, dtype=float)
    if null.size == 0:
        raise ValueError("need at least one null statistic")
    lo = int((null <= phi).sum())
    hi = int((null >= phi).sum())
    return min(1.0, 2.0 * max(1, min(lo, hi)) / (null.size + 1))


@dataclass
class TestResult:
    phi: float
    null_phis: np.ndarray
    gamma_lo: float
    gamma_hi: float
    p_value: float
    reject: bool
    alpha: float
    M: int
    B: int
    kernel: str
    seed: tuple = ()

    __test__ = False  # keep pytest from collecting this class


def decide(phi: float, null_phis, alpha: float, seed, spec: KernelSpec, B: int = 0) -> TestResult:
    null = np.asarray(null_phis, dtype=float)
    k = key(seed)
    lo = empirical_quantile(null, alpha / 2.0, key(k, 3))
    hi = empirical_quantile(null, 1.0 - alpha / 2.0, key(k, 3))
    return TestResult(
        phi=float(phi), null_phis=null, gamma_lo=lo, gamma_hi=hi,
        p_value=two_sided_pvalue(phi, null), reject=bool(phi < lo or phi > hi),
        alpha=alpha, M=null.size, B=B, kernel=spec.label(), seed=k,
    )


def refit_probabilities(g: Graph, fit: str, labels=None, eps: float = 0.001) -> np.ndarray:
    """Edge probabilities re-estimated from ``g`` (``ermm`` or ``dcsbm``)."""
    labels = g.labels if labels is None else labels
    if fit == "ermm":
        return ermm_probabilities(ermm_mle(g, labels))
    if fit == "dcsbm":
        return dcsbm_probabilities(dcsbm_estimate(g, labels, eps))
    raise ValueError(f"unknown refit family {fit!r}")


def statistic(g: Graph, p, spec: KernelSpec, B: int = 0, seed=None) -> float:
    if B:
        return gkss_squared_resampled(g, p, spec, B, seed)
    return gkss_squared(g, p, spec)


def _null_stat(args):
    p0, spec, B, k, j, labels, fit = args
    gj = irg_sample(p0, key(k, 0, j), labels)
    pj = p0 if fit is None else refit_probabilities(gj, fit)
    return statistic(gj, pj, spec, B, key(k, 1, j))


def _map(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunk))


def null_statistics(p0, spec: KernelSpec, M: int, seed, B: int = 0, labels=None,
                    fit: str | None = None, workers: int = 1) -> np.ndarray:
    """Statistics of M graphs simulated from IRG(p0), in index order.

    With ``fit`` set, each simulated graph is scored against probabilities
    re-estimated from itself.
    """
    p0 = np.asarray(p0, dtype=float)
    k = key(seed)
    args = [(p0, spec, B, k, j, labels, fit) for j in range(M)]
    return np.array(_map(_null_stat, args, workers))


def run_test(g: Graph, p0, spec: KernelSpec, M: int = 200, alpha: float = 0.05, seed=0,
             workers: int = 1, null_phis=None) -> TestResult:
    """Monte Carlo test of H0: g ~ IRG(p0) with the full statistic.

    ``null_phis`` may supply a precomputed null set (shared across
    repetitions of an experiment with the same p0).
    """
    if M < 20 and null_phis is None:
        raise ValueError("M must be >= 20")
    if null_phis is None:
        null_phis = null_statistics(p0, spec, M, seed, labels=g.labels, workers=workers)
    return decide(gkss_squared(g, p0, spec), null_phis, alpha, seed, spec)


def run_test_resampled(g: Graph, p0, spec: KernelSpec, M: int = 200, B: int = 1,
                       alpha: float = 0.05, seed=0, workers: int = 1,
                       null_phis=None) -> TestResult:
    """As :func:`run_test` but every statistic uses B resampled pairs."""
    if B < 1:
        raise ValueError("B must be >= 1")
    if M < 20 and null_phis is None:
        raise ValueError("M must be >= 20")
    if null_phis is None:
        null_phis = null_statistics(p0, spec, M, seed, B=B, labels=g.labels, workers=workers)
    phi = gkss_squared_resampled(g, p0, spec, B, key(seed, 2))
    return decide(phi, null_phis, alpha, seed, spec, B=B)


def run_test_estimated(g: Graph, fit: str, spec: KernelSpec, M: int = 200, alpha: float = 0.05,
                       seed=0, B: int = 0, workers: int = 1) -> TestResult:
    """Estimated-parameter variant: p0 is fitted on g, and each null graph is
    scored against probabilities refitted on that null graph."""
    p_hat = refit_probabilities(g, fit)
    null = null_statistics(p_hat, spec, M, seed, B=B, labels=g.labels, fit=fit, workers=workers)
    phi = statistic(g, p_hat, spec, B, key(seed, 2))
    return decide(phi, null, alpha, seed, spec, B=B)


@dataclass
class PowerSummary:
    rejection_rate: float
    band: tuple
    runs: list = field(default_factory=list)
    skipped: int = 0
    m: int = 0
    baselines: dict = field(default_factory=dict)
    st_errors: int = 0

    @property
    def used(self) -> int:
        return self.m - self.skipped


def summarize(rejects, m: int, skipped: int = 0, runs=None) -> PowerSummary:
    """p-hat over the m - skipped runs that were used, band p-hat +- 2 p-hat (1 - p-hat) / used."""
    used = m - skipped
    if len(rejects) != used:
        raise ValueError("one reject flag per used run expected")
    rate = float(np.mean(rejects)) if used > 0 else float("nan")
    half = 2.0 * rate * (1.0 - rate) / used if used > 0 else float("nan")
    return PowerSummary(rate, (rate - half, rate + half), list(runs or []), skipped, m)


# --- power experiments ------------------------------------------------------------

SHARED_NULL = 1_000_000  # replicate slot reserved for the shared null set

RUN_COLUMNS = (
    "rep", "skipped", "reason", "edges", "max_degree", "attempts", "phi", "gamma_lo",
    "gamma_hi", "p_value", "reject", "glr_stat", "glr_reject", "st_stat", "st_reject", "st_error",
)


def experiment_labels(cfg) -> np.ndarray:
    if cfg.labels is not None:
        return np.asarray(cfg.labels, dtype=np.int64)
    sizes = cfg.null.get("sizes")
    if sizes is not None:
        return labels_from_sizes(sizes)
    return np.ones(cfg.n, dtype=np.int64)


def shares_null(cfg) -> bool:
    """True when p0 is the same for every replicate, so one null set serves all."""
    return cfg.estimated is None and cfg.null["kind"] in ("er", "ermm", "dcsbm-preset")


def null_probabilities(cfg, rep: int) -> tuple[np.ndarray, dict]:
    """p0 for replicate ``rep`` plus whatever the alternative needs from the same draw."""
    null = cfg.null
    kind = null["kind"]
    if kind == "er":
        return er_probabilities(cfg.n, null["p"]), {}
    if kind == "ermm":
        return ermm_probabilities(ErmmParams(null["Q"], experiment_labels(cfg))), {}
    if kind == "chung-lu":
        lo, hi = null.get("w_range", (2.0, 8.0))
        w = as_rng(key(cfg.seed, rep, 0)).uniform(lo, hi, size=cfg.n)
        return chung_lu_probabilities(w), {"w": w}
    if kind == "dcsbm-preset":
        labels = experiment_labels(cfg)
        p, proxy = dcsbm_preset(int(null.get("which", 1)), labels, key(cfg.seed, rep, 0))
        return proxy, {"p_dcsbm": p}
    raise ValueError(f"unknown null kind {kind!r}")


def generate_observed(cfg, rep: int, p0, extra) -> tuple[Graph | None, dict]:
    """Observed graph of replicate ``rep``; ``None`` means the run is skipped."""
    alt = cfg.alternative
    kind = alt["kind"]
    labels = experiment_labels(cfg)
    s_base, s_plant = key(cfg.seed, rep, 1), key(cfg.seed, rep, 2)
    info = {"attempts": 0, "reason": ""}
    if kind == "null":
        return irg_sample(p0, s_base, labels), info
    if kind == "model":
        return irg_sample(probabilities_for(cfg.n, alt["model"], s_plant), s_base, labels), info
    if kind == "chung-lu-shift":
        if "w" not in extra:
            raise ValueError("chung-lu-shift needs a chung-lu null")
        p = chung_lu_probabilities(extra["w"] + float(alt.get("shift", 3.0)))
        return irg_sample(p, s_base, labels), info
    if kind == "dcsbm-preset":
        if "p_dcsbm" not in extra:
            raise ValueError("dcsbm-preset alternative needs a dcsbm-preset null")
        return irg_sample(extra["p_dcsbm"], s_base, labels), info
    if kind == "nlpa":
        params = NlpaParams(int(alt.get("m", 1)), float(alt.get("alpha", 1.0)), alt.get("m0"))
        return nlpa_sample(cfg.n, params, s_base, labels), info
    base = irg_sample(p0, s_base, labels)
    if kind == "plant-clique":
        out = plant_clique(base, int(alt["K"]), labels, int(alt.get("max_rep", 100)), s_plant)
        info.update(attempts=out.attempts, reason=out.skipped_reason or "")
        return (out.graph if out.planted else None), info
    if kind == "plant-hubs":
        R = int(alt.get("R", 1))
        if R == 0:
            return base, info
        out = plant_hubs(base, R, float(alt.get("k", 3)), labels, s_plant,
                         target=alt.get("target", "relative"))
        info.update(attempts=out.attempts, reason=out.skipped_reason or "")
        return out.graph, info
    raise ValueError(f"unknown alternative kind {kind!r}")


def _replicate(args) -> dict:
    cfg, rep, shared = args
    p0, extra = null_probabilities(cfg, rep)
    g, info = generate_observed(cfg, rep, p0, extra)
    row = dict.fromkeys(RUN_COLUMNS, "")
    row.update(rep=rep, skipped=g is None, reason=info["reason"], attempts=info["attempts"])
    if g is None:
        return row
    k = key(cfg.seed, rep, 3)
    if cfg.estimated:
        res = run_test_estimated(g, cfg.estimated, cfg.kernel, cfg.M, cfg.alpha, k, cfg.B)
    else:
        null = shared if shared is not None else null_statistics(p0, cfg.kernel, cfg.M, k, cfg.B, g.labels)
        res = decide(statistic(g, p0, cfg.kernel, cfg.B, key(k, 2)), null, cfg.alpha, k, cfg.kernel, cfg.B)
    row.update(edges=g.num_edges, max_degree=int(degree_vector(g).max()), phi=res.phi,
               gamma_lo=res.gamma_lo, gamma_hi=res.gamma_hi, p_value=res.p_value, reject=res.reject)
    glr = cfg.baselines.get("glr")
    if glr:
        r = glr_test(g, p0, g.labels, cfg.alpha, glr.get("family", "ermm"), int(glr.get("null_params", 1)))
        row.update(glr_stat=r.lambda_log, glr_reject=r.reject)
    st = cfg.baselines.get("spectral")
    if st:
        try:
            r = lei_bootstrap_test(g, g.labels, int(st.get("M_boot", 50)), cfg.alpha, key(cfg.seed, rep, 4))
            row.update(st_stat=r.T_boot, st_reject=r.reject)
        except DegenerateScalingError as exc:
            row.update(st_error=str(exc))
    return row


def _rate(rows, col):
    vals = [bool(r[col]) for r in rows if r[col] != ""]
    return (float(np.mean(vals)) if vals else float("nan")), len(vals)


def power_experiment(cfg, workers: int = 1) -> PowerSummary:
    """m replicates of (alternative generator, test); runs the generator rejects are skipped."""
    if cfg.m == 0:
        log.warning("m = 0: nothing to run")
        return summarize([], 0, 0)
    shared = None
    if shares_null(cfg):
        p0, _ = null_probabilities(cfg, 0)
        shared = null_statistics(p0, cfg.kernel, cfg.M, key(cfg.seed, SHARED_NULL), cfg.B,
                                 experiment_labels(cfg), workers=workers)
    rows = _map(_replicate, [(cfg, i, shared) for i in range(cfg.m)], workers)
    used = [r for r in rows if not r["skipped"]]
    out = summarize([bool(r["reject"]) for r in used], cfg.m, cfg.m - len(used), rows)
    for col in ("glr_reject", "st_reject"):
        rate, cnt = _rate(used, col)
        if cnt:
            out.baselines[col.split("_")[0]] = rate
    out.st_errors = sum(1 for r in used if r["st_error"])
    return out


# --- CSV output -------------------------------------------------------------------

CSV_SCHEMA = 1

TEST_COLUMNS = ("schema_version", "graph", "n", "model", "kernel", "M", "B", "alpha", "seed",
                "phi", "gamma_lo", "gamma_hi", "p_value", "reject")

SUMMARY_COLUMNS = ("schema_version", "experiment", "variant", "param", "value", "m", "used", "skipped",
                   "rejection_rate", "band_lo", "band_hi", "glr_rate", "st_rate", "st_errors")


def fmt(v) -> str:
    """Locale-free rendering: flags as 0/1, floats in fixed 10-digit scientific form."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return "nan"
        return f"{float(v):.10e}"
    if isinstance(v, tuple):
        return "-".join(str(t) for t in v)
    return str(v)


def csv_lines(columns, rows) -> list[str]:
    out = [",".join(columns)]
    for r in rows:
        out.append(",".join(fmt(r.get(c, "")) for c in columns))
    return out


def write_csv(path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(csv_lines(columns, rows)) + "\n")


def test_row(res: TestResult, **context) -> dict:
    row = {"schema_version": CSV_SCHEMA, "kernel": res.kernel, "M": res.M, "B": res.B,
           "alpha": res.alpha, "seed": res.seed, "phi": res.phi, "gamma_lo": res.gamma_lo,
           "gamma_hi": res.gamma_hi, "p_value": res.p_value, "reject": res.reject}
    row.update(context)
    return row


test_row.__test__ = False


def summary_row(s: PowerSummary, experiment: str, param="", value="", variant="") -> dict:
    return {
        "schema_version": CSV_SCHEMA, "experiment": experiment, "variant": variant,
        "param": param, "value": value,
        "m": s.m, "used": s.used, "skipped": s.skipped, "rejection_rate": s.rejection_rate,
        "band_lo": s.band[0], "band_hi": s.band[1],
        "glr_rate": s.baselines.get("glr", ""), "st_rate": s.baselines.get("st", ""),
        "st_errors": s.st_errors,
    }
