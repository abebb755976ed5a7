"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary
(and immediately, when run with ``-s``).  The Monte Carlo criteria run the
bundled presets at full size and take several minutes in total.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import ACCEPTANCE
from irggkss.baselines import DegenerateScalingError, chi2_critical, glr_test, lei_bootstrap_test
from irggkss.cli import resolve_graph
from irggkss.config import load_preset
from irggkss.graph import Graph
from irggkss.kernels import KernelSpec
from irggkss.mctest import power_experiment, two_sided_pvalue
from irggkss.models import (
    ErmmParams,
    er_probabilities,
    ermm_mle,
    ermm_probabilities,
    irg_sample,
    labels_from_sizes,
)
from irggkss.plant import plant_clique
from irggkss.stein import (
    analytic_offdiag_mean,
    diag_mean,
    exhaustive_moments,
    gkss_squared,
    gkss_squared_resampled,
    h_matrix_for,
    resample_counts,
    stein_identity_check,
    variance_lower_bound,
)

WL3 = KernelSpec("wl", 3)
VEH1 = KernelSpec("veh-gauss", sigma=1.0)


def record(num, ok, detail):
    ACCEPTANCE[num] = (bool(ok), detail)
    print(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def plain(cfg, **over):
    """Preset without baselines or kernel variants, with overrides."""
    return replace(cfg, baselines={}, variants=None, **over)


def test_01_stein_identity():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        p = rng.random(6)
        for _ in range(50):
            worst = max(worst, abs(stein_identity_check(rng.normal(size=64), p)))
    dt = time.perf_counter() - t0
    record(1, worst < 1e-10 and dt < 5, f"max |E Af| = {worst:.2e} over 1000 tables, {dt:.2f} s")


def test_02_moment_oracle():
    rng = np.random.default_rng(2)
    l10 = np.exp(-0.5)
    t0 = time.perf_counter()
    worst, violations = 0.0, []
    for i in range(20):
        p = rng.random(6)
        mean, var = exhaustive_moments(p, VEH1)
        worst = max(worst, abs(analytic_offdiag_mean(p, l10) + diag_mean(p, VEH1) - mean))
        bound, _ = variance_lower_bound(p, VEH1)
        if bound > var:
            violations.append(i)
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and not violations and dt < 30
    record(2, ok, f"mean error {worst:.2e}; variance bound violated on {len(violations)}/20 draws "
                  f"{violations}; {dt:.2f} s")


def test_03_resampling_consistency():
    rng = np.random.default_rng(3)
    n = 5
    g = Graph(n, (rng.random(10) < 0.5).astype(np.uint8))
    p = rng.random(g.N)
    full = gkss_squared(g, p, WL3)
    exact = gkss_squared_resampled(g, p, WL3, g.N, counts=np.ones(g.N, dtype=int)) == full
    draws = np.array([
        gkss_squared_resampled(g, p, WL3, g.N, counts=resample_counts(g.N, g.N, (3, i)))
        for i in range(10_000)
    ])
    se = draws.std(ddof=1) / np.sqrt(draws.size)
    z = (draws.mean() - full) / se
    # exact mean under multinomial counts, reported to explain any gap
    H = h_matrix_for(g, p, WL3)
    N = g.N
    expect = ((N - 1) * H.sum() / N + np.trace(H)) / N**2
    z_exp = (draws.mean() - expect) / se
    record(3, exact and abs(z) <= 3,
           f"exact coverage bit-equal: {exact}; MC mean {draws.mean():.6e} vs full {full:.6e} "
           f"({z:+.2f} SE); multinomial expectation {expect:.6e} ({z_exp:+.2f} SE)")


def test_04_calibration():
    s = power_experiment(load_preset("calibration-er30"))
    ok = 0.0 <= s.rejection_rate <= 0.12
    record(4, ok, f"ER(30, 0.06) true null: rate {s.rejection_rate:.2f} over {s.used} runs")


def test_05_planted_clique():
    base = load_preset("planted-clique-er30")
    out = {}
    for K in (3, 8):
        cfg = plain(base, sweep=None, alternative={**base.alternative, "K": K})
        out[K] = power_experiment(cfg)
    ok = out[8].rejection_rate >= 0.5 and out[3].rejection_rate <= 0.2
    record(5, ok, "; ".join(f"K={K}: rate {s.rejection_rate:.2f}, skipped {s.skipped}/{s.m}"
                            for K, s in out.items()))


def test_06_planted_hubs():
    base = load_preset("planted-hubs-ermm30")
    out = {}
    for R in (0, 6):
        out[R] = power_experiment(plain(base, sweep=None, alternative={**base.alternative, "R": R}))
    r0, r6 = out[0].rejection_rate, out[6].rejection_rate
    record(6, r6 - r0 >= 0.25 and r0 <= 0.12,
           f"R=0 rate {r0:.2f}, R=6 rate {r6:.2f} (m = {out[0].m})")


def test_07_chung_lu():
    false_ = power_experiment(plain(load_preset("chung-lu-false-null"), kernel=WL3))
    true_ = power_experiment(plain(load_preset("chung-lu-true-null"), kernel=WL3))
    ok = false_.rejection_rate >= 0.9 and true_.rejection_rate <= 0.12
    record(7, ok, f"WL false null {false_.rejection_rate:.2f}, true null {true_.rejection_rate:.2f} "
                  f"(m = {false_.m} each)")


def test_08_pvalue_formula():
    null = np.arange(1.0, 201.0)
    lo = two_sided_pvalue(0.5, null)  # min count floored at 1
    one = two_sided_pvalue(200.0, null)  # exactly one null value >= phi
    three = two_sided_pvalue(198.0, null)
    ok = f"{lo:.5f}" == "0.00995" and f"{one:.5f}" == "0.00995" and f"{three:.5f}" == "0.02985"
    record(8, ok, f"min-count 1 -> {one:.5f}, min-count 3 -> {three:.5f}")


def test_09_glr_plumbing():
    c2, c5 = chi2_critical(0.05, 2), chi2_critical(0.05, 5)
    lab = labels_from_sizes([10, 12])
    g = irg_sample(ermm_probabilities(ErmmParams([[0.4, 0.1], [0.1, 0.3]], lab)), 9, lab)
    r = glr_test(g, ermm_probabilities(ermm_mle(g, lab)), lab, family="ermm", null_params=1)
    ok = abs(c2 - 5.991) < 1e-3 and abs(c5 - 11.07) < 1e-3 and r.lambda_log == 0.0
    record(9, ok, f"chi2 df2 {c2:.4f}, df5 {c5:.4f}; -2 ln Lambda at MLE = {r.lambda_log}")


def test_10_spectral_baseline():
    lab = labels_from_sizes([15, 15])
    p = ermm_probabilities(ErmmParams([[0.3, 0.1], [0.1, 0.3]], lab))
    g0 = irg_sample(p, (10, 0), lab)
    a = lei_bootstrap_test(g0, lab, 50, 0.05, (10, 1))
    b = lei_bootstrap_test(g0, lab, 50, 0.05, (10, 1))
    repro = a.T_boot == b.T_boot
    rejects = [lei_bootstrap_test(irg_sample(p, (10, 2, i), lab), lab, 50, 0.05, (10, 3, i)).reject
               for i in range(50)]
    rate = float(np.mean(rejects))
    # disconnected blocks: the between-group fit is 0 after planting
    pd = ermm_probabilities(ErmmParams([[0.3, 0.0], [0.0, 0.3]], lab))
    planted = plant_clique(irg_sample(pd, (10, 4), lab), 6, lab, seed=(10, 5))
    try:
        lei_bootstrap_test(planted.graph, lab, 20, 0.05, 1)
        typed = False
    except DegenerateScalingError:
        typed = True
    record(10, repro and rate <= 0.25 and typed,
           f"reproducible {repro}; true-null rate {rate:.2f} (m = 50); degenerate error raised {typed}")


def test_11_real_data_fits():
    g = resolve_graph("dataset:karate", None, None)
    p_hat = ermm_mle(g, np.ones(g.n, dtype=np.int64)).Q[0, 0]
    Q = ermm_mle(g).Q
    want = np.array([[0.2750, 0.0347], [0.0347, 0.2288]])
    karate_ok = abs(p_hat - 0.139) <= 5e-4 and np.abs(Q - want).max() <= 5e-5
    detail = (f"karate p = {p_hat:.5f}, max |Q - Q1| = {np.abs(Q - want).max():.1e}; "
              "Lazega check skipped: dataset not bundled")
    record(11, karate_ok, detail)


def _median_time(g, p, reps):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        gkss_squared(g, p, WL3)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def test_12_performance():
    sizes, times = (20, 40, 80), []
    for n in sizes:
        p = er_probabilities(n, 0.06)
        g = irg_sample(p, n)
        gkss_squared(g, p, WL3)  # warm-up
        times.append(_median_time(g, p, 7))
    single = _median_time(irg_sample(er_probabilities(30, 0.06), 30), er_probabilities(30, 0.06), 3)
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
    ok = single <= 15 and 1.5 <= slope <= 2.8
    ms = ", ".join(f"n={n}: {t * 1e3:.1f} ms" for n, t in zip(sizes, times))
    record(12, ok, f"ER(30, 0.06) {single * 1e3:.1f} ms; {ms}; log-log slope {slope:.2f}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
