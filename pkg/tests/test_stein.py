import numpy as np
import pytest

from irggkss.graph import Graph, num_pairs
from irggkss.kernels import KernelSpec, perturbation_kernel_matrix, perturbation_list, veh_gauss_matrix
from irggkss.models import ErmmParams, ermm_probabilities, labels_from_sizes
from irggkss.stein import (
    CapacityError,
    DegenerateGramError,
    UnsupportedKernelError,
    analytic_offdiag_mean,
    bound_constants,
    diag_h,
    diag_mean,
    discrepancy_bound,
    ermm_er_discrepancy,
    exhaustive_moments,
    g_norms,
    gamma,
    gkss_squared,
    gkss_squared_resampled,
    h_entry,
    h_matrix,
    h_matrix_for,
    norm_gap,
    stein_identity_check,
    stein_op_apply,
    theorem_bound,
    variance_lower_bound,
)

from conftest import random_graph

VEH = KernelSpec("veh-gauss", sigma=1.0)
C1 = np.exp(-0.5)  # l(1,0) for sigma = 1


def all_graphs(n):
    N = num_pairs(n)
    for code in range(2**N):
        yield Graph(n, np.array([(code >> s) & 1 for s in range(N)], dtype=np.uint8))


# --- Stein operator -----------------------------------------------------------


def test_stein_op_constant_and_indicator(rng):
    n, N = 3, 3
    codes = np.arange(2**N)
    for g in all_graphs(n):
        p = rng.random(N)
        for s in range(N):
            assert stein_op_apply(np.full(2**N, 2.5), g, p, s) == 0.0
            ind = ((codes >> s) & 1).astype(float)
            assert stein_op_apply(ind, g, p, s) == pytest.approx(p[s] - g.x[s], abs=1e-15)


def test_stein_op_degenerate_weight(rng):
    f = rng.normal(size=8)
    g = Graph(3, np.array([0, 1, 0], dtype=np.uint8))
    p = np.array([1.0, 0.3, 0.2])
    # x^(0,1) sets bit 0 of the code
    assert stein_op_apply(f, g, p, 0) == pytest.approx(f[0b011] - f[0b010])


def test_stein_identity_random_tables(rng):
    for _ in range(20):
        p = rng.random(6)
        f = rng.normal(size=64)
        assert abs(stein_identity_check(f, p)) < 1e-10
        assert np.all(np.abs(stein_identity_check(f, p, per_pair=True)) < 1e-10)


def test_stein_identity_parity():
    codes = np.arange(64)
    parity = np.array([bin(c).count("1") % 2 for c in codes], dtype=float)
    assert stein_identity_check(parity, np.full(6, 0.5)) == 0.0


def test_stein_identity_point_mass(rng):
    assert abs(stein_identity_check(rng.normal(size=64), np.zeros(6))) < 1e-15


def test_stein_identity_capacity():
    with pytest.raises(CapacityError):
        stein_identity_check(np.zeros(2), np.full(21, 0.5))


# --- h matrix and statistic ---------------------------------------------------


def test_h_row_zero_when_degenerate(rng):
    g = random_graph(rng, 4, 0.6)
    s = int(np.flatnonzero(g.x)[0])
    p = rng.random(g.N)
    p[s] = 1.0
    H = h_matrix(g, p, perturbation_kernel_matrix(g, VEH))
    assert np.all(H[s] == 0) and np.all(H[:, s] == 0)


def test_h_diag_veh(rng):
    sigma = 0.8
    spec = KernelSpec("veh-gauss", sigma=sigma)
    g = random_graph(rng, 4)
    p = rng.random(g.N)
    K = perturbation_kernel_matrix(g, spec)
    gam = gamma(g, p)
    for s in range(g.N):
        want = gam[s] ** 2 * 2 * (1 - np.exp(-1 / (2 * sigma**2)))
        assert h_entry(g, p, K, s, s) == pytest.approx(want, rel=1e-13)


def test_h_offdiag_product_form(rng):
    g = random_graph(rng, 4)
    p = rng.random(g.N)
    K = perturbation_kernel_matrix(g, VEH)
    f = (C1 - 1) * (p + g.x * (1 - 2 * p))
    H = h_matrix(g, p, K)
    off = ~np.eye(g.N, dtype=bool)
    assert np.allclose(H[off], np.outer(f, f)[off], atol=1e-14)
    assert np.array_equal(H, H.T)


def test_h_matrix_stale():
    g = Graph(4)
    K = perturbation_kernel_matrix(g.flip(0), VEH)
    with pytest.raises(ValueError):
        h_matrix(g, np.full(6, 0.5), K)


def test_gkss_zero_when_p_equals_x(rng):
    for spec in ("wl:3", "graphlet3", "veh-gauss:1"):
        g = random_graph(rng, 6)
        assert gkss_squared(g, g.x.astype(float), KernelSpec.parse(spec)) == 0.0


def test_gkss_positive_otherwise(rng):
    for spec in ("wl:2", "graphlet3", "veh-gauss:1"):
        g = random_graph(rng, 6)
        p = g.x.astype(float)
        p[3] = 0.5
        assert gkss_squared(g, p, KernelSpec.parse(spec)) > 0


def test_gkss_matches_coefficient_oracle(rng):
    for _ in range(10):
        g = random_graph(rng, 4)
        p = rng.random(g.N)
        K = veh_gauss_matrix(perturbation_list(g), 1.0).values
        gam = gamma(g, p)
        v = np.concatenate(([-gam.sum()], gam))
        assert gkss_squared(g, p, VEH) == pytest.approx(v @ K @ v / g.N**2, rel=1e-12)


@pytest.mark.parametrize("spec", ["wl:0", "wl:1", "wl:3", "wl:2:norm", "graphlet3", "graphlet3:norm"])
def test_gkss_routes_agree(rng, spec):
    if spec == "wl:2:norm":
        spec_obj = KernelSpec("wl", h=2, normalize=True)
    else:
        spec_obj = KernelSpec.parse(spec)
    for _ in range(4):
        g = random_graph(rng, 7, rng.uniform(0.1, 0.7), rng.integers(1, 3, 7))
        p = rng.random(g.N)
        H = h_matrix(g, p, perturbation_kernel_matrix(g, spec_obj))
        assert gkss_squared(g, p, spec_obj) == pytest.approx(H.sum() / g.N**2, rel=1e-10, abs=1e-13)
        assert np.allclose(h_matrix_for(g, p, spec_obj), H, rtol=1e-10, atol=1e-12)


def test_gkss_nonnegative(rng):
    for _ in range(30):
        g = random_graph(rng, 6, rng.uniform(0, 1))
        p = rng.random(g.N)
        for spec in ("wl:3", "veh-gauss:0.5", "graphlet3"):
            assert gkss_squared(g, p, KernelSpec.parse(spec)) >= 0


def test_gkss_vertex_relabelling_invariant(rng):
    n = 7
    g = random_graph(rng, n, 0.4)
    A = g.adjacency()
    P = np.zeros((n, n))
    iu = np.triu_indices(n, 1)
    P[iu] = rng.random(g.N)
    P = P + P.T
    perm = rng.permutation(n)
    gp = Graph.from_adjacency(A[np.ix_(perm, perm)])
    pp = P[np.ix_(perm, perm)][iu]
    for spec in ("wl:3", "veh-gauss:1", "graphlet3"):
        s = KernelSpec.parse(spec)
        assert gkss_squared(gp, pp, s) == pytest.approx(gkss_squared(g, P[iu], s), rel=1e-12)


def test_resampled_single_pair(rng):
    g = random_graph(rng, 5)
    p = rng.random(g.N)
    K = perturbation_kernel_matrix(g, KernelSpec("wl", 3))
    for s in range(g.N):
        counts = np.zeros(g.N, dtype=int)
        counts[s] = 1
        got = gkss_squared_resampled(g, p, KernelSpec("wl", 3), 1, counts=counts)
        assert got == pytest.approx(h_entry(g, p, K, s, s), rel=1e-12)


def test_resampled_exact_coverage(rng):
    for spec in ("wl:3", "graphlet3", "veh-gauss:1"):
        g = random_graph(rng, 8)
        p = rng.random(g.N)
        s = KernelSpec.parse(spec)
        full = gkss_squared(g, p, s)
        assert gkss_squared_resampled(g, p, s, g.N, counts=np.ones(g.N, dtype=int)) == full


def test_resampled_deterministic(rng):
    g = random_graph(rng, 10)
    p = rng.random(g.N)
    s = KernelSpec("wl", 3)
    assert gkss_squared_resampled(g, p, s, 12, (1, 2)) == gkss_squared_resampled(g, p, s, 12, (1, 2))
    with pytest.raises(ValueError):
        gkss_squared_resampled(g, p, s, 0, 1)


# --- moments ------------------------------------------------------------------


def test_offdiag_mean_examples():
    assert analytic_offdiag_mean([0.0, 1.0, 0.3], 0.2) == 0.0
    c = 0.4
    # two pairs at p = 0.5: two ordered off-diagonal terms over N^2 = 4
    assert analytic_offdiag_mean([0.5, 0.5], c) == pytest.approx(2 * 0.25 * (c - 1) ** 2 / 4)


def test_offdiag_requires_product_kernel():
    with pytest.raises(UnsupportedKernelError):
        diag_mean(np.full(6, 0.5), KernelSpec("wl", 3))


def test_exhaustive_point_mass():
    assert exhaustive_moments(np.zeros(6), VEH) == (0.0, 0.0)


def test_exhaustive_capacity():
    with pytest.raises(CapacityError):
        exhaustive_moments(np.full(15, 0.5), VEH)


def test_mean_decomposition_half():
    p = np.full(6, 0.5)
    mean, _ = exhaustive_moments(p, VEH)
    assert mean >= 0
    assert abs(analytic_offdiag_mean(p, C1) + diag_mean(p, VEH) - mean) < 1e-10


def test_mean_decomposition_random(rng):
    for _ in range(5):
        p = rng.uniform(0, 1, 6)
        mean, _ = exhaustive_moments(p, VEH)
        assert abs(analytic_offdiag_mean(p, C1) + diag_mean(p, VEH) - mean) < 1e-10


def test_diag_mean_matches_enumeration(rng):
    p = rng.random(6)
    g0, g1 = g_norms(VEH)
    tot = 0.0
    for g in all_graphs(4):
        w = np.prod(np.where(g.x == 1, p, 1 - p))
        H = h_matrix(g, p, perturbation_kernel_matrix(g, VEH))
        assert np.allclose(np.diag(H), diag_h(g.x, p, g0, g1), atol=1e-14)
        tot += w * np.trace(H)
    assert tot / 36 == pytest.approx(diag_mean(p, VEH), rel=1e-12)


def test_g_norms_two_point_rkhs():
    c = np.exp(-1 / (2 * 0.7**2))
    g0, g1 = g_norms(KernelSpec("veh-gauss", sigma=0.7))
    assert g0 == g1 == pytest.approx(2 * (1 - c), rel=1e-12)
    with pytest.raises(DegenerateGramError):
        norm_gap(1.0, 1.0, 1.0)


def test_variance_lower_bound_degenerate():
    assert variance_lower_bound(np.array([0.0, 1.0, 1.0, 0.0, 0.0, 1.0]), VEH) == (0.0, True)


def test_variance_lower_bound_formula_half():
    val, flag = variance_lower_bound(np.full(6, 0.5), VEH)
    want = 32 * 6**3 * (1 - C1) ** 4 * 0.25**3 / 6**4
    assert not flag and val == pytest.approx(want, rel=1e-14)


def test_variance_lower_bound_below_exact_half():
    val, _ = variance_lower_bound(np.full(6, 0.5), VEH)
    assert val <= exhaustive_moments(np.full(6, 0.5), VEH)[1]


def test_variance_lower_bound_below_exact_random(rng):
    bad = []
    for i in range(100):
        p = rng.uniform(0.05, 0.95, 6)
        val, _ = variance_lower_bound(p, VEH)
        var = exhaustive_moments(p, VEH)[1]
        if val > var:
            bad.append((i, val, var))
    assert not bad, f"{len(bad)} of 100 draws violate the bound, first {bad[0]}"


def test_variance_lower_bound_monotone_in_n0():
    base = np.full(6, 0.5)
    vals = []
    for k in range(7):
        p = base.copy()
        p[:k] = 0.0  # degenerate pairs leave d_min and p_min unchanged
        vals.append(variance_lower_bound(p, VEH)[0])
    assert all(a >= b for a, b in zip(vals, vals[1:]))


# --- bounds -------------------------------------------------------------------


def hand_bound(N, N0, d_max, p_max, d0, s2):
    C = p_max**4 + (N + 2) / N**2 * p_max**2 + d0 * p_max / (N**3 * d_max**4)
    t1 = 16 * np.sqrt(2) * d_max**4 * p_max**4 / (N * s2 * np.sqrt(np.pi))
    t2 = 8 / np.sqrt(N) * (2 * N0 / N) ** 2 * d_max**6 * p_max**2 / (N * s2) ** 1.5 * np.sqrt(C)
    return (t1 + t2) / np.sqrt(N)


def test_theorem_bound_zero_pmax():
    d = theorem_bound(np.zeros(6), VEH)
    assert d.p_max == 0 and d.C1 == 0 and d.wasserstein_bound == 0


def test_theorem_bound_half_matches_hand():
    p = np.full(6, 0.5)
    d = theorem_bound(p, VEH)
    assert d.sigma2_exact and d.N0 == 6
    assert d.d0 == pytest.approx((2 * 2 * (1 - C1)) ** 2)
    # the enumerated variance is 0 here, so the bound is infinite
    assert d.sigma2 == pytest.approx(0.0, abs=1e-15) and d.wasserstein_bound == np.inf
    d2 = theorem_bound(p, VEH, sigma2=0.01)
    want = hand_bound(6, 6, 1 - C1, 0.25, d2.d0, 0.01)
    assert d2.wasserstein_bound == pytest.approx(want, rel=1e-12)
    assert d2.main_text_bound == pytest.approx(want, rel=1e-12)  # N0 = N


def test_theorem_bound_random_matches_hand(rng):
    p = rng.uniform(0.1, 0.9, 6)
    d = theorem_bound(p, VEH)
    assert d.sigma2 > 0
    want = hand_bound(6, 6, d.d_max, d.p_max, d.d0, d.sigma2)
    assert d.wasserstein_bound == pytest.approx(want, rel=1e-12)


def test_bound_decreases_with_n():
    d0, dmax, pmax, s2 = 1.5, 0.4, 0.25, 0.02
    for N in (6, 28, 120):
        _, c_small = bound_constants(N, N, dmax, pmax, d0, s2)
        _, c_big = bound_constants(4 * N, 4 * N, dmax, pmax, d0, s2)
        assert c_big / np.sqrt(4 * N) < c_small / np.sqrt(N)


def test_main_text_form_with_degenerate_pairs(rng):
    p = rng.uniform(0.2, 0.8, 6)
    p[0] = 0.0
    d = theorem_bound(p, VEH)
    assert d.N0 == 5
    assert d.main_text_bound == pytest.approx(d.wasserstein_bound * (6 / 5) ** 3)


def test_discrepancy_examples(rng):
    p = rng.random(10)
    assert discrepancy_bound(p, p) == 0.0
    with pytest.raises(ValueError):
        discrepancy_bound(p, p[:5])


def test_discrepancy_ermm_identity():
    lab = labels_from_sizes([4, 6, 5])
    Q = np.array([[0.4, 0.05, 0.1], [0.05, 0.3, 0.02], [0.1, 0.02, 0.5]])
    p_ermm = ermm_probabilities(ErmmParams(Q, lab))
    p_er = np.full(p_ermm.size, 0.17)
    assert ermm_er_discrepancy(Q, lab, 0.17) == pytest.approx(discrepancy_bound(p_er, p_ermm), rel=1e-13)
