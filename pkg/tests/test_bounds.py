import numpy as np
import pytest

from smclab import fixtures
from smclab.bounds import (Kind, StabilityConstants, VarianceProfile, VarianceSource, assemble_thm1, assemble_thm2,
                           c_hat, d_hat, eta_error_bound)
from smclab.errors import DimensionMismatch, KindMismatch, NegativeInput
from smclab.fk import per_level_variances
from smclab.oracle import covariance_matrices, exact_mse_nu, sup_mse_maxnorm
from smclab.tree import compute_tree_constants, random_tree

NAN = np.nan


def test_constant_tables():
    d = StabilityConstants(Kind.D_KIND, [[NAN, 2.0], [NAN, NAN]])
    assert d.matrix[0, 0] == 1.0 and d.matrix[1, 1] == 1.0 and np.isnan(d.matrix[1, 0])
    with pytest.raises(ValueError, match="diagonal"):
        StabilityConstants(Kind.D_KIND, [[NAN, 2.0], [NAN, NAN]], norm_label="local-L2")
    with pytest.raises(ValueError, match="> 0"):
        StabilityConstants(Kind.C_KIND, [[NAN, 0.0], [NAN, NAN]])
    with pytest.raises(DimensionMismatch):
        StabilityConstants(Kind.C_KIND, np.ones((2, 3)))


def test_hat_constants_by_hand():
    c = StabilityConstants(Kind.C_KIND, [[NAN, 1.0, 2.0], [NAN, NAN, 3.0], [NAN, NAN, NAN]])
    # c_hat_2 = 2 (2 + 0.5) + 3 (2 + 0.25)
    assert np.allclose(c_hat(c, [0.5, 0.25]), [0.0, 2.5, 11.75])
    d = StabilityConstants(Kind.D_KIND, [[1.0, 4.0], [NAN, 1.0]])
    assert np.allclose(d_hat(d), [2.0, 10.0])
    with pytest.raises(KindMismatch):
        d_hat(c)
    with pytest.raises(KindMismatch):
        c_hat(d, [0.0])
    with pytest.raises(DimensionMismatch):
        c_hat(c, [0.1])
    with pytest.raises(NegativeInput):
        c_hat(c, [-0.1, 0.0])


def test_threshold_and_flags():
    d = StabilityConstants(Kind.D_KIND, [[1.0, 4.0], [NAN, 1.0]])
    vp = VarianceProfile(v_hat=[1.0, 3.0])
    low = assemble_thm2(d, vp, 1.0, 19)
    assert low.N_threshold == 20.0 and not low.applicable
    rec = low.as_record()
    assert rec["total"] == rec["remainder_term"] == rec["epsilon_bar_bound"] == "NOT_APPLICABLE"
    ok = assemble_thm2(d, vp, 2.0, 20)
    assert ok.applicable and ok.epsilon_source == "theorem"
    assert ok.leading_term == pytest.approx(12.0)
    assert ok.remainder_term == pytest.approx(4 * 10 * 2 * 3 / 20)
    forced = assemble_thm2(d, vp, 1.0, 5, epsilon_bar=0.01)
    assert forced.total == pytest.approx(3.0 + 10 * 0.01) and forced.epsilon_source == "measured"
    assert vp.source is VarianceSource.SUPREMUM_BOUND
    with pytest.raises(DimensionMismatch):
        assemble_thm2(d, VarianceProfile(v_hat=[1.0]), 1.0, 30)


def test_eta_error_bound():
    assert eta_error_bound(0.5, 0.25, 2.0) == pytest.approx(1.0 + 2.0)
    with pytest.raises(NegativeInput):
        eta_error_bound(-1e-3, 0.0, 1.0)


@pytest.mark.parametrize("seed", range(8))
def test_tree_bound_and_epsilon_dominate_exact(seed):
    t = random_tree(np.random.default_rng(seed), 3, 4)
    fk = t.induce_fk_model()
    tc = compute_tree_constants(t)
    consts = StabilityConstants(Kind.D_KIND, tc.d)
    thr = assemble_thm2(consts, VarianceProfile(v_hat=tc.v_hat_sqrt_d()), 1.0, 1).N_threshold
    for N in (int(np.floor(thr)) + 1, 4 * int(np.ceil(thr))):
        covs = covariance_matrices(fk, N)
        eps = max(sup_mse_maxnorm(c) for c in covs)
        for x in range(fk.sizes[-1]):
            f = np.eye(fk.sizes[-1])[x]
            vp = VarianceProfile(v_hat=tc.v_hat_sqrt_d(), per_level=per_level_variances(fk, fk.n, f))
            rep = assemble_thm2(consts, vp, 1.0, N)
            assert rep.applicable
            assert rep.epsilon_bar_bound >= eps
            assert rep.total >= N * exact_mse_nu(fk, f, N)
            sup_rep = assemble_thm2(consts, VarianceProfile(v_hat=tc.v_hat_sqrt_d()), 1.0, N)
            assert sup_rep.total >= rep.total - 1e-12


def test_v_hat_bounds_asymptotic_variance(rng):
    for _ in range(20):
        t = random_tree(rng, 4, 5)
        fk = t.induce_fk_model()
        tc = compute_tree_constants(t)
        for _ in range(10):
            f = rng.uniform(-1, 1, fk.sizes[-1])
            f /= np.max(np.abs(f))
            s = per_level_variances(fk, fk.n, f).sum()
            assert s <= tc.v_hat_d_tilde()[-1] + 1e-12
            assert tc.v_hat_d_tilde()[-1] <= tc.v_hat_sqrt_d()[-1] + 1e-12


def test_chain_thm1_dominates_exact():
    from smclab.local import level_norm, stability_chain
    lm = fixtures.chain_2block()
    ch = stability_chain(lm, 2)
    E = lm.hierarchy.size
    thr = None
    for N in (200, 1000):
        for x in range(E):
            f = np.eye(E)[x]
            f = f / level_norm(lm, lm.n, 2, f)
            vp = ch.variance_profile(per_level_variances(lm.base, lm.n, f))
            rep = assemble_thm1(ch.constants(), ch.defects, vp, 1.0, N)
            thr = rep.N_threshold
            assert rep.applicable
            assert rep.total >= N * exact_mse_nu(lm.base, f, N)
    assert thr < 200
