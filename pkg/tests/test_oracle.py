import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smclab import fixtures
from smclab.errors import FeasibilityError
from smclab.fk import inner
from smclab.oracle import (compositions, covariance_matrices, enumerate_exact_mse, exact_mse_nu, n_compositions,
                           sup_mse_local_upper, sup_mse_maxnorm)


def test_compositions():
    C = compositions(3, 3)
    assert C.shape == (10, 3) == (n_compositions(3, 3), 3)
    assert np.all(C.sum(axis=1) == 3)
    assert len({tuple(c) for c in C}) == 10


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 3))
def test_exact_routes_agree(seed, N, levels):
    m = fixtures.random_fk_model(np.random.default_rng(seed), levels, 3)
    f = np.random.default_rng(seed + 5).standard_normal(m.sizes[-1])
    ex = enumerate_exact_mse(m, f, N)
    scale = max(1.0, ex.mse_nu)
    assert ex.mean_nu == pytest.approx(inner(m.measures[-1], f), abs=1e-10 * max(1, abs(ex.mu_f)))
    assert abs(ex.mse_nu - exact_mse_nu(m, f, N)) < 1e-10 * scale
    assert abs(ex.mse_nu - ex.varrep) < 1e-10 * scale
    assert ex.martingale_error < 1e-10


def _single_path_mse(m, f):
    # N = 1: nu_n(f) = prod_k g_bar_k(X_k) f(X_n) along one Markov path
    first = second = 0.0
    for path in itertools.product(*[range(s) for s in m.sizes]):
        p = m.mu0[path[0]]
        w = 1.0
        for k in range(m.n):
            p *= m.kernels[k][path[k], path[k + 1]]
            w *= m.g_bar[k][path[k]]
        v = w * f[path[-1]]
        first += p * v
        second += p * v * v
    return first, second - inner(m.measures[-1], f) ** 2


@pytest.mark.parametrize("seed", range(5))
def test_single_particle_path_enumeration(seed):
    m = fixtures.random_fk_model(np.random.default_rng(seed), 4, 3)
    f = np.linspace(-1, 2, m.sizes[-1])
    mean, mse = _single_path_mse(m, f)
    ex = enumerate_exact_mse(m, f, 1)
    assert ex.mean_nu == pytest.approx(mean, abs=1e-12)
    assert ex.mse_nu == pytest.approx(mse, abs=1e-12)


def test_feasibility_guard():
    m = fixtures.chain_2block().base
    with pytest.raises(FeasibilityError, match="expansions"):
        enumerate_exact_mse(m, np.ones(6), 12, max_work=10_000)


def test_constant_function_eta_exact():
    m, _, N = fixtures.tiny_fixtures()["three-state-3lvl"]
    ex = enumerate_exact_mse(m, np.full(3, 2.5), N)
    assert ex.mse_eta == pytest.approx(0.0, abs=1e-24)
    assert ex.mean_eta == pytest.approx(2.5)


def test_sup_mse_bounds(rng):
    m = fixtures.chain_2block().base
    cov = covariance_matrices(m, 7)[-1]
    best = sup_mse_maxnorm(cov)
    F = rng.uniform(-1, 1, size=(5000, 6))
    assert np.max(np.einsum("ij,jk,ik->i", F, cov, F)) <= best + 1e-15
    lm = fixtures.chain_2block()
    mu = m.measures[-1]
    up = sup_mse_local_upper(cov, mu, lm.hierarchy.blocks[-1])
    from smclab.local import level_norm
    for f in rng.standard_normal((500, 6)):
        f = f / level_norm(lm, lm.n, 2, f)
        assert f @ cov @ f <= up * (1 + 1e-12)
