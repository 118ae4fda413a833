import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smclab import fixtures
from smclab.kernels import BACKENDS, DEFAULT_BACKEND, get_backend
from smclab.particles import replicate, run_particle_system
from smclab.sis import build_sis, run_sis

needs_compiled = pytest.mark.skipif("compiled" not in BACKENDS, reason="extension not built")


@needs_compiled
@settings(max_examples=40)
@given(st.integers(0, 10_000), st.integers(1, 12), st.integers(1, 4))
def test_backends_bit_identical(seed, N, levels):
    m = fixtures.random_fk_model(np.random.default_rng(seed), levels, 4)
    f = np.random.default_rng(seed).standard_normal(m.sizes[-1])
    a = replicate(m, f, N, 25, seed, backend="python", keep_positions=True)
    b = replicate(m, f, N, 25, seed, backend="compiled", keep_positions=True)
    assert np.array_equal(a.eta, b.eta)
    assert np.array_equal(a.phi, b.phi)
    assert np.array_equal(a.positions, b.positions)


@needs_compiled
def test_sis_backends_bit_identical():
    s = build_sis(fixtures.theta_example(5, 1.5))
    f = np.eye(6)[5]
    a = run_sis(s, f, 30, 500, 3, backend="python")
    b = run_sis(s, f, 30, 500, 3, backend="compiled")
    assert a == b


@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_thread_count_does_not_change_results(backend):
    lm = fixtures.chain_2block()
    f = np.arange(6.0)
    one = replicate(lm.base, f, 17, 301, 11, threads=1, backend=backend)
    many = replicate(lm.base, f, 17, 301, 11, threads=4, backend=backend)
    assert np.array_equal(one.nu, many.nu)


def test_offset_replications_are_a_slice():
    m = fixtures.theta_example(3, 2.0).induce_fk_model()
    f = np.ones(4)
    full = replicate(m, f, 9, 40, 5)
    tail = replicate(m, f, 9, 15, 5, start=25)
    assert np.array_equal(full.nu[25:], tail.nu)


def test_run_particle_system_is_replication_zero():
    m = fixtures.theta_example(3, 1.0).induce_fk_model()
    st_ = run_particle_system(m, 12, 99)
    rep = replicate(m, np.zeros(4), 12, 1, 99, keep_positions=True)
    assert np.array_equal(st_.positions, rep.positions[0])
    assert st_.phi == rep.phi[0]
    assert st_.level == 3


def test_unknown_backend():
    with pytest.raises(ValueError, match="backend"):
        get_backend("fortran")


def test_pure_python_fallback_selected_by_environment():
    env = dict(os.environ, SMCLAB_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import smclab.kernels as k; print(k.DEFAULT_BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert DEFAULT_BACKEND in BACKENDS


@pytest.mark.parametrize("backend", sorted(BACKENDS))
def test_phi_rescaling_through_deep_underflow(backend):
    # one particle and a swap kernel: the path is x_k = x_0 xor (k mod 2), so
    # phi_n = prod_k g_bar_k(x_k). For x_0 = 0 the running product dips far
    # below the smallest double before recovering.
    from smclab.fk import FkModel
    a, half = 1e-3, 300
    g = [np.array([a, 1.0]) if k % 2 == 0 else np.array([1.0, a]) for k in range(half)]
    g += [np.array([1 / a, 1.0]) if k % 2 == 0 else np.array([1.0, 1 / a]) for k in range(half)]
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    m = FkModel(mu0=[0.5, 0.5], g=g, kernels=[swap] * (2 * half))
    res = replicate(m, np.ones(2), 1, 64, 1, backend=backend, keep_positions=True)
    seen = set()
    for r in range(64):
        x0 = int(res.positions[r, 0])  # n is even, so x_n = x_0
        logs = np.array([np.log(m.g_bar[k][x0 ^ (k & 1)]) for k in range(2 * half)])
        if x0 == 0:
            assert np.cumsum(logs).min() < np.log(1e-310)
        assert res.phi[r] == pytest.approx(np.exp(logs.sum()), rel=1e-9)
        seen.add(x0)
    assert seen == {0, 1}
