import numpy as np
import pytest

from smclab import sis
from smclab.errors import AbsoluteContinuityError, DomainError
from smclab.fixtures import tiny_fixtures
from smclab.theta import build, build_alpha


@pytest.mark.parametrize("n", range(1, 8))
def test_theta_proposal(n):
    setup = sis.build_sis(build(n, 1.3))
    assert np.allclose(setup.pi, sis.theta_proposal(n))
    assert setup.pi.sum() == pytest.approx(1.0)


def test_alpha_proposal_matches_target():
    setup = sis.build_sis(build_alpha(0.2))
    assert np.allclose(setup.pi, [0.5, 0.5]) and np.allclose(setup.omega, 1.0)


@pytest.mark.parametrize("name", sorted(tiny_fixtures()))
def test_enumeration_matches_formula(name):
    fk, f, N = tiny_fixtures()[name]
    setup = sis.build_sis(fk)
    for M in (1, 2, N):
        mean, mse = sis.enumerate_sis(setup, f, M)
        assert mean == pytest.approx(float(setup.mu @ f), abs=1e-12)
        assert mse == pytest.approx(sis.sis_exact_mse_function(setup, f, M), abs=1e-12)
    x = int(np.argmax(setup.mu))
    assert sis.sis_exact_mse(setup, x, 3) == pytest.approx(sis.sis_exact_mse_function(setup, np.eye(setup.mu.size)[x], 3))


def test_theta_top_formula():
    assert sis.theta_top_mse(2.0, 4, 1) == pytest.approx(15 / 2.875 ** 2, rel=1e-15)
    assert round(sis.theta_top_mse(2.0, 4, 1), 5) == 1.81474
    for theta in (0.5, 1.0, 2.0):
        for n in range(1, 7):
            setup = sis.build_sis(build(n, theta))
            assert sis.theta_top_mse(theta, n, 3) == pytest.approx(sis.sis_exact_mse(setup, n, 3), rel=1e-12)
    with pytest.raises(DomainError):
        sis.theta_top_mse(0.0, 3, 1)


def test_degeneracy_rows():
    rows = sis.degeneracy_report(0.6, range(1, 6), 10)
    assert not any(r.growth for r in rows) and rows[0].ratio is None
    assert all(r.growth for r in sis.degeneracy_report(0.8, range(1, 3), 10))
    assert sis.theta1_ratio(10) == pytest.approx(1.6814, abs=5e-5)
    assert sis.theta1_ratio_crossover(1.9) == 38
    assert sis.theta1_ratio(37) < 1.9 <= sis.theta1_ratio(38)
    # not monotone at the start: 4/3 then 21/16
    assert sis.theta1_ratio(1) == pytest.approx(4 / 3) and sis.theta1_ratio(2) == pytest.approx(21 / 16)
    rows = sis.degeneracy_report(1.0, range(1, 12), 5)
    for r, n in zip(rows[1:], range(1, 11)):
        assert r.ratio == pytest.approx(sis.theta1_ratio(n))
    with pytest.raises(DomainError):
        sis.theta1_ratio_crossover(2.0)


def test_absolute_continuity():
    setup = sis.SisSetup(pi=np.array([1.0, 0.0]), omega=np.array([2.0, 0.0]), mu=np.array([0.5, 0.5]))
    with pytest.raises(AbsoluteContinuityError):
        sis.sis_exact_mse(setup, 1, 4)


def test_run_sis_agrees_with_exact():
    setup = sis.build_sis(build(4, 1.0))
    f = np.eye(5)[4]
    est = sis.run_sis(setup, f, 10, 40000, master_seed=7)
    exact = sis.sis_exact_mse(setup, 4, 10)
    assert abs(est.mse - exact) < 4 * est.std_error_of_mse
    assert abs(est.mean - setup.mu[4]) < 4 * np.sqrt(exact / 40000)
    again = sis.run_sis(setup, f, 10, 40000, master_seed=7, threads=3)
    assert again.mse == est.mse


def test_theta1_top_example_value():
    setup = sis.build_sis(build(3, 1.0))
    assert sis.sis_exact_mse(setup, 3, 100) == pytest.approx(7 / 1600, rel=1e-14)
