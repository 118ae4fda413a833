"""Exact expectations for the particle system on tiny instances.

Two independent routes:

* ``enumerate_exact_mse`` walks the full probability tree of the algorithm.
  Particles are exchangeable, so a node only needs the occupation counts of
  the cloud and the running ``phi``; given a parent, the child counts are
  multinomial with cell probabilities ``sum_x c_x g(x) K(x, .) / sum_x c_x g(x)``.
* ``moment_matrices`` propagates ``S_k(x, y) = E[nu_k(x) nu_k(y)]`` in closed
  form, which is exact for any ``N`` and polynomial in the state-space size.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FeasibilityError
from .fk import FkModel, inner, propagator_sweep

DEFAULT_MAX_WORK = 10_000_000


def compositions(N: int, m: int) -> np.ndarray:
    """All count vectors of length ``m`` summing to ``N`` (stars and bars)."""
    rows = []
    for bars in itertools.combinations(range(N + m - 1), m - 1):
        prev = -1
        row = []
        for b in bars:
            row.append(b - prev - 1)
            prev = b
        row.append(N + m - 2 - prev)
        rows.append(row)
    return np.array(rows, dtype=np.int64).reshape(-1, m)


def n_compositions(N: int, m: int) -> int:
    return math.comb(N + m - 1, m - 1)


def _multinomial_coef(C: np.ndarray, N: int) -> np.ndarray:
    fact = np.array([math.factorial(i) for i in range(N + 1)], dtype=np.float64)
    return math.factorial(N) / np.prod(fact[C], axis=1)


@dataclass
class ExactResult:
    """Expectations over the full outcome tree of one model and test function."""

    N: int
    mu_f: float
    mean_nu: float
    mse_nu: float
    mean_eta: float
    mse_eta: float
    mse_nu_one: float
    var_nu_centered: float
    varrep: float
    martingale_error: float
    final_distribution: dict = field(repr=False)
    levels: list = field(repr=False)
    work: int = 0


def _check_work(model, N, max_work):
    # upper estimate of the expansion cost, checked before any work is done
    nodes = 1
    work = 0
    for k, m in enumerate(model.sizes):
        c = n_compositions(N, m)
        work += nodes * c
        if work > max_work:
            raise FeasibilityError(
                f"outcome tree needs more than {max_work} expansions (reached {work} at level {k}); "
                "reduce N, the number of levels or the state-space sizes")
        nodes = nodes * c
    return work


def enumerate_exact_mse(model: FkModel, f, N: int, max_work: int = DEFAULT_MAX_WORK) -> ExactResult:
    """Exact moments of ``nu_n(f)``, ``eta_n(f)`` and ``nu_n(1)`` by full enumeration.

    Also evaluates the variance decomposition
    ``(1/N) E[nu_n(1) nu_n(f^2) - mu_n(f)^2] + (1/N) sum_j E[U_j]`` with
    ``U_j = nu_j(1) nu_j(h_j^2) - nu_j(h_j)^2`` and ``h_j = q_{j,n}(f)``, and
    checks ``E[nu_k(h) | F_{k-1}] = nu_{k-1}(q_{k-1,k} h)`` at every node.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    f = model.check_function(model.n, f)
    work = _check_work(model, N, max_work)
    n = model.n
    hs = propagator_sweep(model, n, f)
    mu_f = inner(model.measures[-1], f)

    C0 = compositions(N, model.sizes[0])
    p0 = _multinomial_coef(C0, N) * np.prod(model.mu0[None, :] ** C0, axis=1)
    level = {}
    for c, p in zip(C0, p0):
        if p > 0:
            level[(tuple(int(v) for v in c), 1.0)] = float(p)
    levels = [level]
    u_sum = 0.0
    mart = 0.0

    def level_u(nodes, h):
        tot = 0.0
        for (c, phi), p in nodes.items():
            c = np.asarray(c, dtype=np.float64)
            nu1 = phi
            nu_h2 = phi * inner(c, h * h) / N
            nu_h = phi * inner(c, h) / N
            tot += p * (nu1 * nu_h2 - nu_h * nu_h)
        return tot

    for k in range(1, n + 1):
        u_sum += level_u(levels[-1], hs[k - 1])
        gb = model.g_bar[k - 1]
        K = model.kernels[k - 1]
        Ck = compositions(N, model.sizes[k])
        coef = _multinomial_coef(Ck, N)
        Ckf = Ck.astype(np.float64)
        tests = (hs[k], np.ones(model.sizes[k]))
        back = tuple(gb * model.kernel_apply(k, t) for t in tests)
        nxt = {}
        for (c, phi), p in levels[-1].items():
            cv = np.asarray(c, dtype=np.float64)
            w = cv * gb
            wsum = inner(cv, gb)
            cell = np.sum(w[:, None] * K, axis=0) / wsum
            probs = coef * np.prod(cell[None, :] ** Ck, axis=1)
            phi_c = phi * wsum / N
            for t, b in zip(tests, back):
                lhs = float(np.sum(probs * (Ckf @ t))) * phi_c / N
                rhs = phi * inner(cv, b) / N
                mart = max(mart, abs(lhs - rhs) / max(1.0, abs(rhs)))
            for row, q in zip(Ck, probs):
                if q > 0:
                    key = (tuple(int(v) for v in row), phi_c)
                    nxt[key] = nxt.get(key, 0.0) + p * float(q)
        levels.append(nxt)

    mean_nu = mean_eta = 0.0
    mse_nu = mse_eta = mse_one = 0.0
    e_last = 0.0
    final = {}
    fc = f - mu_f
    var_c = 0.0
    for (c, phi), p in levels[-1].items():
        cv = np.asarray(c, dtype=np.float64)
        eta = inner(cv, f) / N
        nu = phi * eta
        mean_nu += p * nu
        mean_eta += p * eta
        mse_nu += p * (nu - mu_f) ** 2
        mse_eta += p * (eta - mu_f) ** 2
        mse_one += p * (phi - 1.0) ** 2
        e_last += p * (phi * phi * inner(cv, f * f) / N - mu_f * mu_f)
        var_c += p * (phi * inner(cv, fc) / N) ** 2
        final[c] = final.get(c, 0.0) + p
    varrep = (e_last + u_sum) / N
    return ExactResult(N=N, mu_f=mu_f, mean_nu=mean_nu, mse_nu=mse_nu, mean_eta=mean_eta,
                       mse_eta=mse_eta, mse_nu_one=mse_one, var_nu_centered=var_c, varrep=varrep,
                       martingale_error=mart, final_distribution=final, levels=levels, work=work)


def moment_matrices(model: FkModel, N: int) -> list:
    """``S_k = E[nu_k nu_k^T]`` for ``k = 0..n``, with ``nu_k`` the weighted occupation measure."""
    if N < 1:
        raise ValueError("N must be >= 1")
    a = 1.0 - 1.0 / N
    mu0 = model.mu0
    S = a * np.outer(mu0, mu0) + np.diag(mu0) / N
    out = [S]
    for k in range(1, model.n + 1):
        Q = model.g_bar[k - 1][:, None] * model.kernels[k - 1]
        T = Q.T @ S @ Q
        S = a * T + np.diag(T.sum(axis=1)) / N
        out.append(S)
    return out


def covariance_matrices(model: FkModel, N: int) -> list:
    """``E[(nu_k - mu_k)(nu_k - mu_k)^T]`` per level."""
    return [S - np.outer(mu, mu) for S, mu in zip(moment_matrices(model, N), model.measures)]


def exact_mse_nu(model: FkModel, f, N: int, k: int | None = None) -> float:
    """``E[(nu_k(f) - mu_k(f))^2]`` from the moment recursion."""
    k = model.n if k is None else k
    f = model.check_function(k, f)
    S = moment_matrices(model, N)[k]
    mu = inner(model.measures[k], f)
    return max(float(f @ S @ f) - mu * mu, 0.0)


def sup_mse_maxnorm(cov: np.ndarray, max_states: int = 20) -> float:
    """``max f^T C f`` over ``|f|_inf <= 1``, attained at a sign vertex."""
    m = cov.shape[0]
    if m > max_states:
        raise FeasibilityError(f"vertex enumeration over 2^{m} sign vectors is too large")
    if m == 1:
        return max(float(cov[0, 0]), 0.0)
    best = 0.0
    # fix the first sign by symmetry
    rest = m - 1
    chunk = 1 << min(rest, 14)
    for start in range(0, 1 << rest, chunk):
        idx = np.arange(start, min(start + chunk, 1 << rest), dtype=np.int64)
        bits = ((idx[:, None] >> np.arange(rest)) & 1).astype(np.float64)
        V = np.hstack([np.ones((idx.size, 1)), 1.0 - 2.0 * bits])
        vals = np.einsum("ij,jk,ik->i", V, cov, V)
        best = max(best, float(vals.max()))
    return best


def sup_mse_local_upper(cov: np.ndarray, mu: np.ndarray, blocks: np.ndarray) -> float:
    """Upper bound on ``max f^T C f`` over the unit ball of the local L_2 max-norm.

    The ball lies inside ``{mu(f^2) <= 1}`` and inside
    ``{sum_j mu_j(f^2) <= |I|}``; the bound is the smaller of the two
    generalized eigenvalue bounds.
    """
    blocks = np.asarray(blocks)
    mass = np.bincount(blocks, weights=mu)
    local = mu / mass[blocks]
    out = []
    for d, scale in ((mu, 1.0), (local, float(mass.size))):
        s = 1.0 / np.sqrt(d)
        M = s[:, None] * cov * s[None, :]
        out.append(scale * float(np.linalg.eigvalsh((M + M.T) / 2)[-1]))
    return max(min(out), 0.0)
