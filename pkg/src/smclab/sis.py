"""Unnormalized sequential importance sampling.

Particles only move with the kernels, so the final cloud is an i.i.d.
sample from ``pi_n = mu_0 K_1 ... K_n`` and is reweighted by
``omega = mu_n / pi_n``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import AbsoluteContinuityError, DomainError
from .fk import FkModel, inner
from .kernels import get_backend
from .oracle import _multinomial_coef, compositions
from .particles import MseEstimate, _chunks, summarize
from .rng import split_seed

GROWTH_THRESHOLD = 2.0 ** -0.5


@dataclass(frozen=True)
class SisSetup:
    pi: np.ndarray
    omega: np.ndarray
    mu: np.ndarray


def _as_fk(model) -> FkModel:
    return model if isinstance(model, FkModel) else model.induce_fk_model()


def build_sis(model) -> SisSetup:
    """Proposal ``pi_n`` by kernel propagation of ``mu_0`` and weights ``mu_n / pi_n``."""
    fk = _as_fk(model)
    pi = fk.mu0.copy()
    for K in fk.kernels:
        pi = np.sum(pi[:, None] * K, axis=0)
    mu = np.array(fk.measures[-1])
    bad = np.flatnonzero((pi <= 0) & (mu > 0))
    if bad.size:
        raise AbsoluteContinuityError(f"state {int(bad[0])} has target mass {mu[bad[0]]!r} but zero proposal mass")
    omega = np.zeros_like(mu)
    pos = pi > 0
    omega[pos] = mu[pos] / pi[pos]
    return SisSetup(pi=pi, omega=omega, mu=mu)


def sis_exact_mse(setup: SisSetup, x: int, N: int) -> float:
    """``mu(x)^2 / N (1/pi(x) - 1)`` for ``f = 1_{x}``."""
    p = setup.pi[x]
    if not p > 0:
        raise AbsoluteContinuityError(f"state {x} has zero proposal mass")
    return setup.mu[x] ** 2 / N * (1.0 / p - 1.0)


def sis_exact_mse_function(setup: SisSetup, f, N: int) -> float:
    """``(pi((f omega)^2) - mu(f)^2) / N`` for general ``f``."""
    fw = np.asarray(f, dtype=np.float64) * setup.omega
    return max(inner(setup.pi, fw * fw) - inner(setup.mu, f) ** 2, 0.0) / N


def enumerate_sis(setup: SisSetup, f, N: int):
    """Exact ``(mean, mse)`` of the estimator by summing over all count vectors."""
    f = np.asarray(f, dtype=np.float64)
    C = compositions(N, setup.pi.size)
    probs = _multinomial_coef(C, N) * np.prod(setup.pi[None, :] ** C, axis=1)
    est = (C @ (f * setup.omega)) / N
    target = inner(setup.mu, f)
    return float(np.sum(probs * est)), float(np.sum(probs * (est - target) ** 2))


def run_sis(setup: SisSetup, f, N: int, replications: int, master_seed: int, threads: int = 1,
            backend: str | None = None) -> MseEstimate:
    """Monte Carlo replications of the SIS estimator, reduced in replication order."""
    if replications < 2:
        raise ValueError("need at least 2 replications")
    f = np.asarray(f, dtype=np.float64)
    kern = get_backend(backend)
    pi_cum = np.ascontiguousarray(np.cumsum(setup.pi))
    fw = np.ascontiguousarray(f * setup.omega)
    keys = np.ascontiguousarray(split_seed(master_seed, np.arange(replications)))
    out = np.empty(replications)

    def work(span):
        a, b = span
        kern.sis(pi_cum, fw, N, keys[a:b], out[a:b])

    spans = _chunks(replications, threads)
    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(work, spans))
    else:
        for s in spans:
            work(s)
    return summarize(out, inner(setup.mu, f))


def theta_top_mse(theta: float, n: int, N: int) -> float:
    """SIS error for the top node of the staircase tree (``pi_n(n_n) = 2^-n``)."""
    if not theta > 0:
        raise DomainError("theta must be > 0")
    if theta == 1:
        return (2.0 ** n - 1) / (N * (n + 1) ** 2)
    return (2.0 ** n - 1) / (N * (1 + theta / (theta - 1) * (1 - theta ** (-n))) ** 2)


def theta_proposal(n: int) -> np.ndarray:
    """``pi_n`` of the staircase tree: ``2^-(j+1)`` below the top, ``2^-n`` at the top."""
    p = 2.0 ** -(np.arange(n + 1) + 1.0)
    p[n] = 2.0 ** -n
    return p


@dataclass(frozen=True)
class DegeneracyRow:
    n: int
    mse: float
    ratio: float | None
    growth: bool


def degeneracy_report(theta: float, n_range, N: int) -> list:
    """Exact SIS error of ``1_{n_n}`` for each ``n``; ``growth`` is ``theta > 2^-1/2``."""
    if not theta > 0:
        raise DomainError("theta must be > 0")
    growth = theta > GROWTH_THRESHOLD
    rows, prev = [], None
    for n in n_range:
        v = theta_top_mse(theta, n, N)
        rows.append(DegeneracyRow(n=int(n), mse=v, ratio=None if prev is None else v / prev, growth=growth))
        prev = v
    return rows


def theta1_ratio(n: int) -> float:
    """Exact ``mse(n+1) / mse(n)`` at ``theta = 1``."""
    return (2.0 ** (n + 1) - 1) * (n + 1) ** 2 / ((2.0 ** n - 1) * (n + 2) ** 2)


def theta1_ratio_crossover(level: float) -> int:
    """Smallest ``n`` with ``theta1_ratio(n) >= level``; the ratio increases to 2 for ``n >= 2``."""
    if not level < 2:
        raise DomainError("the ratio tends to 2 from below")
    n = 1
    while theta1_ratio(n) < level:
        n += 1
    return n
