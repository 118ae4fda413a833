"""Measure-valued Feynman-Kac model on finite state spaces.

A model is a chain of finite spaces ``E_0, ..., E_n`` with an initial law
``mu0``, positive potentials ``g[k]`` on ``E_k`` (k < n) and row-stochastic
kernels ``kernels[k-1]`` from ``E_{k-1}`` to ``E_k``. The measures follow

    mu_k(f) = mu_{k-1}(g_{k-1} K_k f) / mu_{k-1}(g_{k-1})

and the propagator ``q_{j,k}`` transports test functions from level ``k``
back to level ``j`` with ``mu_j(q_{j,k} f) = mu_k(f)``.

Points are dense integer ids; optional labels are carried for I/O only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import LevelMismatchError, LevelOrderError, ModelError, NormalizationError

PROB_TOL = 1e-12
G_FLOOR = 1e-300


def inner(weights, values) -> float:
    """Pairwise-summed inner product ``sum_x weights[x] * values[x]``."""
    return float(np.sum(np.asarray(weights) * np.asarray(values)))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FkModel:
    """Finite-state sequential model. Immutable; derived quantities are cached.

    Parameters
    ----------
    mu0 : (|E_0|,) array
        Initial probability vector.
    g : sequence of n arrays
        ``g[k]`` is the strictly positive potential on ``E_k``.
    kernels : sequence of n arrays
        ``kernels[k-1]`` is the ``|E_{k-1}| x |E_k|`` row-stochastic matrix ``K_k``.
    labels : optional sequence of n+1 label lists
    """

    mu0: np.ndarray
    g: tuple
    kernels: tuple
    labels: tuple | None = field(default=None)

    def __post_init__(self):
        mu0 = _frozen(self.mu0)
        g = tuple(_frozen(x) for x in self.g)
        kernels = tuple(_frozen(x) for x in self.kernels)
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "kernels", kernels)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(tuple(str(s) for s in lv) for lv in self.labels))
        self._validate()

    def _validate(self):
        mu0, g, kernels = self.mu0, self.g, self.kernels
        if mu0.ndim != 1 or mu0.size == 0:
            raise ModelError("mu0 must be a non-empty vector")
        if not np.all(np.isfinite(mu0)) or np.any(mu0 < 0):
            raise ModelError("mu0 has negative or non-finite entries")
        if abs(mu0.sum() - 1.0) > PROB_TOL:
            raise ModelError(f"mu0 sums to {mu0.sum()!r}, not 1")
        if len(g) != len(kernels):
            raise ModelError(f"{len(g)} potentials but {len(kernels)} kernels")
        size = mu0.size
        for k, (gk, K) in enumerate(zip(g, kernels)):
            if gk.shape != (size,):
                raise ModelError(f"g[{k}] has shape {gk.shape}, expected ({size},)")
            if not np.all(np.isfinite(gk)) or np.any(gk < G_FLOOR):
                bad = int(np.argmin(gk))
                raise ModelError(f"g[{k}] entry {bad} is {gk[bad]!r}; potentials must be >= {G_FLOOR}")
            if K.ndim != 2 or K.shape[0] != size:
                raise ModelError(f"kernel K_{k + 1} has shape {K.shape}, expected ({size}, m)")
            if not np.all(np.isfinite(K)) or np.any(K < 0):
                raise ModelError(f"kernel K_{k + 1} has negative or non-finite entries")
            rows = K.sum(axis=1)
            off = np.flatnonzero(np.abs(rows - 1.0) > PROB_TOL)
            if off.size:
                raise ModelError(f"kernel K_{k + 1} row {int(off[0])} sums to {rows[off[0]]!r}")
            size = K.shape[1]
        if self.labels is not None:
            if len(self.labels) != len(self.sizes):
                raise ModelError("labels must list one entry per level")
            for k, (lv, s) in enumerate(zip(self.labels, self.sizes)):
                if len(lv) != s:
                    raise ModelError(f"level {k} has {s} points but {len(lv)} labels")

    @property
    def n(self) -> int:
        """Index of the final level."""
        return len(self.kernels)

    @cached_property
    def sizes(self) -> tuple:
        return (self.mu0.size,) + tuple(K.shape[1] for K in self.kernels)

    @cached_property
    def _evolution(self):
        mus = [self.mu0]
        hats = []
        for k in range(1, self.n + 1):
            prev, gk, K = mus[-1], self.g[k - 1], self.kernels[k - 1]
            z = inner(prev, gk)
            if not z > 0:
                raise NormalizationError(f"mu_{k - 1}(g) = {z!r} is not positive")
            hat = prev * gk / z
            hat = hat / hat.sum()
            mu = np.sum(hat[:, None] * K, axis=0)
            mu = mu / mu.sum()
            hats.append(_frozen(hat))
            mus.append(_frozen(mu))
        return tuple(mus), tuple(hats)

    @property
    def measures(self) -> tuple:
        """``(mu_0, ..., mu_n)``."""
        return self._evolution[0]

    @property
    def mu_hats(self) -> tuple:
        """``(hat mu_1, ..., hat mu_n)``; ``mu_hats[k-1]`` lives on ``E_{k-1}``."""
        return self._evolution[1]

    @cached_property
    def g_bar(self) -> tuple:
        """Normalized potentials ``g_k / mu_k(g_k)``, equal to ``q_{k,k+1}(1)``."""
        return tuple(_frozen(gk / inner(mu, gk)) for gk, mu in zip(self.g, self.measures))

    def kernel_apply(self, k: int, f) -> np.ndarray:
        """``K_k f`` as a function on ``E_{k-1}``."""
        K = self.kernels[k - 1]
        return np.sum(K * np.asarray(f, dtype=np.float64)[None, :], axis=1)

    def check_function(self, k: int, f) -> np.ndarray:
        f = np.asarray(f, dtype=np.float64)
        if not 0 <= k <= self.n:
            raise LevelMismatchError(f"level {k} outside 0..{self.n}")
        if f.shape != (self.sizes[k],):
            raise LevelMismatchError(f"function of shape {f.shape} is not on level {k} (size {self.sizes[k]})")
        if not np.all(np.isfinite(f)):
            raise ValueError("test function has non-finite entries")
        return f


def evolve_measures(model: FkModel):
    """Return ``(mus, mu_hats)``: ``mu_0..mu_n`` and ``hat mu_1..hat mu_n``."""
    return list(model.measures), list(model.mu_hats)


def propagator_sweep(model: FkModel, k: int, f) -> list:
    """All of ``q_{j,k}(f)`` for ``j = 0..k`` by one right-to-left sweep."""
    f = model.check_function(k, f)
    out = [None] * (k + 1)
    out[k] = f
    h = f
    for l in range(k, 0, -1):
        h = model.g_bar[l - 1] * model.kernel_apply(l, h)
        out[l - 1] = h
    return out


def propagator_apply(model: FkModel, j: int, k: int, f) -> np.ndarray:
    """``q_{j,k}(f)`` as a function on ``E_j``."""
    if j > k:
        raise LevelOrderError(f"q_{{j,k}} needs j <= k, got j={j}, k={k}")
    if j < 0:
        raise LevelOrderError(f"negative level {j}")
    f = model.check_function(k, f)
    h = f
    for l in range(k, j, -1):
        h = model.g_bar[l - 1] * model.kernel_apply(l, h)
    return h


def variance_under(measure, f) -> float:
    """``Var_mu(f)``, computed in centred form and clamped at zero."""
    mu = np.asarray(measure, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if mu.shape != f.shape:
        raise LevelMismatchError(f"measure of shape {mu.shape} and function of shape {f.shape}")
    m = inner(mu, f)
    return max(inner(mu, (f - m) ** 2), 0.0)


def asymptotic_variance(model: FkModel, k: int, f) -> float:
    """``sum_{j<=k} Var_{mu_j}(q_{j,k} f)``."""
    return float(sum(per_level_variances(model, k, f)))


def per_level_variances(model: FkModel, k: int, f) -> np.ndarray:
    """Vector of ``Var_{mu_j}(q_{j,k} f)`` for ``j = 0..k``."""
    qs = propagator_sweep(model, k, f)
    return np.array([variance_under(model.measures[j], qs[j]) for j in range(k + 1)])


def identity_model(mu0: Sequence[float], n: int) -> FkModel:
    """Model with ``g = 1`` and identity kernels; every ``mu_k`` equals ``mu0``."""
    m = len(mu0)
    return FkModel(mu0=mu0, g=[np.ones(m)] * n, kernels=[np.eye(m)] * n)
