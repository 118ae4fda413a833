"""Interacting particle system with multinomial resampling.

Each level resamples N particles i.i.d. from the ``g``-weighted empirical
measure of the previous cloud and then moves every particle independently
with the next kernel. ``phi`` accumulates ``eta_{k-1}(g_bar_{k-1})`` so that
``nu_n(f) = phi_n * eta_n(f)`` is unbiased for ``mu_n(f)``. Inside the
kernels ``phi`` is held in ``[2^-800, 2^800]`` next to a power-of-two
exponent, so long runs neither underflow nor overflow before the final value.
"""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fk import FkModel, inner
from .kernels import get_backend, pack_model
from .rng import split_seed


class Estimator(enum.Enum):
    ETA = "eta"
    NU = "nu"
    NU_ONE = "nu_one"


@dataclass
class ParticleState:
    level: int
    positions: np.ndarray
    phi: float
    key: int

    def __post_init__(self):
        if self.phi <= 0:
            raise ValueError("phi must be positive")


@dataclass(frozen=True)
class EstimatorSample:
    eta_f: float
    nu_f: float
    nu_one: float


@dataclass(frozen=True)
class MseEstimate:
    mean: float
    mse: float
    std_error_of_mse: float
    replications: int
    target: float


@dataclass(frozen=True)
class Replications:
    """Raw per-replication output: ``eta_n(f)`` and ``phi_n``."""

    eta: np.ndarray
    phi: np.ndarray
    positions: np.ndarray | None = None

    @property
    def nu(self) -> np.ndarray:
        return self.phi * self.eta

    def sample(self, r: int) -> EstimatorSample:
        return EstimatorSample(float(self.eta[r]), float(self.phi[r] * self.eta[r]), float(self.phi[r]))


def _chunks(total: int, parts: int):
    parts = max(1, min(parts, total))
    edges = np.linspace(0, total, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def replicate(model: FkModel, f, N: int, replications: int, master_seed: int, threads: int = 1,
              backend: str | None = None, keep_positions: bool = False, start: int = 0) -> Replications:
    """Run ``replications`` independent particle systems.

    Replication ``r`` uses the stream ``split_seed(master_seed, start + r)``,
    so output does not depend on ``threads`` or on chunking.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    f = model.check_function(model.n, f)
    f = np.ascontiguousarray(f)
    kern = get_backend(backend)
    packed = pack_model(model)
    keys = np.ascontiguousarray(split_seed(master_seed, np.arange(start, start + replications)))
    eta = np.empty(replications)
    phi = np.empty(replications)
    pos = np.zeros((replications if keep_positions else 0, N), dtype=np.int64)
    dummy = np.zeros((0, N), dtype=np.int64)

    def work(span):
        a, b = span
        out_pos = pos[a:b] if keep_positions else dummy
        kern.simulate(*packed.args(), f, N, keys[a:b], eta[a:b], phi[a:b], out_pos)

    spans = _chunks(replications, threads)
    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(work, spans))
    else:
        for s in spans:
            work(s)
    return Replications(eta, phi, pos if keep_positions else None)


def run_particle_system(model: FkModel, N: int, seed: int, backend: str | None = None) -> ParticleState:
    """Final state of one run; identical to replication 0 of ``replicate(..., seed)``."""
    res = replicate(model, np.zeros(model.sizes[-1]), N, 1, seed, backend=backend, keep_positions=True)
    key = int(split_seed(seed, np.arange(1))[0])
    return ParticleState(level=model.n, positions=res.positions[0].copy(), phi=float(res.phi[0]), key=key)


def summarize(values, target: float) -> MseEstimate:
    values = np.asarray(values, dtype=np.float64)
    sq = (values - target) ** 2
    R = values.size
    se = float(np.std(sq, ddof=1) / np.sqrt(R)) if R > 1 else float("nan")
    return MseEstimate(mean=float(np.mean(values)), mse=float(np.mean(sq)), std_error_of_mse=se,
                       replications=R, target=float(target))


def estimate_mse(model: FkModel, f, N: int, replications: int, master_seed: int,
                 estimator: Estimator = Estimator.NU, threads: int = 1,
                 backend: str | None = None) -> MseEstimate:
    """Empirical mean and MSE of ``eta_n(f)``, ``nu_n(f)`` or ``nu_n(1)``."""
    if replications < 2:
        raise ValueError("need at least 2 replications")
    estimator = Estimator(estimator)
    res = replicate(model, f, N, replications, master_seed, threads=threads, backend=backend)
    if estimator is Estimator.NU_ONE:
        return summarize(res.phi, 1.0)
    target = inner(model.measures[-1], f)
    return summarize(res.eta if estimator is Estimator.ETA else res.nu, target)
