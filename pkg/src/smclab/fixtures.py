"""Named models used by the CLI, the tests and the benchmarks."""
from __future__ import annotations

import numpy as np

from .fk import FkModel
from .local import LocalModel, PartitionHierarchy
from .theta import build as build_theta, build_alpha
from .tree import TreeModel

CHAIN_ENERGY = np.array([0.0, 1.0, 0.4, 0.3, 1.3, 0.1])
CHAIN_BETAS = (0.0, 0.5, 1.0, 1.5)


def singleton(n: int = 2) -> FkModel:
    """One state per level; every estimator is exact."""
    return FkModel(mu0=[1.0], g=[np.ones(1)] * n, kernels=[np.ones((1, 1))] * n)


def theta_example(n: int = 3, theta: float = 1.0) -> TreeModel:
    return build_theta(n, theta)


def alpha_example(alpha: float = 0.1, variant: str = "original") -> TreeModel:
    return build_alpha(alpha, variant)


def metropolis_block_kernel(pi, blocks, laziness: float = 0.5, sweeps: int = 1) -> np.ndarray:
    """Lazy nearest-neighbour Metropolis chain inside each block, reversible for ``pi``.

    States in a block are visited in index order and form a path.
    """
    pi = np.asarray(pi, dtype=np.float64)
    E = pi.size
    P = np.zeros((E, E))
    for b in np.unique(blocks):
        idx = np.flatnonzero(blocks == b)
        for a, x in enumerate(idx):
            for y in (idx[a - 1] if a > 0 else None, idx[a + 1] if a + 1 < idx.size else None):
                if y is not None:
                    P[x, y] = 0.5 * min(1.0, pi[y] / pi[x])
            P[x, x] = 1.0 - P[x].sum()
    P = laziness * np.eye(E) + (1.0 - laziness) * P
    return np.linalg.matrix_power(P, sweeps)


def tempered_local_model(energy, betas, blocks, laziness: float = 0.5, sweeps: int = 1,
                         base=None) -> LocalModel:
    """``mu_k ∝ base * exp(-beta_k H)`` with block-local Metropolis kernels.

    ``blocks`` lists the state-to-block map per level; level 0 is usually a
    single block. Potentials are the exact ratios ``mu_{k+1} / mu_k``.
    """
    H = np.asarray(energy, dtype=np.float64)
    base = np.ones_like(H) if base is None else np.asarray(base, dtype=np.float64)
    mus = []
    for b in betas:
        w = base * np.exp(-b * (H - H.min()))
        mus.append(w / w.sum())
    g = [mus[k + 1] / mus[k] for k in range(len(betas) - 1)]
    kernels = [metropolis_block_kernel(mus[k], np.asarray(blocks[k]), laziness, sweeps)
               for k in range(1, len(betas))]
    # round-off in mu_k K_k = mu_k is at the 1e-16 level
    fk = FkModel(mu0=mus[0], g=g, kernels=kernels)
    return LocalModel(fk, PartitionHierarchy(tuple(np.asarray(b) for b in blocks)))


def chain_2block(n: int = 3, sweeps: int = 4, laziness: float = 0.5) -> LocalModel:
    """Six states in two wells ``{0,1,2}`` and ``{3,4,5}``, tempered over ``n + 1`` levels.

    Level 0 is one block; every later level splits into the two wells.
    """
    betas = CHAIN_BETAS[:n + 1] if n + 1 <= len(CHAIN_BETAS) else tuple(np.linspace(0, 0.5 * n, n + 1))
    two = np.array([0, 0, 0, 1, 1, 1])
    blocks = [np.zeros(6, dtype=np.int64)] + [two] * n
    return tempered_local_model(CHAIN_ENERGY, betas, blocks, laziness=laziness, sweeps=sweeps)


def splitting(sweeps: int = 2) -> LocalModel:
    """Eight states; one block at level 0, two at level 1, four at levels 2 and 3."""
    H = np.array([0.0, 0.7, 0.2, 1.1, 0.5, 0.9, 0.3, 0.6])
    blocks = [np.zeros(8, dtype=np.int64), np.repeat([0, 1], 4), np.repeat([0, 1, 2, 3], 2),
              np.repeat([0, 1, 2, 3], 2)]
    return tempered_local_model(H, (0.0, 0.6, 1.2, 1.8), blocks, sweeps=sweeps)


def single_block(chain: LocalModel) -> LocalModel:
    """Same dynamics as ``chain`` with the trivial one-block hierarchy."""
    E = chain.hierarchy.size
    return LocalModel(chain.base, PartitionHierarchy(tuple(np.zeros(E, dtype=np.int64)
                                                           for _ in range(chain.n + 1))))


# tiny models for the exact enumeration oracle ------------------------------

def tiny_fixtures() -> dict:
    """Name -> ``(FkModel, f, N)`` with ``N <= 3``, at most 3 levels and 3 states per level."""
    out = {}
    out["two-state-2lvl"] = (FkModel(mu0=[0.3, 0.7], g=[np.array([2.0, 0.5])],
                                     kernels=[np.array([[0.8, 0.2], [0.1, 0.9]])]),
                             np.array([1.0, -0.5]), 2)
    out["three-state-3lvl"] = (FkModel(mu0=[0.2, 0.5, 0.3],
                                       g=[np.array([1.5, 0.4, 1.0]), np.array([0.7, 1.2, 2.0])],
                                       kernels=[np.array([[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.1, 0.1, 0.8]]),
                                                np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])]),
                               np.array([0.5, -1.0, 2.0]), 3)
    out["growing-tree"] = (TreeModel.from_masses([np.array([0, 0]), np.array([0, 1, 1])],
                                                 [np.array([1.0]), np.array([0.3, 0.7]),
                                                  np.array([0.2, 0.5, 0.3])]).induce_fk_model(),
                           np.array([1.0, 0.0, 0.0]), 3)
    out["theta-2"] = (theta_example(2, 2.0).induce_fk_model(), np.array([0.0, 0.0, 1.0]), 3)
    out["alpha-small"] = (FkModel(mu0=[1.0], g=[np.ones(1)], kernels=[np.array([[0.25, 0.75]])]),
                          np.array([1.0, 0.0]), 3)
    out["mixing-3lvl"] = (FkModel(mu0=[0.5, 0.5], g=[np.array([3.0, 1.0]), np.array([1.0, 0.2, 1.0])],
                                  kernels=[np.array([[0.9, 0.05, 0.05], [0.2, 0.3, 0.5]]),
                                           np.array([[1.0, 0.0], [0.4, 0.6], [0.0, 1.0]])]),
                          np.array([1.0, 2.0]), 2)
    return out


def random_fk_model(rng: np.random.Generator, levels: int, max_states: int = 3) -> FkModel:
    sizes = [int(rng.integers(1, max_states + 1)) for _ in range(levels)]
    mu0 = rng.dirichlet(np.ones(sizes[0]))
    g = [rng.uniform(0.2, 3.0, s) for s in sizes[:-1]]
    kernels = [rng.dirichlet(np.ones(b), size=a) for a, b in zip(sizes[:-1], sizes[1:])]
    return FkModel(mu0=mu0, g=g, kernels=kernels)


def random_local_model(rng: np.random.Generator, size: int = 6, levels: int = 3, sweeps: int = 2) -> LocalModel:
    """Random tempering on ``size`` states with randomly refined contiguous blocks."""
    H = rng.uniform(0.0, 1.5, size)
    blocks = [np.zeros(size, dtype=np.int64)]
    for _ in range(1, levels):
        prev = blocks[-1]
        cut = np.zeros(size, dtype=bool)
        cut[1:] = (prev[1:] != prev[:-1]) | (rng.random(size - 1) < 0.3)
        blocks.append(np.cumsum(cut).astype(np.int64))
    betas = np.cumsum(np.concatenate([[0.0], rng.uniform(0.2, 0.8, levels - 1)]))
    return tempered_local_model(H, betas, blocks, sweeps=sweeps)


LOCAL_FIXTURES = {"chain-2block": chain_2block, "splitting": splitting}
