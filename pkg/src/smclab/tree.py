"""Leveled trees: each node at level k+1 has one parent at level k and the
kernel moves a particle from ``x`` to a child ``y`` with probability
``mu_{k+1}(y) / mu_{k+1}(s(x))``.

Potentials are stored normalized, ``g_k = mu_{k+1}^{->k} / mu_k``, so that
``mu_k(g_k) = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import LevelOrderError, ModelError
from .fk import PROB_TOL, FkModel, evolve_measures, inner

AGREE_TOL = 1e-10


def _as_parent_array(p, size_prev, level):
    p = np.asarray(p)
    if p.ndim != 1 or not np.issubdtype(p.dtype, np.integer):
        raise ModelError(f"parents of level {level} must be a vector of integer node ids")
    p = p.astype(np.int64)
    if p.size == 0:
        raise ModelError(f"level {level} has no nodes")
    bad = np.flatnonzero((p < 0) | (p >= size_prev))
    if bad.size:
        raise ModelError(f"node {int(bad[0])} at level {level} has parent {int(p[bad[0]])}, "
                         f"but level {level - 1} has nodes 0..{size_prev - 1}")
    orphans = np.setdiff1d(np.arange(size_prev), p)
    if orphans.size:
        raise ModelError(f"node {int(orphans[0])} at level {level - 1} has no successor at level {level}")
    return p


@dataclass(frozen=True, eq=False)
class TreeModel:
    """Tree with per-level parent arrays and strictly positive masses.

    Use :meth:`from_masses` or :meth:`from_dynamics` rather than calling
    the constructor with hand-built fields.
    """

    parents: tuple
    masses: tuple

    def __post_init__(self):
        masses = tuple(np.array(m, dtype=np.float64) for m in self.masses)
        if len(masses) != len(self.parents) + 1:
            raise ModelError(f"{len(masses)} mass vectors for {len(self.parents) + 1} levels")
        parents = []
        size = masses[0].size
        for k, p in enumerate(self.parents, start=1):
            parents.append(_as_parent_array(p, size, k))
            size = parents[-1].size
        for k, m in enumerate(masses):
            if m.ndim != 1:
                raise ModelError(f"masses at level {k} must be a vector")
            expect = masses[0].size if k == 0 else parents[k - 1].size
            if m.size != expect:
                raise ModelError(f"level {k} has {expect} nodes but {m.size} masses")
            if not np.all(np.isfinite(m)) or np.any(m <= 0):
                bad = int(np.argmin(np.where(np.isfinite(m), m, -np.inf)))
                raise ModelError(f"node {bad} at level {k} has mass {m[bad]!r}; masses must be > 0")
            if abs(m.sum() - 1.0) > PROB_TOL:
                raise ModelError(f"masses at level {k} sum to {m.sum()!r}")
        for arr in parents:
            arr.setflags(write=False)
        for m in masses:
            m.setflags(write=False)
        object.__setattr__(self, "parents", tuple(parents))
        object.__setattr__(self, "masses", masses)

    @classmethod
    def from_masses(cls, parents, masses) -> "TreeModel":
        return cls(tuple(parents), tuple(masses))

    @classmethod
    def from_dynamics(cls, parents, mu0, g, kernels) -> "TreeModel":
        """Evolve ``mu0`` under ``(g, K)`` and check the result is a tree model."""
        if len(g) != len(parents) or len(kernels) != len(parents):
            raise ModelError("need one potential and one kernel per tree step")
        fk = FkModel(mu0=mu0, g=g, kernels=kernels)
        mus, _ = evolve_measures(fk)
        tree = cls(tuple(parents), tuple(mus))
        tree.check_dynamics(g, kernels)
        return tree

    def check_dynamics(self, g, kernels, tol: float = AGREE_TOL):
        """Raise ``ModelError`` unless ``(g, kernels)`` induce exactly these masses."""
        induced = self.induce_fk_model()
        for k, (gk, K) in enumerate(zip(g, kernels)):
            K = np.asarray(K, dtype=np.float64)
            if K.shape != induced.kernels[k].shape:
                raise ModelError(f"kernel K_{k + 1} has shape {K.shape}, expected {induced.kernels[k].shape}")
            off = K[np.arange(K.shape[0])[:, None] != self.parents[k][None, :]]
            if np.any(np.abs(off) > tol):
                raise ModelError(f"kernel K_{k + 1} puts mass outside successor sets")
            if np.max(np.abs(K - induced.kernels[k])) > tol:
                raise ModelError(f"kernel K_{k + 1} does not split mass proportionally to level-{k + 1} masses")
            gk = np.asarray(gk, dtype=np.float64)
            gn = gk / inner(self.masses[k], gk)
            if np.max(np.abs(gn - induced.g[k]) / induced.g[k]) > tol:
                raise ModelError(f"potential g_{k} disagrees with the mass shift between levels {k} and {k + 1}")

    @property
    def n(self) -> int:
        return len(self.parents)

    @cached_property
    def sizes(self) -> tuple:
        return tuple(m.size for m in self.masses)

    def ancestors(self, l: int, j: int) -> np.ndarray:
        """Map from level ``l`` nodes to their level ``j`` ancestor (``j <= l``)."""
        if j > l:
            raise LevelOrderError(f"ancestor level {j} above level {l}")
        idx = np.arange(self.sizes[l])
        for k in range(l, j, -1):
            idx = self.parents[k - 1][idx]
        return idx

    def successors(self, j: int, x: int, l: int) -> np.ndarray:
        return np.flatnonzero(self.ancestors(l, j) == x)

    def induce_fk_model(self) -> FkModel:
        return _induce(self)


def _induce(tree: TreeModel) -> FkModel:
    g, kernels = [], []
    for k in range(tree.n):
        proj = project_measure(tree, k + 1, k)
        g.append(proj / tree.masses[k])
        p = tree.parents[k]
        K = np.zeros((tree.sizes[k], tree.sizes[k + 1]))
        K[p, np.arange(p.size)] = tree.masses[k + 1] / proj[p]
        K /= K.sum(axis=1, keepdims=True)
        kernels.append(K)
    return FkModel(mu0=tree.masses[0], g=g, kernels=kernels)


def induce_fk_model(tree: TreeModel) -> FkModel:
    """The tree as a general sequential model."""
    return tree.induce_fk_model()


def project_measure(tree: TreeModel, from_level: int, to_level: int, measure=None) -> np.ndarray:
    """``mu^{->j}``: mass of each level-``j`` node's descendants at level ``l``."""
    if to_level >= from_level:
        raise LevelOrderError(f"projection needs to_level < from_level, got {to_level} >= {from_level}")
    mu = tree.masses[from_level] if measure is None else np.asarray(measure, dtype=np.float64)
    anc = tree.ancestors(from_level, to_level)
    return np.bincount(anc, weights=mu, minlength=tree.sizes[to_level])


def tree_propagator(tree: TreeModel, j: int, k: int, f) -> np.ndarray:
    """``q_{j,k}(f)(x) = mu_k(f 1_{s_k(x)}) / mu_j(x)``."""
    if j >= k:
        raise LevelOrderError(f"tree propagator needs j < k, got j={j}, k={k}")
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (tree.sizes[k],):
        raise ValueError(f"function has shape {f.shape}, level {k} has {tree.sizes[k]} nodes")
    return project_measure(tree, k, j, tree.masses[k] * f) / tree.masses[j]


@dataclass(frozen=True)
class TreeConstants:
    """``d``, ``d_tilde`` and ``v`` indexed ``[j, k]``; cells with ``j > k`` are NaN."""

    d: np.ndarray
    d_tilde: np.ndarray
    v: np.ndarray

    @property
    def n(self) -> int:
        return self.d.shape[0] - 1

    def v_hat_sqrt_d(self) -> np.ndarray:
        """``sum_{j<=k} sqrt(d_{j,k})`` per ``k``."""
        return np.array([np.sum(np.sqrt(self.d[:k + 1, k])) for k in range(self.n + 1)])

    def v_hat_d_tilde(self) -> np.ndarray:
        """The sharper ``sum_{j<=k} d_tilde_{j,k}`` per ``k``."""
        return np.array([np.sum(self.d_tilde[:k + 1, k]) for k in range(self.n + 1)])


def compute_tree_constants(tree: TreeModel) -> TreeConstants:
    size = tree.n + 1
    d = np.full((size, size), np.nan)
    dt = np.full((size, size), np.nan)
    v = np.full((size, size), np.nan)
    for k in range(size):
        d[k, k] = dt[k, k] = 1.0
        v[k, k] = 0.0
        for j in range(k):
            proj = project_measure(tree, k, j)
            ratio = proj / tree.masses[j]
            d[j, k] = float(np.max(ratio)) ** 2
            dt[j, k] = inner(proj, ratio)
            v[j, k] = inner(proj, ratio - 1.0)
    return TreeConstants(d=d, d_tilde=dt, v=v)


def random_tree(rng: np.random.Generator, levels: int, max_nodes: int = 8) -> TreeModel:
    """Random tree with ``levels`` levels (``n = levels - 1``) and ``<= max_nodes`` nodes per level."""
    sizes = [int(rng.integers(1, max_nodes + 1))]
    parents = []
    for _ in range(1, levels):
        m = int(rng.integers(sizes[-1], max_nodes + 1))
        p = np.concatenate([np.arange(sizes[-1]), rng.integers(0, sizes[-1], m - sizes[-1])])
        parents.append(rng.permutation(p))
        sizes.append(m)
    masses = []
    for s in sizes:
        w = rng.gamma(1.0, size=s) + 1e-3
        masses.append(w / w.sum())
    return TreeModel.from_masses(parents, masses)
