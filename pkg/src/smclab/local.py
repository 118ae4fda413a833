"""Stability constants under local mixing on a common finite state space.

A :class:`PartitionHierarchy` assigns every state a block at each level,
with blocks refining from one level to the next. A :class:`LocalModel`
pairs it with a sequential model whose kernels never leave a block of the
current level and are stationary for the current target.

The chain of constants runs

    m, M, A  ->  gamma  ->  (alpha, beta), rho  ->  theta_j(p, q)  ->  delta(q)
      ->  c_tilde_{j,k}(p, q) = A_{j,k} theta_{j+1}(p, q) gamma^{(p-1)/p} gamma^{(q-1)/q} delta(q)
      ->  c_{j,k}(p) = max(c_tilde(p, p/2), c_tilde(2p, p)^2)

and feeds :func:`smclab.bounds.assemble_thm1`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .bounds import Kind, StabilityConstants, VarianceProfile
from .errors import (InapplicableError, ModelError, NotMixingError, ZeroMassError)
from .fk import FkModel, inner

DISC_TOL = 1e-14
STAT_TOL = 1e-12
SLACK = 1e-9
MAX_BLOCK = 20


# --------------------------------------------------------------------------
# hierarchy and model


@dataclass(frozen=True, eq=False)
class PartitionHierarchy:
    """``blocks[k][x]`` is the level-``k`` block containing state ``x``.

    Block ids at each level must be ``0..|I_k|-1``. Each block must lie
    inside a single block of the previous level.
    """

    blocks: tuple

    def __post_init__(self):
        blocks = []
        for k, b in enumerate(self.blocks):
            b = np.asarray(b)
            if b.ndim != 1 or not np.issubdtype(b.dtype, np.integer):
                raise ModelError(f"level {k}: block assignment must be an integer vector")
            b = b.astype(np.int64)
            used = np.unique(b)
            if used[0] != 0 or used[-1] != used.size - 1:
                raise ModelError(f"level {k}: block ids must be 0..{used.size - 1} without gaps")
            if blocks and b.size != blocks[0].size:
                raise ModelError(f"level {k} assigns {b.size} states, level 0 assigns {blocks[0].size}")
            b.setflags(write=False)
            blocks.append(b)
        if not blocks:
            raise ModelError("hierarchy needs at least one level")
        object.__setattr__(self, "blocks", tuple(blocks))
        parents = [None]
        for k in range(1, len(blocks)):
            size = self.n_blocks(k)
            par = np.full(size, -1, dtype=np.int64)
            for j in range(size):
                up = np.unique(blocks[k - 1][blocks[k] == j])
                if up.size != 1:
                    raise ModelError(f"block {j} at level {k} straddles blocks {up.tolist()} of level {k - 1}")
                par[j] = up[0]
            parents.append(par)
        object.__setattr__(self, "_parents", tuple(parents))

    @property
    def n(self) -> int:
        return len(self.blocks) - 1

    @property
    def size(self) -> int:
        return self.blocks[0].size

    def n_blocks(self, k: int) -> int:
        return int(self.blocks[k].max()) + 1

    def parent(self, k: int) -> np.ndarray:
        """Map ``I_k -> I_{k-1}``."""
        return self._parents[k]

    def ancestor(self, l: int, j: int) -> np.ndarray:
        """Map ``I_l -> I_j`` for ``j <= l``."""
        idx = np.arange(self.n_blocks(l))
        for k in range(l, j, -1):
            idx = self._parents[k][idx]
        return idx

    def members(self, k: int, j: int) -> np.ndarray:
        return np.flatnonzero(self.blocks[k] == j)

    def successors(self, j: int, i: int, k: int) -> np.ndarray:
        """Level-``k`` blocks inside block ``i`` of level ``j``."""
        return np.flatnonzero(self.ancestor(k, j) == i)


@dataclass(frozen=True, eq=False)
class LocalModel:
    base: FkModel
    hierarchy: PartitionHierarchy

    def __post_init__(self):
        fk, h = self.base, self.hierarchy
        if len(set(fk.sizes)) != 1:
            raise ModelError("all levels must share one state space")
        if h.n != fk.n:
            raise ModelError(f"hierarchy has {h.n + 1} levels, model has {fk.n + 1}")
        if h.size != fk.sizes[0]:
            raise ModelError(f"hierarchy covers {h.size} states, model has {fk.sizes[0]}")
        for k in range(h.n + 1):
            mass = np.bincount(h.blocks[k], weights=fk.mu0, minlength=h.n_blocks(k))
            if np.any(mass <= 0):
                raise ZeroMassError(f"block {int(np.argmin(mass))} at level {k} has zero initial mass")
        for k in range(1, fk.n + 1):
            K = fk.kernels[k - 1]
            b = h.blocks[k]
            leak = np.abs(K[b[:, None] != b[None, :]])
            if leak.size and leak.max() >= DISC_TOL:
                raise ModelError(f"kernel K_{k} moves mass between blocks of level {k} (max {leak.max():.3g})")
            mu = fk.measures[k]
            drift = np.max(np.abs(mu @ K - mu))
            if drift > STAT_TOL:
                raise ModelError(f"kernel K_{k} is not stationary for mu_{k} (drift {drift:.3g})")

    @property
    def n(self) -> int:
        return self.base.n

    @cached_property
    def block_masses(self):
        """``block_masses[k][l]``: ``mu_k`` mass of every level-``l`` block."""
        h = self.hierarchy
        return [[np.bincount(h.blocks[l], weights=mu, minlength=h.n_blocks(l)) for l in range(h.n + 1)]
                for mu in self.base.measures]


def restricted_measure(model: LocalModel, k: int, j: int, level: int | None = None) -> np.ndarray:
    """``mu_{k,j}``: ``mu_k`` conditioned on block ``j`` of ``level`` (default ``k``)."""
    level = k if level is None else level
    F = model.hierarchy.blocks[level] == j
    mu = model.base.measures[k]
    z = float(np.sum(mu[F]))
    if not z > 0:
        raise ZeroMassError(f"mu_{k} gives no mass to block {j} of level {level}")
    return np.where(F, mu, 0.0) / z


def local_norm(model: LocalModel, k: int, j: int, p: float, f, level: int | None = None) -> float:
    """``mu_{k,j}(|f|^p)^(1/p)``; ``p = inf`` gives the max over the block."""
    if p < 1:
        raise ValueError("p must be >= 1")
    w = restricted_measure(model, k, j, level)
    a = np.abs(np.asarray(f, dtype=np.float64))
    if math.isinf(p):
        return float(np.max(a[w > 0]))
    return _lp(w, a, p)


def _lp(w, a, p):
    s = float(np.max(a[w > 0])) if np.any(w > 0) else 0.0
    if s == 0.0:
        return 0.0
    # scale out the max so high powers stay finite
    return s * inner(w, (a / s) ** p) ** (1.0 / p)


def block_norms(model: LocalModel, k: int, p: float, f, level: int | None = None) -> np.ndarray:
    """Vector of ``|f|_{k,j,p}`` over blocks ``j`` of ``level`` (default ``k``)."""
    level = k if level is None else level
    return np.array([local_norm(model, k, j, p, f, level) for j in range(model.hierarchy.n_blocks(level))])


def level_norm(model: LocalModel, k: int, p: float, f) -> float:
    """``|f|_{k,p} = max_j |f|_{k,j,p}`` over blocks of level ``k``."""
    return float(np.max(block_norms(model, k, p, f)))


# --------------------------------------------------------------------------
# mass-shift constants


@dataclass(frozen=True)
class MassConstants:
    """``m[r][i]`` for ``i in I_r``; ``M[(j, k)]`` over ``I_j``; ``A[j, k]``."""

    m: tuple
    M: dict
    A: np.ndarray
    A_invariant: np.ndarray


def mass_ratios(model: LocalModel) -> tuple:
    bm = model.block_masses
    return tuple(bm[r + 1][r] / bm[r][r] for r in range(model.n))


def mass_constants(model: LocalModel) -> MassConstants:
    """``M_{j,k}`` via ``M_{j,k}(i) = m_j(i) max_{l in s_{j+1}(i)} M_{j+1,k}(l)``."""
    h = model.hierarchy
    n = model.n
    m = mass_ratios(model)
    M = {}
    A = np.full((n + 1, n + 1), np.nan)
    Ainv = np.full((n + 1, n + 1), np.nan)
    bm = model.block_masses
    for k in range(n + 1):
        M[(k, k)] = np.ones(h.n_blocks(k))
        for j in range(k - 1, -1, -1):
            nxt = M[(j + 1, k)]
            best = np.full(h.n_blocks(j), -np.inf)
            np.maximum.at(best, h.parent(j + 1), nxt)
            M[(j, k)] = m[j] * best
            A[j, k] = float(M[(j, k)].max())
            Ainv[j, k] = float(np.max(bm[k][j] / bm[j][j]))
    return MassConstants(m=m, M=M, A=A, A_invariant=Ainv)


def mass_constants_direct(model: LocalModel) -> dict:
    """``M_{j,k}(i) = max_{l in s_k(i)} prod_{r=j}^{k-1} m_r(p_r(l))``, product taken right to left."""
    h = model.hierarchy
    m = mass_ratios(model)
    out = {}
    for k in range(model.n + 1):
        for j in range(k):
            prod = np.ones(h.n_blocks(k))
            for r in range(k - 1, j - 1, -1):
                prod = m[r][h.ancestor(k, r)] * prod
            best = np.full(h.n_blocks(j), -np.inf)
            np.maximum.at(best, h.ancestor(k, j), prod)
            out[(j, k)] = best
    return out


# --------------------------------------------------------------------------
# density bound and mixing


def restricted_density(model: LocalModel, k: int, j: int, level: int | None = None) -> np.ndarray:
    """``g_bar_{k,k+1,j} = g_bar_k 1_{F_j} / m_k(j)``."""
    level = k if level is None else level
    bm = model.block_masses
    ratio = bm[k + 1][level][j] / bm[k][level][j]
    F = model.hierarchy.blocks[level] == j
    return np.where(F, model.base.g_bar[k], 0.0) / ratio


def check_density_bound(model: LocalModel) -> float:
    """Smallest ``gamma >= 1`` with ``g_bar_{k,k+1,j} <= gamma`` on every block of level ``k``."""
    gamma = 1.0
    for k in range(model.n):
        for j in range(model.hierarchy.n_blocks(k)):
            gamma = max(gamma, float(np.max(restricted_density(model, k, j))))
    return gamma


def _block_qhat(model: LocalModel, k: int, i: int):
    """Matrix of ``f -> K_k(g_bar_k f)`` on block ``i`` of level ``k``."""
    F = model.hierarchy.members(k, i)
    K = model.base.kernels[k - 1][np.ix_(F, F)]
    return F, K * model.base.g_bar[k][F][None, :]


def _sym_top_eig(M) -> float:
    return float(np.linalg.eigvalsh((M + M.T) / 2.0)[-1])


@dataclass(frozen=True)
class MixingReport:
    alpha_min: dict
    rho: float
    rho_blocks: dict
    sufficient_pair: tuple
    sufficient_pair_ok: bool
    sufficient_pair_margin: float


def alpha_min(model: LocalModel, beta: float) -> float:
    """Smallest ``alpha`` with ``|qhat f|_{k,i,2}^2 <= m_k(i)^2 (alpha |f|_{k+1,i,2}^2 + beta mu_{k+1,i}(f)^2)``
    for all ``1 <= k < n``, ``i in I_k`` (0 when there is no such ``k``)."""
    if not 0 <= beta <= 1:
        raise ValueError("beta must lie in [0, 1]")
    best = 0.0
    m = mass_ratios(model)
    for k in range(1, model.n):
        for i in range(model.hierarchy.n_blocks(k)):
            F, B = _block_qhat(model, k, i)
            w = restricted_measure(model, k, i)[F]
            v = restricted_measure(model, k + 1, i, level=k)[F]
            lhs = B.T @ (w[:, None] * B)
            Q = lhs / m[k][i] ** 2 - beta * np.outer(v, v)
            s = 1.0 / np.sqrt(v)
            val = _sym_top_eig(s[:, None] * Q * s[None, :])
            if not np.isfinite(val):
                raise NotMixingError(f"mixing form at level {k}, block {i} is not finite")
            best = max(best, val)
    return max(best, 0.0)


def contraction_rho(model: LocalModel):
    """Largest ``rho`` with ``mu_{k,i}(K_k(f - mu_{k,i} f)^2) <= (1 - rho) Var_{mu_{k,i}}(f)``."""
    rhos = {}
    for k in range(1, model.n):
        for i in range(model.hierarchy.n_blocks(k)):
            F = model.hierarchy.members(k, i)
            pi = restricted_measure(model, k, i)[F]
            K = model.base.kernels[k - 1][np.ix_(F, F)]
            if F.size == 1:
                rhos[(k, i)] = 1.0
                continue
            r = np.sqrt(pi)
            S = r[:, None] * K / r[None, :]
            P = np.eye(F.size) - np.outer(r, r)
            sv = np.linalg.svd(S @ P, compute_uv=False)[0]
            rhos[(k, i)] = min(max(1.0 - sv * sv, 0.0), 1.0)
    rho = min(rhos.values()) if rhos else 1.0
    return rho, rhos


def check_local_mixing(model: LocalModel, beta_grid=(0.0, 0.5, 1.0)) -> MixingReport:
    gamma = check_density_bound(model)
    amin = {float(b): alpha_min(model, b) for b in beta_grid}
    rho, rhos = contraction_rho(model)
    pair = ((1.0 - rho) * gamma, rho)
    need = alpha_min(model, rho)
    margin = pair[0] - need
    return MixingReport(alpha_min=amin, rho=rho, rho_blocks=rhos, sufficient_pair=pair,
                        sufficient_pair_ok=bool(margin >= -1e-12), sufficient_pair_margin=margin)


# --------------------------------------------------------------------------
# hyperboundedness


@dataclass(frozen=True)
class HyperResult:
    value: float
    certified: bool
    starts: int
    spread: float


def _psi(v, r):
    return np.sign(v) * np.abs(v) ** (r - 1.0)


def _ratio(B, x, p, q):
    nx = np.linalg.norm(x, q)
    return 0.0 if nx == 0 else float(np.linalg.norm(B @ x, p) / nx)


def operator_norm_q_to_p(B, p: float, q: float, rng=None, restarts: int = 20, iters: int = 5000,
                         tol: float = 1e-14) -> HyperResult:
    """``max |Bx|_p / |x|_q`` for a nonnegative matrix by the nonlinear power method with restarts.

    Starts: every coordinate vector, the constant vector and ``restarts``
    random positive vectors. ``certified`` means the best value was reached
    by at least two starts within ``1e-6`` relative.
    """
    B = np.asarray(B, dtype=np.float64)
    n = B.shape[1]
    if q == 1:
        val = float(np.max(np.linalg.norm(B, p, axis=0)))
        return HyperResult(val, True, n, 0.0)
    rng = np.random.default_rng(0) if rng is None else rng
    qs = q / (q - 1.0)
    starts = [np.eye(n)[i] for i in range(n)] + [np.ones(n)] + [rng.random(n) + 1e-3 for _ in range(restarts)]
    vals = []
    for x in starts:
        x = x / np.linalg.norm(x, q)
        prev = _ratio(B, x, p, q)
        for _ in range(iters):
            y = B @ x
            z = B.T @ _psi(y, p)
            if not np.any(z):
                break
            x_new = _psi(z, qs)
            x_new = x_new / np.linalg.norm(x_new, q)
            cur = _ratio(B, x_new, p, q)
            x = x_new
            if abs(cur - prev) <= tol * max(cur, 1.0):
                prev = cur
                break
            prev = cur
        vals.append(max(prev, _ratio(B, x, p, q)))
    vals = np.array(vals)
    best = float(vals.max())
    close = np.sum(vals >= best * (1 - 1e-6))
    return HyperResult(best, bool(close >= 2), len(starts), float(best - np.median(vals)))


def check_hyperbound(model: LocalModel, p: float, q: float, restarts: int = 20, seed: int = 0) -> dict:
    """``theta_j(p, q)`` for ``j = 1..n``: max over blocks of ``|K_j|`` from local ``L_q`` to local ``L_p``."""
    if p < 1 or q < 1:
        raise ValueError("p and q must be >= 1")
    rng = np.random.default_rng(seed)
    out = {}
    for j in range(1, model.n + 1):
        best = HyperResult(0.0, True, 0, 0.0)
        for i in range(model.hierarchy.n_blocks(j)):
            F = model.hierarchy.members(j, i)
            if F.size > MAX_BLOCK:
                raise ValueError(f"block {i} at level {j} has {F.size} states; at most {MAX_BLOCK} supported")
            pi = restricted_measure(model, j, i)[F]
            K = model.base.kernels[j - 1][np.ix_(F, F)]
            B = (pi ** (1.0 / p))[:, None] * K * (pi ** (-1.0 / q))[None, :]
            res = operator_norm_q_to_p(B, p, q, rng=rng, restarts=restarts)
            if res.value > best.value:
                best = HyperResult(res.value, best.certified and res.certified, res.starts, res.spread)
            else:
                best = HyperResult(best.value, best.certified and res.certified, best.starts, best.spread)
        out[j] = best
    return out


# --------------------------------------------------------------------------
# delta and the stability chain


def delta_dyadic(r: int, alpha: float, gamma: float) -> float:
    """``delta(2^r) = prod_{j=1}^r gamma^(1 - 2^-(j-1)) / (1 - alpha gamma^(2^j - 2))^(2^-j)``."""
    out = 1.0
    for j in range(1, r + 1):
        base = 1.0 - alpha * gamma ** (2 ** j - 2)
        if not base > 0:
            raise InapplicableError(f"alpha*gamma^{2 ** j - 2} = {alpha * gamma ** (2 ** j - 2):.6g} >= 1",
                                    condition=f"alpha*gamma^{2 ** j - 2} < 1")
        out *= gamma ** (1.0 - 2.0 ** -(j - 1)) / base ** (2.0 ** -j)
    return out


def dyadic_cover(q: float) -> int:
    """``r`` with ``q in [2^r, 2^(r+1))``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    m, e = math.frexp(q)
    return e - 1


def delta_for(q: float, alpha: float, gamma: float) -> float:
    """``delta(q)``: 1 for ``q = 1``, else ``delta(2^(r+1))`` with ``q in [2^r, 2^(r+1))``."""
    if q == 1:
        return 1.0
    return delta_dyadic(dyadic_cover(q) + 1, alpha, gamma)


def chain_condition(q: float, alpha: float, gamma: float) -> tuple:
    """``(holds, exponent)`` for ``alpha gamma^(2^(r+1) - 2) < 1``."""
    if q == 1:
        return True, 0
    e = 2 ** (dyadic_cover(q) + 1) - 2
    return bool(alpha * gamma ** e < 1), e


@dataclass
class StabilityChain:
    p: float
    alpha: float
    beta: float
    gamma: float
    mass: MassConstants
    theta: dict
    delta: dict
    c_tilde: dict
    c: np.ndarray
    defects: np.ndarray
    v_hat: np.ndarray
    certified: bool = True
    notes: list = field(default_factory=list)

    def constants(self) -> StabilityConstants:
        return StabilityConstants(Kind.C_KIND, self.c, norm_label=f"local-L{self.p:g}")

    def variance_profile(self, per_level=None) -> VarianceProfile:
        return VarianceProfile(v_hat=self.v_hat, per_level=per_level)


def _c_tilde(mass, theta, gamma, dlt, p, q, n):
    out = np.full((n + 1, n + 1), np.nan)
    for k in range(1, n + 1):
        for j in range(k):
            out[j, k] = (mass.A[j, k] * theta[j + 1] * gamma ** ((p - 1.0) / p)
                         * gamma ** ((q - 1.0) / q) * dlt)
    return out


def stability_chain(model: LocalModel, p: float = 2.0, alpha: float | None = None, gamma: float | None = None,
                    beta: float = 1.0, restarts: int = 20, seed: int = 0) -> StabilityChain:
    """Constants ``c_tilde(p, p/2)``, ``c_tilde(2p, p)``, ``c_tilde(2, 2)`` and ``c(p)``.

    ``alpha`` defaults to the smallest admissible value at ``beta``; ``gamma``
    to the measured density bound. Raises ``InapplicableError`` unless
    ``alpha gamma^(2^(r+1) - 2) < 1`` for the dyadic ``r`` covering ``p``.
    """
    if p < 2:
        raise ValueError("the chain needs p >= 2")
    gamma = check_density_bound(model) if gamma is None else float(gamma)
    alpha = alpha_min(model, beta) if alpha is None else float(alpha)
    ok, e = chain_condition(p, alpha, gamma)
    if not ok:
        raise InapplicableError(f"alpha*gamma^{e} = {alpha * gamma ** e:.6g} >= 1 for p = {p:g}",
                                condition=f"alpha*gamma^{e} < 1")
    n = model.n
    mass = mass_constants(model)
    pairs = [(p, p / 2.0), (2.0 * p, p), (2.0, 2.0)]
    theta, delta, c_tilde = {}, {}, {}
    certified = True
    for (pp, qq) in pairs:
        th = check_hyperbound(model, pp, qq, restarts=restarts, seed=seed)
        certified = certified and all(r.certified for r in th.values())
        theta[(pp, qq)] = {j: r.value for j, r in th.items()}
        delta[qq] = delta_for(qq, alpha, gamma)
        c_tilde[(pp, qq)] = _c_tilde(mass, theta[(pp, qq)], gamma, delta[qq], pp, qq, n)
    c = np.fmax(c_tilde[(p, p / 2.0)], c_tilde[(2.0 * p, p)] ** 2)
    defects = np.array([level_norm(model, k, p, model.base.g_bar[k] - 1.0) for k in range(n)])
    ct22 = c_tilde[(2.0, 2.0)]
    v_hat = np.array([1.0 + float(np.nansum(ct22[:k, k])) for k in range(n + 1)])
    return StabilityChain(p=p, alpha=alpha, beta=beta, gamma=gamma, mass=mass, theta=theta, delta=delta,
                          c_tilde=c_tilde, c=c, defects=defects, v_hat=v_hat, certified=certified)


# --------------------------------------------------------------------------
# operators used by the inequality checks


def qhat(model: LocalModel, j: int, k: int, f) -> np.ndarray:
    """``qhat_{j,k}(f)`` with ``qhat_{r,r+1}(f) = K_r(g_bar_r f)`` (``1 <= j <= k``)."""
    if j < 1 or j > k:
        raise ValueError("qhat_{j,k} needs 1 <= j <= k")
    h = np.asarray(f, dtype=np.float64)
    for r in range(k - 1, j - 1, -1):
        h = model.base.kernel_apply(r, model.base.g_bar[r] * h)
    return h


def q_direct(model: LocalModel, j: int, k: int, f) -> np.ndarray:
    h = np.asarray(f, dtype=np.float64)
    for l in range(k, j, -1):
        h = model.base.g_bar[l - 1] * model.base.kernel_apply(l, h)
    return h


@dataclass
class Ledger:
    """Failed checks; ``checked`` counts all evaluated inequalities by name."""

    failures: list = field(default_factory=list)
    checked: dict = field(default_factory=dict)
    skipped: dict = field(default_factory=dict)

    def check(self, name, lhs, rhs, **where):
        self.checked[name] = self.checked.get(name, 0) + 1
        if lhs > rhs + SLACK * max(1.0, abs(rhs)):
            self.failures.append(dict(check=name, lhs=float(lhs), rhs=float(rhs), **where))

    def skip(self, name, reason):
        self.skipped.setdefault(name, reason)

    @property
    def ok(self) -> bool:
        return not self.failures


def _random_functions(rng, size, trials):
    out = []
    for t in range(trials):
        kind = t % 4
        if kind == 0:
            f = rng.standard_normal(size)
        elif kind == 1:
            f = rng.random(size)
        elif kind == 2:
            f = np.zeros(size)
            f[rng.integers(size)] = rng.standard_normal()
        else:
            f = rng.standard_exponential(size) * rng.choice([-1.0, 1.0], size)
        out.append(f)
    return out


def verify_propagator_inequalities(model: LocalModel, chain: StabilityChain | None = None, p_list=(1, 2, 4),
                                   trials: int = 200, seed: int = 0) -> Ledger:
    """Evaluate every stated norm inequality on random test functions.

    Checks (names as recorded in the ledger): ``itL1``, ``AhutL1``,
    ``locmixing``, ``PoincLocal``, ``L2it1l``, ``L2it12l``, ``L2it3l``,
    ``onestepLp``, ``LpItLL``, ``jkstep``, ``hypercLI``, ``hypercLIIq``,
    ``cjninequality`` and ``varbound``.
    """
    if chain is None:
        chain = stability_chain(model, p=2.0)
    rng = np.random.default_rng(seed)
    h = model.hierarchy
    n = model.n
    E = h.size
    alpha, beta, gamma = chain.alpha, chain.beta, chain.gamma
    mass = chain.mass
    m = mass.m
    rho, _ = contraction_rho(model)
    led = Ledger()
    fs = _random_functions(rng, E, trials)
    bm = model.block_masses

    def bn(k, pp, f, level):
        return block_norms(model, k, pp, f, level)

    def succ_max(vals_k, j, i, k):
        return float(np.max(vals_k[h.successors(j, i, k)]))

    dyadic = {}
    for pp in sorted(set(p_list) | {2 * x for x in p_list}):
        r = dyadic_cover(pp)
        if 2 ** r != pp:
            continue
        try:
            dyadic[pp] = delta_dyadic(r, alpha, gamma)
        except InapplicableError as exc:
            led.skip(f"LpItLL(p={pp})", str(exc))

    for f in fs:
        # one-step assumptions
        for k in range(1, n):
            for i in range(h.n_blocks(k)):
                qh = qhat(model, k, k + 1, f)
                lhs = local_norm(model, k, i, 2, qh) ** 2
                rhs = m[k][i] ** 2 * (alpha * local_norm(model, k + 1, i, 2, f, level=k) ** 2
                                      + beta * inner(restricted_measure(model, k + 1, i, level=k), f) ** 2)
                led.check("locmixing", lhs, rhs, k=k, i=i)
                w = restricted_measure(model, k, i)
                fc = f - inner(w, f)
                lhs = inner(w, model.base.kernel_apply(k, fc) ** 2)
                led.check("PoincLocal", lhs, (1 - rho) * inner(w, fc ** 2), k=k, i=i)
                for pp in p_list:
                    lhs = local_norm(model, k, i, 2 * pp, qh) ** (2 * pp)
                    nk1 = bn(k + 1, 2 * pp, f, k + 1)
                    nk1p = bn(k + 1, pp, f, k + 1)
                    rhs = m[k][i] ** (2 * pp) * gamma ** (2 * pp - 2) * (
                        alpha * succ_max(nk1, k, i, k + 1) ** (2 * pp) + beta * succ_max(nk1p, k, i, k + 1) ** (2 * pp))
                    led.check("onestepLp", lhs, rhs, k=k, i=i, p=pp)
        # iterated bounds for qhat_{j,k}, 1 <= j < k <= n
        for k in range(2, n + 1):
            n1 = bn(k, 1, f, k)
            n2 = bn(k, 2, f, k)
            means = np.array([inner(restricted_measure(model, k, l), f) for l in range(h.n_blocks(k))])
            for j in range(1, k):
                qh = qhat(model, j, k, f)
                Mjk = mass.M[(j, k)]
                for i in range(h.n_blocks(j)):
                    a1 = local_norm(model, j, i, 1, qh)
                    led.check("itL1", a1, Mjk[i] * succ_max(n1, j, i, k), j=j, k=k, i=i)
                    ratio = bm[k][j][i] / bm[j][j][i]
                    led.check("AhutL1", a1, ratio * local_norm(model, k, i, 1, f, level=j), j=j, k=k, i=i)
                    if alpha < 1:
                        a2 = local_norm(model, j, i, 2, qh)
                        rhs = Mjk[i] ** 2 * (alpha ** (k - j) * succ_max(n2, j, i, k) ** 2
                                             + beta / (1 - alpha) * succ_max(means ** 2, j, i, k))
                        led.check("L2it1l", a2 ** 2, rhs, j=j, k=k, i=i)
                        led.check("L2it12l", a2, Mjk[i] / math.sqrt(1 - alpha) * succ_max(n2, j, i, k),
                                  j=j, k=k, i=i)
                    else:
                        led.skip("L2it1l", "alpha >= 1")
                    for pp, dl in dyadic.items():
                        npk = bn(k, pp, f, k)
                        lhs = local_norm(model, j, i, pp, qh)
                        rhs = Mjk[i] * dl * succ_max(npk, j, i, k)
                        led.check("LpItLL", lhs, rhs, j=j, k=k, i=i, p=pp)
                        if pp in p_list and 2 * pp in dyadic:
                            led.check("jkstep", local_norm(model, j, i, 2 * pp, qh),
                                      Mjk[i] * dyadic[2 * pp] * succ_max(bn(k, 2 * pp, f, k), j, i, k),
                                      j=j, k=k, i=i, p=pp)
                if alpha < 1:
                    led.check("L2it3l", level_norm(model, j, 2, qh),
                              mass.A[j, k] / math.sqrt(1 - alpha) * level_norm(model, k, 2, f), j=j, k=k)
                for (pp, qq), th in chain.theta.items():
                    dq = chain.delta[qq]
                    nq = bn(k, qq, f, k)
                    for i in range(h.n_blocks(j)):
                        lhs = local_norm(model, j, i, pp, qh)
                        rhs = Mjk[i] * th[j] * gamma ** ((qq - 1) / qq) * dq * succ_max(nq, j, i, k)
                        led.check("hypercLI", lhs, rhs, j=j, k=k, i=i, p=pp, q=qq)
        # final constants for q_{j,k}, 0 <= j < k <= n
        P = chain.p
        for k in range(1, n + 1):
            fk_p = level_norm(model, k, P, f)
            fk_2 = level_norm(model, k, 2, f)
            for j in range(k):
                qf = q_direct(model, j, k, f)
                qf2 = q_direct(model, j, k, f * f)
                lhs = max(level_norm(model, j, P, qf * qf), level_norm(model, j, P, qf) ** 2,
                          level_norm(model, j, P, qf2))
                led.check("cjninequality", lhs, chain.c[j, k] * fk_p ** 2, j=j, k=k)
                var = max(inner(model.base.measures[j], qf * qf) - inner(model.base.measures[j], qf) ** 2, 0.0)
                led.check("varbound", var, chain.c_tilde[(2.0, 2.0)][j, k] * fk_2 ** 2, j=j, k=k)
                for (pp, qq), ct in chain.c_tilde.items():
                    led.check("hypercLIIq", level_norm(model, j, pp, qf), ct[j, k] * level_norm(model, k, qq, f),
                              j=j, k=k, p=pp, q=qq)
    return led
