"""The staircase tree with parameter theta and the small two-branch alpha tree.

Level ``k`` has nodes ``0..k``. Node ``k`` (the top) splits evenly into
``k`` and ``k+1``; every other node has a single child. The potential is 1
except ``2 theta`` at the top, so

    mu_k(j) = theta^(j+1) / Z_k  (j < k),   mu_k(k) = theta^k / Z_k,
    Z_k = theta^k + sum_{j<k} theta^(j+1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bounds import BoundReport, StabilityConstants, VarianceProfile, assemble_thm2, Kind
from .errors import DomainError
from .tree import TreeModel, compute_tree_constants


@dataclass(frozen=True)
class ThetaExample:
    n: int
    theta: float

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"n must be >= 1, got {self.n}")
        if not self.theta > 0:
            raise DomainError(f"theta must be > 0, got {self.theta}")


def staircase_parents(n: int) -> list:
    return [np.append(np.arange(k + 1), k) for k in range(n)]


def build(n: int, theta: float) -> TreeModel:
    """Tree evolved from the point mass at ``0_0`` by the staircase potentials and kernels."""
    ThetaExample(n, theta)
    g, kernels = [], []
    for k in range(n):
        gk = np.ones(k + 1)
        gk[k] = 2.0 * theta
        K = np.zeros((k + 1, k + 2))
        K[np.arange(k), np.arange(k)] = 1.0
        K[k, k] = K[k, k + 1] = 0.5
        g.append(gk)
        kernels.append(K)
    return TreeModel.from_dynamics(staircase_parents(n), np.ones(1), g, kernels)


def z_sum(k: int, theta: float) -> float:
    return theta ** k + sum(theta ** (j + 1) for j in range(k))


def z_closed(k: int, theta: float) -> float:
    if k < 0:
        raise DomainError("k must be >= 0")
    if theta == 1:
        return float(k + 1)
    return theta ** k + theta / (theta - 1.0) * (theta ** k - 1.0)


def masses_closed(k: int, theta: float) -> np.ndarray:
    z = z_closed(k, theta)
    m = theta ** (np.arange(k + 1) + 1.0) / z
    m[k] = theta ** k / z
    return m


@dataclass(frozen=True)
class QNorm:
    values: np.ndarray
    top: float
    max_value: float
    max_at_top: bool


def q_norm(k: int, l: int, theta: float) -> QNorm:
    """``q_{k,l}(1)`` in closed form: ``Z_k/Z_l`` off the top, ``Z_k Z_{l-k} / Z_l`` at the top."""
    if not k < l:
        raise DomainError(f"need k < l, got k={k}, l={l}")
    zk, zl = z_closed(k, theta), z_closed(l, theta)
    vals = np.full(k + 1, zk / zl)
    vals[k] = zk * z_closed(l - k, theta) / zl
    mx = float(vals.max())
    return QNorm(values=vals, top=float(vals[k]), max_value=mx, max_at_top=bool(vals[k] >= mx))


def q_norm_max(k: int, l: int, theta: float) -> float:
    """Max of ``q_{k,l}(1)``, which sits at the top node when ``theta >= 1``."""
    if theta < 1:
        raise DomainError("the top-node maximum is only established for theta >= 1")
    return q_norm(k, l, theta).top


def rho(theta: float):
    """``2 + 1/(theta - 1)``; exact when given a Fraction or int."""
    if theta <= 1:
        raise DomainError("rho needs theta > 1")
    if isinstance(theta, (int, Fraction)):
        return Fraction(2) + 1 / (Fraction(theta) - 1)
    return 2.0 + 1.0 / (theta - 1.0)


@dataclass(frozen=True)
class QNormBounds:
    bounds: tuple
    minimum: float


def q_norm_upper_bounds(k: int, l: int, theta: float) -> QNormBounds:
    """Four upper bounds on ``max q_{k,l}(1)``; inapplicable ones are ``inf``."""
    if not k < l:
        raise DomainError(f"need k < l, got k={k}, l={l}")
    inf = math.inf
    b = [inf, inf, inf, inf]
    if theta > 1:
        r = float(rho(theta))
        b[0] = r * r / 2.0
        b[1] = r * r / (l + 1) * theta ** (l - 1)
    if theta >= 1:
        b[2] = (l + 2) ** 2 / 8.0
        b[3] = (l + 2) / 2.0 * theta ** (l - 1)
    return QNormBounds(bounds=tuple(b), minimum=min(b))


@dataclass(frozen=True)
class BranchBound:
    """``E|nu_n(f) - mu_n(f)|^2 <= |f|^2 (a / N + b / N^2)`` once ``N > threshold``.

    ``coef_a`` and ``coef_b`` are the bare constants in front of the powers of
    ``n+1`` (``n+2`` for the ``theta >= 1`` branch).
    """

    name: str
    coef_a: object
    coef_b: object
    a: object
    b: object
    threshold: float
    applicable: bool
    value: float | None


def branch_theta_gt1(n: int, theta, N: int, f_norm: float = 1.0) -> BranchBound:
    """Constants ``d = rho^4 / 4``: ``a = rho^2 (n+1) / 2``, ``b = rho^6 (n+1)^2``."""
    if not theta > 1:
        return BranchBound("theta>1", None, None, None, None, math.inf, False, None)
    r = rho(theta)
    ca, cb = r ** 2 / 2, r ** 6
    a = ca * (n + 1)
    b = cb * (n + 1) ** 2
    thr = float(r ** 4 * (n + 1))
    ok = N > thr
    val = f_norm ** 2 * (float(a) / N + float(b) / N ** 2) if ok else None
    return BranchBound("theta>1", ca, cb, a, b, thr, ok, val)


def branch_theta_ge1(n: int, theta, N: int, f_norm: float = 1.0) -> BranchBound:
    """Constants ``d = (l+2)^4 / 64``: ``a = (n+2)^3 / 8``, ``b = (n+2)^8 / 128``."""
    if not theta >= 1:
        return BranchBound("theta>=1", None, None, None, None, math.inf, False, None)
    ca, cb = Fraction(1, 8), Fraction(1, 128)
    a = ca * (n + 2) ** 3
    b = cb * (n + 2) ** 8
    thr = (n + 2) ** 5 / 16.0
    ok = N > thr
    val = f_norm ** 2 * (float(a) / N + float(b) / N ** 2) if ok else None
    return BranchBound("theta>=1", ca, cb, a, b, thr, ok, val)


def theta2_corollary(n: int, N: int, f_norm: float = 1.0, theta=2) -> BranchBound:
    """The ``theta >= 2`` specialisation: ``rho(2) = 3`` plugged into the ``theta > 1`` branch."""
    if theta < 2:
        return BranchBound("theta>=2", None, None, None, None, math.inf, False, None)
    br = branch_theta_gt1(n, 2, N, f_norm)
    return BranchBound("theta>=2", br.coef_a, br.coef_b, br.a, br.b, br.threshold, br.applicable, br.value)


@dataclass
class ThetaBoundResult:
    n: int
    theta: float
    N: int
    generic: BoundReport
    branches: tuple

    @property
    def generic_mse_bound(self) -> float | None:
        return None if self.generic.total is None else self.generic.total / self.N


def error_bound(n: int, theta: float, N: int, f_norm: float = 1.0) -> ThetaBoundResult:
    """Closed-form branch bounds plus the generic bound from exact tree constants.

    The generic report uses ``d_{j,k} = max(q_{j,k}(1))^2`` and
    ``v_hat_k = sum_j sqrt(d_{j,k})``; it never exceeds an applicable branch.
    """
    tree = build(n, theta)
    tc = compute_tree_constants(tree)
    consts = StabilityConstants(Kind.D_KIND, tc.d, norm_label="max")
    vp = VarianceProfile(v_hat=tc.v_hat_sqrt_d())
    generic = assemble_thm2(consts, vp, f_norm, N)
    th = Fraction(theta) if float(theta).is_integer() else theta
    branches = (branch_theta_gt1(n, th, N, f_norm), branch_theta_ge1(n, th, N, f_norm),
                theta2_corollary(n, N, f_norm, theta))
    return ThetaBoundResult(n=n, theta=theta, N=N, generic=generic, branches=branches)


def assvar_theta1(n: int) -> float:
    """Asymptotic variance of ``nu_n(1)`` at ``theta = 1``: ``n^2 (n-1) / (12 (n+1))``."""
    return n * n * (n - 1) / (12.0 * (n + 1))


# two-branch example -------------------------------------------------------

ALPHA_VARIANTS = ("original", "prime")


def build_alpha(alpha: float, variant: str = "original") -> TreeModel:
    """Four levels: ``mu_0 = (1)``, ``mu_1 = (1/2, 1/2)`` (``(alpha, 1-alpha)`` for
    the ``prime`` variant), ``mu_2 = (alpha, 1-alpha)``, ``mu_3 = (1/2, 1/2)``."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if variant not in ALPHA_VARIANTS:
        raise DomainError(f"variant must be one of {ALPHA_VARIANTS}")
    mu1 = [0.5, 0.5] if variant == "original" else [alpha, 1 - alpha]
    parents = [np.array([0, 0]), np.array([0, 1]), np.array([0, 1])]
    masses = [np.array([1.0]), np.array(mu1), np.array([alpha, 1 - alpha]), np.array([0.5, 0.5])]
    return TreeModel.from_masses(parents, masses)


def alpha_assvar(alpha: float, variant: str = "original") -> float:
    """Asymptotic variance for ``f = 1_{0_3}``."""
    return (1 / alpha + 1) / 4 if variant == "original" else (2 / alpha - 1) / 4


def alpha_sis_mse(alpha: float, N: int, variant: str = "original") -> float:
    """SIS error for ``f = 1_{0_3}``."""
    return 1 / (4 * N) if variant == "original" else (1 / alpha - 1) / (4 * N)
