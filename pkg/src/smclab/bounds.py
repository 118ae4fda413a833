"""Non-asymptotic error bounds assembled from stability constants.

Two flavours. With ``C_KIND`` constants ``c_{j,k}`` (``j < k``)::

    c_hat_k = sum_{j<k} c_{j,k} (2 + |q_{j,j+1}(1) - 1|_j)

and with ``D_KIND`` constants ``d_{j,k}`` (``j <= k``)::

    d_hat_k = 2 sum_{j<=k} d_{j,k}.

Either way ``N E|nu_n(f) - mu_n(f)|^2 <= sum_j Var_{mu_j}(q_{j,n} f) + |f|^2 coef_n eps_bar``
and ``eps_bar <= 2 v_bar_n / N`` once ``N`` reaches twice the running max of
the coefficient.
"""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimensionMismatch, KindMismatch, NegativeInput


class Kind(enum.Enum):
    C_KIND = "c"
    D_KIND = "d"


class VarianceSource(enum.Enum):
    EXACT_FUNCTION = "exact_function"
    SUPREMUM_BOUND = "supremum_bound"


@dataclass(frozen=True)
class StabilityConstants:
    """Upper-triangular ``(n+1) x (n+1)`` table; unused cells hold NaN.

    For ``D_KIND`` with ``norm_label == "max"`` a missing diagonal is set to 1,
    since ``|f^2| = |f|^2`` for the supremum norm.
    """

    kind: Kind
    matrix: np.ndarray
    norm_label: str = "max"

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        M = np.array(self.matrix, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionMismatch(f"constant table must be square, got {M.shape}")
        size = M.shape[0]
        if kind is Kind.D_KIND:
            diag = np.diag(M).copy()
            missing = ~np.isfinite(diag)
            if missing.any():
                if self.norm_label != "max":
                    raise ValueError("D_KIND diagonal required unless the norm is the supremum norm")
                M[np.diag_indices(size)] = np.where(missing, 1.0, diag)
        mask = self.mask(kind, size)
        vals = M[mask]
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise ValueError("stability constants must be finite and > 0 on their index range")
        M[~mask] = np.nan
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @staticmethod
    def mask(kind: Kind, size: int) -> np.ndarray:
        return np.triu(np.ones((size, size), dtype=bool), k=0 if kind is Kind.D_KIND else 1)

    @property
    def n(self) -> int:
        return self.matrix.shape[0] - 1


@dataclass(frozen=True)
class VarianceProfile:
    """Suprema ``v_hat[k]`` and, optionally, exact ``Var_{mu_j}(q_{j,n} f)`` for ``j = 0..n``."""

    v_hat: np.ndarray
    per_level: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.v_hat, dtype=np.float64)
        if np.any(v < 0):
            raise NegativeInput("variance suprema must be >= 0")
        object.__setattr__(self, "v_hat", v)
        if self.per_level is not None:
            p = np.asarray(self.per_level, dtype=np.float64)
            if np.any(p < 0):
                raise NegativeInput("variances must be >= 0")
            object.__setattr__(self, "per_level", p)

    @property
    def source(self) -> VarianceSource:
        return VarianceSource.SUPREMUM_BOUND if self.per_level is None else VarianceSource.EXACT_FUNCTION

    @property
    def v_bar(self) -> np.ndarray:
        return np.maximum.accumulate(self.v_hat)


@dataclass
class BoundReport:
    """Bound on ``N * E|nu_n(f) - mu_n(f)|^2``.

    When ``N`` is below ``N_threshold`` (and no measured ``eps_bar`` was
    supplied) the remainder is left symbolic: ``remainder_term`` and
    ``total`` are None and ``remainder_coefficient`` multiplies the unknown
    ``eps_bar``.
    """

    kind: str
    n: int
    N: int
    leading_term: float
    remainder_coefficient: float
    remainder_term: float | None
    total: float | None
    epsilon_bar_bound: float | None
    N_threshold: float
    applicable: bool
    variance_source: str
    epsilon_source: str
    coefficients: list = field(default_factory=list)
    eta_bound: float | None = None

    def as_record(self) -> dict:
        rec = asdict(self)
        rec.pop("coefficients")
        for key in ("remainder_term", "total", "epsilon_bar_bound", "eta_bound"):
            if rec[key] is None:
                rec[key] = "NOT_APPLICABLE"
        return rec


def _assemble(kind, coef, vp, f_norm, N, epsilon_bar):
    n = coef.size - 1
    if vp.v_hat.size != n + 1:
        raise DimensionMismatch(f"variance profile has {vp.v_hat.size} levels, constants have {n + 1}")
    if vp.per_level is not None and vp.per_level.size != n + 1:
        raise DimensionMismatch(f"per-level variances have {vp.per_level.size} entries, need {n + 1}")
    if N < 1:
        raise ValueError("N must be >= 1")
    if f_norm < 0:
        raise NegativeInput("norm must be >= 0")
    bar = np.maximum.accumulate(coef)
    threshold = 2.0 * float(bar[-1])
    applicable = N >= threshold
    f2 = f_norm * f_norm
    if vp.per_level is not None:
        leading = float(np.sum(vp.per_level))
    else:
        leading = float(vp.v_hat[-1]) * f2
    rem_coef = f2 * float(coef[-1])
    eps_bound = 2.0 * float(vp.v_bar[-1]) / N if applicable else None
    if epsilon_bar is not None:
        eps, eps_src = float(epsilon_bar), "measured"
    elif eps_bound is not None:
        eps, eps_src = eps_bound, "theorem"
    else:
        eps, eps_src = None, "not_applicable"
    rem = None if eps is None else rem_coef * eps
    total = None if rem is None else leading + rem
    return BoundReport(kind=kind.value, n=n, N=int(N), leading_term=leading,
                       remainder_coefficient=rem_coef, remainder_term=rem, total=total,
                       epsilon_bar_bound=eps_bound, N_threshold=threshold, applicable=applicable,
                       variance_source=vp.source.value, epsilon_source=eps_src,
                       coefficients=[float(x) for x in coef])


def c_hat(consts: StabilityConstants, one_step_norm_defect) -> np.ndarray:
    """``c_hat_k`` for ``k = 0..n``."""
    if consts.kind is not Kind.C_KIND:
        raise KindMismatch("expected C_KIND constants")
    n = consts.n
    defect = np.asarray(one_step_norm_defect, dtype=np.float64)
    if defect.size != n:
        raise DimensionMismatch(f"need {n} one-step defects, got {defect.size}")
    if np.any(defect < 0):
        raise NegativeInput("norm defects must be >= 0")
    out = np.zeros(n + 1)
    for k in range(1, n + 1):
        out[k] = float(np.sum(consts.matrix[:k, k] * (2.0 + defect[:k])))
    return out


def d_hat(consts: StabilityConstants) -> np.ndarray:
    """``d_hat_k`` for ``k = 0..n``."""
    if consts.kind is not Kind.D_KIND:
        raise KindMismatch("expected D_KIND constants")
    return np.array([2.0 * float(np.sum(consts.matrix[:k + 1, k])) for k in range(consts.n + 1)])


def assemble_thm1(consts: StabilityConstants, one_step_norm_defect, vp: VarianceProfile, f_norm: float,
                  N: int, epsilon_bar: float | None = None) -> BoundReport:
    """Bound from ``c_{j,k}`` constants (norms that need the ``q(f^2)`` term)."""
    return _assemble(Kind.C_KIND, c_hat(consts, one_step_norm_defect), vp, f_norm, N, epsilon_bar)


def assemble_thm2(consts: StabilityConstants, vp: VarianceProfile, f_norm: float, N: int,
                  epsilon_bar: float | None = None) -> BoundReport:
    """Bound from ``d_{j,k}`` constants, diagonal included."""
    return _assemble(Kind.D_KIND, d_hat(consts), vp, f_norm, N, epsilon_bar)


def eta_error_bound(var_nu_fcentered: float, var_nu_one: float, f_centered_sup: float) -> float:
    """``2 Var(nu(f - mu(f))) + 2 |f - mu(f)|_sup^2 Var(nu(1))``, bounding ``E(eta(f) - mu(f))^2``."""
    for name, v in (("var_nu_fcentered", var_nu_fcentered), ("var_nu_one", var_nu_one),
                    ("f_centered_sup", f_centered_sup)):
        if v < 0:
            raise NegativeInput(f"{name} must be >= 0, got {v}")
    return 2.0 * var_nu_fcentered + 2.0 * f_centered_sup ** 2 * var_nu_one
