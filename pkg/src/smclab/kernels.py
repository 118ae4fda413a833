"""Backend selection for the replication kernels.

The compiled extension is used when it imports; otherwise the pure-Python
twin. Setting ``SMCLAB_PURE=1`` forces the fallback. Both produce identical
bits for identical inputs.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _kernels_py

_compiled = None
if not os.environ.get("SMCLAB_PURE"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled
DEFAULT_BACKEND = "compiled" if _compiled is not None else "python"


def get_backend(name: str | None = None):
    name = name or DEFAULT_BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(BACKENDS)}") from None


@dataclass(frozen=True)
class PackedModel:
    """Flat contiguous arrays consumed by the kernels."""

    sizes: np.ndarray
    mu0_cum: np.ndarray
    gbar_flat: np.ndarray
    gbar_off: np.ndarray
    kcum_flat: np.ndarray
    kcum_off: np.ndarray

    def args(self):
        return (self.sizes, self.mu0_cum, self.gbar_flat, self.gbar_off, self.kcum_flat, self.kcum_off)


def _seq_cumsum(a, axis=-1):
    # np.cumsum is a sequential left-to-right sum, matching the C loops
    return np.ascontiguousarray(np.cumsum(np.asarray(a, dtype=np.float64), axis=axis))


def pack_model(model) -> PackedModel:
    sizes = np.asarray(model.sizes, dtype=np.int64)
    gbar = [np.asarray(x, dtype=np.float64) for x in model.g_bar]
    kcum = [_seq_cumsum(K, axis=1).ravel() for K in model.kernels]
    goff = np.zeros(len(gbar) + 1, dtype=np.int64)
    goff[1:] = np.cumsum([x.size for x in gbar])
    koff = np.zeros(len(kcum) + 1, dtype=np.int64)
    koff[1:] = np.cumsum([x.size for x in kcum])
    empty = np.zeros(1, dtype=np.float64)
    return PackedModel(
        sizes=sizes,
        mu0_cum=_seq_cumsum(model.mu0),
        gbar_flat=np.ascontiguousarray(np.concatenate(gbar)) if gbar else empty,
        gbar_off=goff,
        kcum_flat=np.ascontiguousarray(np.concatenate(kcum)) if kcum else empty,
        kcum_off=koff,
    )
