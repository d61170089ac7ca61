"""Mixed-type distances: Gower (range-normalized mean) and HEOM (L1 sum).

Numeric gaps are normalized by each feature's observed_range frozen at fit
time, so distances do not depend on whichever reference set a query happens
to use. A feature with no usable range degenerates to a 0/1 indicator, which
keeps both metrics total and preserves the per-feature [0, 1] bound.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ShapeError
from .schema import NUMERIC, FeatureSpec


def _range_widths(specs: Sequence[FeatureSpec]) -> tuple[np.ndarray, np.ndarray]:
    """(numeric_mask, widths); width 0 marks indicator-only features."""
    numeric = np.array([spec.kind == NUMERIC for spec in specs], dtype=bool)
    widths = np.zeros(len(specs))
    for j, spec in enumerate(specs):
        if spec.kind == NUMERIC and spec.observed_range is not None:
            widths[j] = spec.observed_range[1] - spec.observed_range[0]
    return numeric, widths


def _check_arity(a: np.ndarray, specs: Sequence[FeatureSpec], name: str) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape[-1] != len(specs):
        raise ShapeError(f"{name}: expected {len(specs)} features, got shape {a.shape}")
    return a


def _per_feature(a: np.ndarray, b: np.ndarray, numeric: np.ndarray, widths: np.ndarray,
                 clip: bool) -> np.ndarray:
    """Per-feature distances for rows a (n, d) against vector b (d,)."""
    gaps = np.abs(a - b)
    usable = numeric & (widths > 0)
    out = np.where(a == b, 0.0, 1.0)  # categorical / degenerate numeric
    scaled = np.divide(gaps, widths, out=np.zeros_like(gaps), where=usable)
    if clip:
        scaled = np.minimum(scaled, 1.0)
    out[:, usable] = scaled[:, usable]
    return out


def gower_matrix(A, b, specs: Sequence[FeatureSpec]) -> np.ndarray:
    """Gower distance of each row of A to b: mean per-feature distance in [0, 1]."""
    A = _check_arity(A, specs, "A")
    b = _check_arity(b, specs, "b")
    A = A.reshape(-1, len(specs))
    numeric, widths = _range_widths(specs)
    return _per_feature(A, b, numeric, widths, clip=True).mean(axis=1)


def gower_distance(a, b, specs: Sequence[FeatureSpec]) -> float:
    return float(gower_matrix(np.asarray(a, dtype=float).reshape(1, -1), b, specs)[0])


def heom_matrix(A, b, specs: Sequence[FeatureSpec]) -> np.ndarray:
    """HEOM distance of each row of A to b: L1 sum of per-feature distances."""
    A = _check_arity(A, specs, "A")
    b = _check_arity(b, specs, "b")
    A = A.reshape(-1, len(specs))
    numeric, widths = _range_widths(specs)
    return _per_feature(A, b, numeric, widths, clip=False).sum(axis=1)


def heom_distance(a, b, specs: Sequence[FeatureSpec]) -> float:
    return float(heom_matrix(np.asarray(a, dtype=float).reshape(1, -1), b, specs)[0])


def gower_cross(A, B, specs: Sequence[FeatureSpec]) -> np.ndarray:
    """Pairwise Gower distances, shape (len(A), len(B))."""
    A = _check_arity(A, specs, "A").reshape(-1, len(specs))
    B = _check_arity(B, specs, "B").reshape(-1, len(specs))
    numeric, widths = _range_widths(specs)
    usable = numeric & (widths > 0)
    diff = A[:, None, :] - B[None, :, :]
    per = np.where(diff == 0.0, 0.0, 1.0)
    scaled = np.minimum(
        np.divide(np.abs(diff), widths, out=np.zeros_like(diff), where=usable), 1.0
    )
    per[:, :, usable] = scaled[:, :, usable]
    return per.mean(axis=2)


def knn_mean_distance(x, training: np.ndarray, specs: Sequence[FeatureSpec], k: int,
                      metric: str = "gower") -> float:
    """Mean distance from x to its k nearest training rows (plausibility proxy)."""
    if metric == "gower":
        d = gower_matrix(training, np.asarray(x, dtype=float), specs)
    else:
        d = heom_matrix(training, np.asarray(x, dtype=float), specs)
    k = min(k, len(d))
    return float(np.partition(d, k - 1)[:k].mean())


def knn_mean_gower_rows(X: np.ndarray, training: np.ndarray,
                        specs: Sequence[FeatureSpec], k: int) -> np.ndarray:
    """knn_mean_distance for every row of X at once (Gower metric)."""
    D = gower_cross(X, training, specs)
    k = min(k, D.shape[1])
    return np.partition(D, k - 1, axis=1)[:, :k].mean(axis=1)
