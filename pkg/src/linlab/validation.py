"""Input validation helpers shared by the estimator and the analysis modules."""
from __future__ import annotations

import numbers

import numpy as np

from .maps import PolynomialMap


def check_complex_array(X, name: str = "X") -> np.ndarray:
    """Coerce ``X`` to a finite complex ndarray (scalars become 0-d arrays)."""
    arr = np.asarray(X)
    if arr.dtype == object:
        try:
            arr = arr.astype(complex)
        except (TypeError, ValueError) as exc:
            raise TypeError(f"{name} must be numeric, got {X!r}") from exc
    if not np.issubdtype(arr.dtype, np.number):
        raise TypeError(f"{name} must be numeric")
    arr = arr.astype(complex, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_polynomial(X) -> PolynomialMap:
    """Accept a PolynomialMap, a list of complex coefficients, or ``[[re, im], ...]``."""
    if isinstance(X, PolynomialMap):
        return X
    seq = list(X)
    if seq and all(isinstance(c, (list, tuple)) and len(c) == 2 for c in seq):
        return PolynomialMap.from_pairs(seq)
    if not all(isinstance(c, numbers.Number) for c in seq):
        raise TypeError(f"cannot interpret {X!r} as polynomial coefficients")
    return PolynomialMap(seq)


def check_positive(value, name: str) -> float:
    v = float(value)
    if not np.isfinite(v) or v <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return v
