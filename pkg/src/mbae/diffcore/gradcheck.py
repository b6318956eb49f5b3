"""Central finite differences, the oracle every analytic gradient is checked against."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from collections.abc import Callable

RTOL = 1e-4
ATOL = 1e-7
STEP = 1e-5


def numerical_gradient(f: Callable[[], float], x: np.ndarray, h: float = STEP) -> np.ndarray:
    """d f() / d x by central differences, perturbing `x` in place (restored afterwards)."""
    grad = np.zeros(x.shape, dtype=np.float64)
    for i in range(x.size):
        original = x.flat[i]
        x.flat[i] = original + h
        f_plus = f()
        x.flat[i] = original - h
        f_minus = f()
        x.flat[i] = original
        grad.flat[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


def mismatches(analytic: np.ndarray, numeric: np.ndarray, rtol: float = RTOL, atol: float = ATOL) -> np.ndarray:
    """Boolean mask of entries where |a - n| exceeds max(atol, rtol * max(|a|, |n|))."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.abs(analytic), np.abs(numeric))
    return np.abs(analytic - numeric) > np.maximum(atol, rtol * scale)


def assert_close(analytic: np.ndarray, numeric: np.ndarray, rtol: float = RTOL, atol: float = ATOL) -> None:
    """Raise AssertionError naming the worst entry when the gradients disagree."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.shape != numeric.shape:
        msg = f"shape mismatch: analytic {analytic.shape}, numeric {numeric.shape}"
        raise AssertionError(msg)
    bad = mismatches(analytic, numeric, rtol, atol)
    if bad.any():
        worst = int(np.argmax(np.abs(analytic - numeric) * bad))
        msg = (
            f"{int(bad.sum())} of {bad.size} entries disagree; worst at {worst}: "
            f"analytic={analytic.flat[worst]!r} numeric={numeric.flat[worst]!r}"
        )
        raise AssertionError(msg)
