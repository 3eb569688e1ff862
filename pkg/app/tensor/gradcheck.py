from typing import Callable

import numpy as np


def numeric_gradient(fn: Callable[[], float], array: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of ``fn`` with respect to ``array``.

    ``array`` is perturbed in place and restored, so ``fn`` must read it
    (for example through a Tensor that wraps it).
    """
    grad = np.zeros_like(array, dtype=np.float64)
    for idx in np.ndindex(array.shape):
        original = array[idx]
        array[idx] = original + step
        upper = fn()
        array[idx] = original - step
        lower = fn()
        array[idx] = original
        grad[idx] = (upper - lower) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(np.asarray(analytic) - np.asarray(numeric)) / scale)
