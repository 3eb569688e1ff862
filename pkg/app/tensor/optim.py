from typing import List, Optional

import numpy as np


class Adam:
    """Adaptive moment estimation for gradient ascent.

    Moments are allocated on the first step and follow the parameter list
    order, so the same list layout must be passed every call.
    """

    def __init__(self, step_size: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.step_size = step_size
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.count = 0
        self._m: Optional[List[np.ndarray]] = None
        self._v: Optional[List[np.ndarray]] = None

    def ascend(self, params: List[np.ndarray], grads: List[np.ndarray]) -> List[np.ndarray]:
        """Return params moved one step up the gradient."""
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self.count += 1
        correction1 = 1.0 - self.beta1 ** self.count
        correction2 = 1.0 - self.beta2 ** self.count
        updated = []
        for i, (p, g) in enumerate(zip(params, grads)):
            self._m[i] = self.beta1 * self._m[i] + (1.0 - self.beta1) * g
            self._v[i] = self.beta2 * self._v[i] + (1.0 - self.beta2) * g * g
            m_hat = self._m[i] / correction1
            v_hat = self._v[i] / correction2
            updated.append(p + self.step_size * m_hat / (np.sqrt(v_hat) + self.eps))
        return updated
