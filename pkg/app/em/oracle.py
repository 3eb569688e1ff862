import logging
import math
from typing import Callable

import numpy as np

from ..errors import ShrinkageError
from .hyperpriors import HyperPrior, scale_star

logger = logging.getLogger(__name__)

INVERSE_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
LOG_SCALE_RANGE = (-50.0, 50.0)
ORACLE_TOLERANCE = 1e-8


def golden_section_maximize(
    increment: Callable[[float, float], float], lower: float, upper: float, tol: float = 1e-12
) -> float:
    """Maximizer of a unimodal function on [lower, upper].

    ``increment(a, b)`` returns f(a) − f(b); passing the difference rather
    than f keeps comparisons exact near a flat maximum.
    """
    a, b = float(lower), float(upper)
    c = b - INVERSE_GOLDEN * (b - a)
    d = a + INVERSE_GOLDEN * (b - a)
    while b - a > tol * max(1.0, abs(a), abs(b)):
        if increment(c, d) > 0.0:
            b, d = d, c
            c = b - INVERSE_GOLDEN * (b - a)
        else:
            a, c = c, d
            d = a + INVERSE_GOLDEN * (b - a)
    return 0.5 * (a + b)


def scale_objective_increment(
    hyperprior: HyperPrior, total: float, count: int, sigma0: float, t1: float, t2: float
) -> float:
    """f(e^t1) − f(e^t2) for the scale objective, in log-scale coordinates."""
    c, k, b2 = hyperprior.terms()
    coef = total / (2.0 * sigma0 * sigma0) + c
    dt = t1 - t2
    # e^{-t1} − e^{-t2} = e^{-t2}·expm1(−dt)
    inverse = coef * math.exp(-t2) * math.expm1(-dt)
    value = -inverse - (0.5 * count + k) * dt
    if b2 is not None:
        e2 = math.exp(t2)
        value -= math.log1p(e2 * math.expm1(dt) / (b2 + e2))
    return value


def oracle_scale(hyperprior: HyperPrior, total: float, count: int, sigma0: float) -> float:
    """Golden-section maximizer of the scale objective over log v ∈ [−50, 50]."""
    t = golden_section_maximize(
        lambda t1, t2: scale_objective_increment(hyperprior, total, count, sigma0, t1, t2),
        *LOG_SCALE_RANGE,
    )
    return float(np.exp(t))


def verify_scale_star(hyperprior: HyperPrior, total: float, count: int, sigma0: float) -> float:
    """Closed-form v*, checked against the oracle.

    Raises when the two disagree by more than 1e-8·(1 + v_oracle).
    """
    closed = scale_star(hyperprior, total, count, sigma0)
    numeric = oracle_scale(hyperprior, total, count, sigma0)
    if abs(closed - numeric) > ORACLE_TOLERANCE * (1.0 + numeric):
        raise ShrinkageError(
            f"scale update for {hyperprior.kind} disagrees with the oracle: "
            f"closed form {closed!r}, oracle {numeric!r} (S={total}, D={count}, sigma0={sigma0})"
        )
    return closed
