"""
Two-sided eigenvalue comparison bracket for quasi-unitarily related operators.
"""

from typing import Tuple

from graphs.errors import BoundNotApplicableError


def comparison_bounds(lambda_k0: float, delta1: float, delta2: float) -> Tuple[float, float]:
    """
    Bracket [lower, upper] for lambda_k(eps) - lambda_k(0).

    upper = 2(1+L) d1 / (1 - d1(1+L))
    lower = -2(1+L)(1+d1) d2 / (1 - (d1 + d2(1+d1))(1+L))
    with L = lambda_k0.

    Args:
        lambda_k0: Eigenvalue of the limit operator
        delta1: Defect controlling the upper bound, >= 0
        delta2: Defect controlling the lower bound, >= 0

    Raises:
        ValueError: negative defects
        BoundNotApplicableError: a denominator is not positive at this eigenvalue
    """
    if delta1 < 0 or delta2 < 0:
        raise ValueError("comparison_bounds: defects must be nonnegative")
    scale = 1.0 + lambda_k0
    upper_denominator = 1.0 - delta1 * scale
    lower_denominator = 1.0 - (delta1 + delta2 * (1.0 + delta1)) * scale
    if upper_denominator <= 0 or lower_denominator <= 0:
        raise BoundNotApplicableError(
            f"comparison_bounds: bound not applicable at lambda = {lambda_k0:g} "
            f"(delta1 = {delta1:g}, delta2 = {delta2:g})"
        )
    upper = 2.0 * scale * delta1 / upper_denominator
    lower = -2.0 * scale * (1.0 + delta1) * delta2 / lower_denominator
    return lower, upper
