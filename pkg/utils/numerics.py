"""
Numerics Utility
Exponential kernels that stay accurate when the exponent is tiny or huge
"""

import math

SERIES_CUTOFF = 1e-5
RAMP_SERIES_CUTOFF = 1e-3


def relative_decay(x):
    """
    (1 - e^(-x)) / x, the average of e^(-s) over [0, x] scaled to 1 at x = 0

    Args:
        x: non-negative exponent (rate times time)

    Returns:
        Value in (0, 1]
    """
    if abs(x) < SERIES_CUTOFF:
        return 1.0 - x / 2.0 + x * x / 6.0
    return -math.expm1(-x) / x


def ramp_integral(x):
    """
    (x - 1 + e^(-x)) / x^2

    t^2 * ramp_integral(k t) is the integral over [0, t] of (1 - e^(-k s)) / k,
    which keeps the small-rate limit (t^2 / 2) finite.
    """
    if abs(x) < RAMP_SERIES_CUTOFF:
        return 0.5 - x / 6.0 + x * x / 24.0 - x ** 3 / 120.0 + x ** 4 / 720.0
    return (x + math.expm1(-x)) / (x * x)
