"""Gamma/Beta special functions and the endpoint power inequality.

Everything here is scalar, pure and stateless.  Gamma is restricted to
positive arguments: the fractional kernels only ever need Gamma on
(0, inf), so no reflection formula is required.
"""

from __future__ import annotations

import math

from .errors import DomainError

__all__ = ["gamma", "log_gamma", "beta", "power_inequality_gap"]


def gamma(x: float) -> float:
    """Gamma function for x > 0."""
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"gamma requires a finite positive argument, got {x!r}")
    return math.gamma(x)


def log_gamma(x: float) -> float:
    """log Gamma(x) for x > 0."""
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"log_gamma requires a finite positive argument, got {x!r}")
    return math.lgamma(x)


def beta(a: float, b: float) -> float:
    """Beta function B(a, b) for a, b > 0, computed in log space."""
    if not (math.isfinite(a) and a > 0.0) or not (math.isfinite(b) and b > 0.0):
        raise DomainError(f"beta requires positive arguments, got ({a!r}, {b!r})")
    return math.exp(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))


def power_inequality_gap(alpha: float, sigma1: float, sigma2: float) -> tuple[float, float]:
    """Both sides of the inequality
    (s2^a - s1^a)^2 <= a (s2 - s1)^(a+1) s1^(a-1), valid for 0 < s1 <= s2,
    0 < a <= 1.  Returns (lhs, rhs); the caller asserts lhs <= rhs.
    """
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"order must lie in (0, 1], got {alpha!r}")
    if not (0.0 < sigma1 <= sigma2):
        raise DomainError(f"need 0 < sigma1 <= sigma2, got ({sigma1!r}, {sigma2!r})")
    lhs = (sigma2**alpha - sigma1**alpha) ** 2
    rhs = alpha * (sigma2 - sigma1) ** (alpha + 1.0) * sigma1 ** (alpha - 1.0)
    return lhs, rhs
