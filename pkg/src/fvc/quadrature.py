"""Gauss-Jacobi quadrature for integrals with algebraic endpoint weights.

Every fractional operator in the toolkit reduces to integrals of the form

    int_c^d (d - tau)^a (tau - c)^b f(tau) dtau,    a, b > -1,

with f smooth (or piecewise smooth, handled by panel splitting in the
callers).  The singular endpoint factors are absorbed into the rule and
never evaluated pointwise.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi

from .errors import DomainError, LimitError
from .special import beta

__all__ = [
    "QuadRule",
    "jacobi_rule",
    "integrate_weighted",
    "integrate_weighted_split",
    "weight_mass",
    "DEFAULT_N",
]

DEFAULT_N = 64
MAX_N = 512


@dataclass(frozen=True)
class QuadRule:
    """Gauss-Jacobi rule on (-1, 1) for the weight (1-s)^a_exp (1+s)^b_exp."""

    n: int
    a_exp: float
    b_exp: float
    nodes: np.ndarray
    weights: np.ndarray


_cache: dict[tuple[int, float, float], QuadRule] = {}
_cache_lock = threading.Lock()


def _quantize(x: float) -> float:
    # collapse keys that differ below 1e-14 so sweeps reuse rules
    return round(x, 14)


def jacobi_rule(n: int, a_exp: float, b_exp: float) -> QuadRule:
    """Nodes and weights exact for polynomials of degree <= 2n-1 against
    the weight (1-s)^a_exp (1+s)^b_exp on (-1, 1)."""
    if not (1 <= n <= MAX_N):
        raise LimitError(f"node count must be in [1, {MAX_N}], got {n}")
    if a_exp <= -1.0 or b_exp <= -1.0:
        raise DomainError(f"weight exponents must exceed -1, got ({a_exp}, {b_exp})")

    key = (n, _quantize(a_exp), _quantize(b_exp))
    with _cache_lock:
        rule = _cache.get(key)
    if rule is not None:
        return rule

    # scipy's recurrence warns on a 0/0 that np.where already guards
    with np.errstate(invalid="ignore", divide="ignore"):
        nodes, weights = roots_jacobi(n, a_exp, b_exp)
    rule = QuadRule(n=n, a_exp=a_exp, b_exp=b_exp, nodes=nodes, weights=weights)
    with _cache_lock:
        _cache.setdefault(key, rule)
    return rule


def weight_mass(a_exp: float, b_exp: float) -> float:
    """int_{-1}^{1} (1-s)^a (1+s)^b ds = 2^(a+b+1) B(a+1, b+1)."""
    return 2.0 ** (a_exp + b_exp + 1.0) * beta(a_exp + 1.0, b_exp + 1.0)


def integrate_weighted(
    f: Callable[[float], float],
    c: float,
    d: float,
    right_exp: float,
    left_exp: float,
    rule: QuadRule | None = None,
    n: int = DEFAULT_N,
):
    """int_c^d (d - tau)^right_exp (tau - c)^left_exp f(tau) dtau.

    f may return scalars or vectors; the result has the same shape.
    """
    if not c < d:
        raise DomainError(f"need c < d, got ({c}, {d})")
    if rule is None:
        rule = jacobi_rule(n, right_exp, left_exp)
    elif _quantize(rule.a_exp) != _quantize(right_exp) or _quantize(rule.b_exp) != _quantize(left_exp):
        raise DomainError(
            f"rule built for exponents ({rule.a_exp}, {rule.b_exp}) "
            f"does not match requested ({right_exp}, {left_exp})"
        )

    half = 0.5 * (d - c)
    taus = c + half * (rule.nodes + 1.0)
    scale = half ** (right_exp + left_exp + 1.0)
    acc = None
    for w, tau in zip(rule.weights, taus):
        val = np.asarray(f(tau), dtype=float) * w
        acc = val if acc is None else acc + val
    out = scale * acc
    return float(out) if out.ndim == 0 else out


def integrate_weighted_split(
    f: Callable[[float], float],
    c: float,
    d: float,
    right_exp: float,
    left_exp: float,
    breaks=(),
    n: int = DEFAULT_N,
):
    """Same integral as integrate_weighted, split at interior break points.

    On each panel the singular endpoint factor is absorbed into the rule
    only when the panel actually touches that endpoint; elsewhere the
    factor is smooth and folded into the integrand.  Used for PC^alpha
    trajectories whose Caputo derivative jumps at declared points.
    """
    pts = [c] + sorted(b for b in breaks if c < b < d) + [d]
    total = None
    for lo, hi in zip(pts[:-1], pts[1:]):
        r_exp = right_exp if hi == d else 0.0
        l_exp = left_exp if lo == c else 0.0

        def g(tau, _r=r_exp, _l=l_exp):
            val = np.asarray(f(tau), dtype=float)
            if _r == 0.0 and right_exp != 0.0:
                val = val * (d - tau) ** right_exp
            if _l == 0.0 and left_exp != 0.0:
                val = val * (tau - c) ** left_exp
            return val

        piece = integrate_weighted(g, lo, hi, r_exp, l_exp, n=n)
        total = piece if total is None else total + piece
    return total
