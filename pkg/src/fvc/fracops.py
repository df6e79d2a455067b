"""Fractional operators on the C^alpha / PC^alpha representation.

A trajectory is stored by its initial value and its Caputo derivative
psi, never by samples of the trajectory itself:

    x(t) = x(t0) + (I^alpha psi)(t),   psi piecewise continuous.

The Caputo derivative is therefore read off exactly; only the
Riemann-Liouville integral is ever computed numerically.  Caputo
derivatives that are a smooth part plus terms c * (t1 - t)^e (the shape
every extremal of the separable problem class takes) carry those terms
explicitly, so their fractional integral is evaluated in closed form via
a Gauss hypergeometric reduction instead of quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import hyp2f1

from .errors import DomainError
from .quadrature import DEFAULT_N, integrate_weighted, integrate_weighted_split
from .special import gamma

__all__ = [
    "PowerTerm",
    "CalphaFunction",
    "rl_integral_left",
    "rl_integral_right",
    "rl_power_integral",
    "caputo_left",
    "evaluate",
    "composition_residual",
    "s_operator",
]


def rl_integral_left(
    f: Callable[[float], float],
    alpha: float,
    t0: float,
    t: float,
    n: int = DEFAULT_N,
    left_exp: float = 0.0,
):
    """(I^alpha_{t0+} f)(t) = (1/Gamma(alpha)) int_t0^t (t-tau)^(alpha-1) f(tau) dtau.

    `left_exp` declares a known algebraic factor (tau - t0)^left_exp of the
    integrand: pass the regular part as f and the exponent here, and the
    factor is absorbed into the quadrature weight.
    """
    if alpha < 0.0:
        raise DomainError(f"order must be nonnegative, got {alpha}")
    if t < t0:
        raise DomainError(f"evaluation point {t} precedes interval start {t0}")
    if alpha == 0.0:
        return f(t)
    if t == t0:
        return np.zeros_like(np.asarray(f(t0), dtype=float)) + 0.0
    val = integrate_weighted(f, t0, t, alpha - 1.0, left_exp, n=n)
    return val / gamma(alpha)


def rl_integral_right(
    f: Callable[[float], float],
    alpha: float,
    t1: float,
    t: float,
    n: int = DEFAULT_N,
    right_exp: float = 0.0,
):
    """(I^alpha_{t1-} f)(t) = (1/Gamma(alpha)) int_t^t1 (tau-t)^(alpha-1) f(tau) dtau."""
    if alpha < 0.0:
        raise DomainError(f"order must be nonnegative, got {alpha}")
    if t > t1:
        raise DomainError(f"evaluation point {t} exceeds interval end {t1}")
    if alpha == 0.0:
        return f(t)
    if t == t1:
        return np.zeros_like(np.asarray(f(t1), dtype=float)) + 0.0
    val = integrate_weighted(f, t, t1, right_exp, alpha - 1.0, n=n)
    return val / gamma(alpha)


def rl_power_integral(alpha: float, e: float, t0: float, t1: float, t: float) -> float:
    """(1/Gamma(alpha)) int_t0^t (t-tau)^(alpha-1) (t1-tau)^e dtau, closed form.

    Reduction: with X = t - t0, c = t1 - t,
        integral = X^alpha (X+c)^e / (alpha Gamma(alpha))
                   * 2F1(-e, 1; alpha+1; X/(X+c)),
    which stays well conditioned uniformly in c >= 0 (at c = 0 it needs
    alpha + e > 0, i.e. an integrable combined kernel).
    """
    if alpha <= 0.0:
        raise DomainError(f"order must be positive, got {alpha}")
    if not (t0 <= t <= t1):
        raise DomainError(f"evaluation point {t} outside [{t0}, {t1}]")
    X = t - t0
    if X == 0.0:
        return 0.0
    c = t1 - t
    if c == 0.0 and alpha + e <= 0.0:
        raise DomainError(f"kernel exponent alpha+e = {alpha + e} not integrable at t1")
    w = X / (X + c)
    return (
        X**alpha
        * (X + c) ** e
        / (alpha * gamma(alpha))
        * float(hyp2f1(-e, 1.0, alpha + 1.0, w))
    )


@dataclass(frozen=True)
class PowerTerm:
    """A Caputo-derivative term coef * (t1 - t)^exponent."""

    coef: np.ndarray
    exponent: float


@dataclass(frozen=True)
class CalphaFunction:
    """A trajectory in C^alpha (or PC^alpha when `jumps` is nonempty).

    psi_smooth is the black-box part of the Caputo derivative, continuous
    on each panel between declared jump points; power_terms add
    coef * (t1 - t)^e contributions integrated in closed form.
    """

    t0: float
    t1: float
    alpha: float
    x0: np.ndarray
    psi_smooth: Callable[[float], np.ndarray] | None = None
    power_terms: tuple[PowerTerm, ...] = ()
    jumps: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.t0 < self.t1:
            raise DomainError(f"need t0 < t1, got ({self.t0}, {self.t1})")
        if not (0.0 < self.alpha <= 1.0):
            raise DomainError(f"order must lie in (0, 1], got {self.alpha}")
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        object.__setattr__(self, "x0", x0)
        terms = tuple(
            PowerTerm(np.atleast_1d(np.asarray(pt.coef, dtype=float)), float(pt.exponent))
            for pt in self.power_terms
        )
        object.__setattr__(self, "power_terms", terms)
        jumps = tuple(sorted(float(j) for j in self.jumps))
        if any(not (self.t0 < j < self.t1) for j in jumps):
            raise DomainError("jump points must lie strictly inside (t0, t1)")
        if any(b <= a for a, b in zip(jumps, jumps[1:])):
            raise DomainError("jump points must be strictly increasing")
        object.__setattr__(self, "jumps", jumps)

    @property
    def dim(self) -> int:
        return self.x0.shape[0]

    def is_jump(self, t: float) -> bool:
        return any(t == j for j in self.jumps)

    def caputo(self, t: float) -> np.ndarray:
        """The Caputo derivative psi(t); at declared jumps this is the
        left limit by the storage convention for psi_smooth."""
        if not (self.t0 <= t <= self.t1):
            raise DomainError(f"evaluation point {t} outside [{self.t0}, {self.t1}]")
        val = np.zeros(self.dim)
        if self.psi_smooth is not None:
            val = val + np.atleast_1d(np.asarray(self.psi_smooth(t), dtype=float))
        for pt in self.power_terms:
            val = val + pt.coef * (self.t1 - t) ** pt.exponent
        return val

    def __call__(self, t: float, n: int = DEFAULT_N) -> np.ndarray:
        """x(t) = x0 + (I^alpha psi)(t)."""
        if not (self.t0 <= t <= self.t1):
            raise DomainError(f"evaluation point {t} outside [{self.t0}, {self.t1}]")
        val = self.x0.copy()
        if t == self.t0:
            return val
        if self.psi_smooth is not None:
            integral = integrate_weighted_split(
                self.psi_smooth, self.t0, t, self.alpha - 1.0, 0.0, breaks=self.jumps, n=n
            )
            val = val + np.atleast_1d(np.asarray(integral, dtype=float)) / gamma(self.alpha)
        for pt in self.power_terms:
            val = val + pt.coef * rl_power_integral(self.alpha, pt.exponent, self.t0, self.t1, t)
        return val


def caputo_left(x: CalphaFunction, t: float) -> np.ndarray:
    """Exact Caputo derivative of x at t (the stored generator)."""
    return x.caputo(t)


def evaluate(x: CalphaFunction, t: float, n: int = DEFAULT_N) -> np.ndarray:
    """x(t), splitting the quadrature at declared jump points of psi."""
    return x(t, n=n)


def composition_residual(
    f: Callable[[float], float],
    alpha: float,
    t0: float,
    t1: float,
    n: int = DEFAULT_N,
    probe_count: int = 11,
) -> tuple[float, float]:
    """Composition identities on x = I^alpha f.

    Returns (r_deriv, r_quad): r_deriv is max |cD^alpha (I^alpha f) - f|
    over uniform probes (structurally zero for the representation);
    r_quad is the max two-resolution quadrature discrepancy of
    |I^alpha (cD^alpha x)(t) - (x(t) - x(t0))|, i.e. the same integral at
    n and 2n nodes.
    """
    x = CalphaFunction(t0=t0, t1=t1, alpha=alpha, x0=np.zeros(1), psi_smooth=lambda t: f(t))
    ts = np.linspace(t0, t1, probe_count)
    r_deriv = max(abs(float(x.caputo(t)[0]) - f(t)) for t in ts)
    r_quad = 0.0
    for t in ts[1:]:
        a = rl_integral_left(f, alpha, t0, float(t), n=n)
        b = rl_integral_left(f, alpha, t0, float(t), n=min(2 * n, 512))
        r_quad = max(r_quad, abs(float(a) - float(b)))
    return r_deriv, r_quad


def s_operator(
    a: Callable[[float], float],
    alpha: float,
    beta_ord: float,
    t0: float,
    t1: float,
    t: float,
    n: int = DEFAULT_N,
    breaks: Sequence[float] = (),
):
    """(Sa)(t) = (t1-t)^(1-beta)/Gamma(alpha) *
                 int_t^t1 (t1-tau)^(beta-1) (tau-t)^(alpha-1) a(tau) dtau.

    Continuous on [t0, t1]; at t = t1 the value is the continuous
    extension: 0 when beta > alpha, else the operator evaluated a machine
    offset inside the interval.
    """
    if not (0.0 < alpha <= 1.0) or beta_ord <= 0.0:
        raise DomainError(f"need 0 < alpha <= 1 and beta > 0, got ({alpha}, {beta_ord})")
    if not (t0 <= t <= t1):
        raise DomainError(f"evaluation point {t} outside [{t0}, {t1}]")
    if t == t1:
        if beta_ord > alpha:
            return 0.0 * np.asarray(a(t1), dtype=float)
        t = t1 - math.sqrt(np.finfo(float).eps) * (t1 - t0)
    inner = integrate_weighted_split(
        a, t, t1, beta_ord - 1.0, alpha - 1.0, breaks=breaks, n=n
    )
    return (t1 - t) ** (1.0 - beta_ord) / gamma(alpha) * inner
