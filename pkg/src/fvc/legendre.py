"""Second-order necessary conditions and bump variations.

The pointwise condition is positive semidefiniteness of P(t) = L_yy
along a candidate trajectory, on the continuity set of its Caputo
derivative.  When P fails, the compactly supported bump variations here
exhibit the failure directly: the second variation of the functional
becomes negative once the bump support shrinks enough.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateBump, DomainError, JumpPointError
from .expr import eval_jet2
from .fracops import CalphaFunction
from .quadrature import DEFAULT_N, integrate_weighted
from .special import gamma
from .variational import (
    DEFAULT_NODES,
    ProblemSpec,
    Variant,
    chebyshev_interior_nodes,
    second_variation,
)

__all__ = [
    "BumpKind",
    "LegendreReport",
    "pqr_along",
    "legendre_check",
    "bump_variation",
    "second_variation_probe",
]


class BumpKind(str, Enum):
    MEAN_VALUE = "MeanValueBump"  # psi_h = (f - k) r on the support, endpoints pinned
    CONSTANT = "ConstantBump"     # psi_h = r on the support, free initial value


@dataclass
class LegendreReport:
    node_ts: np.ndarray
    min_eigenvalues: np.ndarray
    verdict: str  # "Pass" | "Fail"
    tol: float
    witness_t: float | None = None
    witness_eigenvalue: float | None = None
    witness_vector: np.ndarray | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == "Pass"


def pqr_along(
    p: ProblemSpec, x: CalphaFunction, t: float, n_quad: int = DEFAULT_N
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(P, Q, R) = (L_yy, L_xy, L_xx) at (t, x(t), cD x(t)); P, R symmetrized."""
    if not (p.t0 <= t <= p.t1):
        raise DomainError(f"evaluation point {t} outside [{p.t0}, {p.t1}]")
    if x.is_jump(t):
        raise JumpPointError(f"t = {t} is a declared jump of the Caputo derivative")
    _, _, _, hxx, hxy, hyy = eval_jet2(p.lagrangian, t, x(t, n=n_quad), x.caputo(t))
    return 0.5 * (hyy + hyy.T), hxy, 0.5 * (hxx + hxx.T)


def legendre_check(
    p: ProblemSpec,
    x: CalphaFunction,
    n_nodes: int = DEFAULT_NODES,
    tol: float | None = None,
    n_quad: int = DEFAULT_N,
) -> LegendreReport:
    """Sample min eigenvalues of P(t) at interior Chebyshev nodes.

    Nodes falling in a small neighborhood of a declared jump are dropped
    (the condition only applies on the continuity set).  Pass iff every
    sampled minimum eigenvalue is >= -tol, with tol defaulting to
    1e-9 * (1 + max ||P||) once the samples are in hand.
    """
    nodes = chebyshev_interior_nodes(p.t0, p.t1, n_nodes)
    if x.jumps:
        guard = 1e-9 * (p.t1 - p.t0)
        keep = np.array(
            [all(abs(t - j) > guard for j in x.jumps) for t in nodes], dtype=bool
        )
        nodes = nodes[keep]

    mins = np.empty(len(nodes))
    eigvecs = []
    norms = []
    for i, t in enumerate(nodes):
        P, _, _ = pqr_along(p, x, float(t), n_quad=n_quad)
        w, v = np.linalg.eigh(P)
        mins[i] = w[0]
        eigvecs.append(v[:, 0])
        norms.append(abs(w).max() if w.size else 0.0)

    if tol is None:
        tol = 1e-9 * (1.0 + (max(norms) if norms else 0.0))

    bad = int(np.argmin(mins)) if len(mins) else -1
    if bad >= 0 and mins[bad] < -tol:
        return LegendreReport(
            node_ts=nodes,
            min_eigenvalues=mins,
            verdict="Fail",
            tol=tol,
            witness_t=float(nodes[bad]),
            witness_eigenvalue=float(mins[bad]),
            witness_vector=eigvecs[bad],
        )
    return LegendreReport(node_ts=nodes, min_eigenvalues=mins, verdict="Pass", tol=tol)


def bump_variation(
    kind: BumpKind,
    sigma: float,
    eps: float,
    r: np.ndarray,
    p_orders: tuple[float, float, float],
    f: Callable[[float], float] | None = None,
    n_quad: int = DEFAULT_N,
) -> CalphaFunction:
    """A variation whose Caputo derivative is supported on [sigma-eps, sigma+eps].

    MeanValueBump: psi_h = (f(t) - k) r there and 0 elsewhere, with the
    constant k chosen so the induced h vanishes at t1 (and h(t0) = 0 by
    construction); requires f non-constant on the support.  ConstantBump:
    psi_h = r there, with the initial value h(t0) chosen so h(t1) = 0.
    """
    alpha, t0, t1 = p_orders
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"order must lie in (0, 1], got {alpha}")
    lo, hi = sigma - eps, sigma + eps
    if eps <= 0.0 or not (t0 < lo and hi < t1):
        raise DomainError(f"bump support [{lo}, {hi}] not inside ({t0}, {t1})")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    # int_lo^hi (t1 - tau)^(alpha-1) dtau, the kernel mass over the support
    kernel_mass = ((t1 - lo) ** alpha - (t1 - hi) ** alpha) / alpha

    kind = BumpKind(kind)
    if kind is BumpKind.CONSTANT:

        def psi_const(t: float) -> np.ndarray:
            return r if lo <= t <= hi else np.zeros_like(r)

        h0 = -r * kernel_mass / gamma(alpha)
        return CalphaFunction(
            t0=t0, t1=t1, alpha=alpha, x0=h0, psi_smooth=psi_const, jumps=(lo, hi)
        )

    if f is None:
        raise DomainError("MeanValueBump requires the profile function f")
    moment = integrate_weighted(
        lambda tau: (t1 - tau) ** (alpha - 1.0) * f(tau), lo, hi, 0.0, 0.0, n=n_quad
    )
    k = float(moment) / kernel_mass
    probe = np.linspace(lo, hi, 33)
    dev = max(abs(f(float(t)) - k) for t in probe)
    if dev <= 1e-12 * (1.0 + abs(k)):
        raise DegenerateBump(
            "f is constant on the bump support, the variation collapses to zero"
        )

    def psi_mv(t: float) -> np.ndarray:
        return (f(t) - k) * r if lo <= t <= hi else np.zeros_like(r)

    return CalphaFunction(
        t0=t0, t1=t1, alpha=alpha, x0=np.zeros_like(r), psi_smooth=psi_mv, jumps=(lo, hi)
    )


_BUMP_FOR_VARIANT = {
    Variant.SIMPLEST: BumpKind.MEAN_VALUE,
    Variant.FREE_FINAL: BumpKind.MEAN_VALUE,
    Variant.FREE_INITIAL: BumpKind.CONSTANT,
    Variant.BOLZA: BumpKind.CONSTANT,
}


def default_eps_list(p: ProblemSpec, sigma: float) -> list[float]:
    """Geometric ladder {0.2, 0.1, 0.05, 0.025} * (t1-t0)/2, clipped so
    every support stays inside the interval with a 2-eps margin at t1."""
    out = []
    for c in (0.2, 0.1, 0.05, 0.025):
        eps = c * (p.t1 - p.t0) / 2.0
        eps = min(eps, 0.5 * (sigma - p.t0), (p.t1 - sigma) / 3.0)
        out.append(eps)
    return out


def second_variation_probe(
    p: ProblemSpec,
    x: CalphaFunction,
    sigma: float,
    eps_list: Sequence[float] | None = None,
    r: np.ndarray | None = None,
    n_quad: int = DEFAULT_N,
) -> list[tuple[float, float]]:
    """delta^2 J along shrinking bump variations centered at sigma.

    The bump kind follows the variant: fixed-initial-value problems get
    the mean-value bump (h pinned at both ends), free-initial-value
    problems get the constant bump.  When <P(sigma) r, r> < 0 the values
    turn negative as eps shrinks, which is exactly how the second-order
    necessary condition is proved.
    """
    if r is None:
        r = np.zeros(p.n)
        r[0] = 1.0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if eps_list is None:
        eps_list = default_eps_list(p, sigma)
    kind = _BUMP_FOR_VARIANT[p.variant]
    out: list[tuple[float, float]] = []
    for eps in eps_list:
        h = bump_variation(
            kind,
            sigma,
            float(eps),
            r,
            (p.alpha, p.t0, p.t1),
            f=(lambda t: t) if kind is BumpKind.MEAN_VALUE else None,
            n_quad=n_quad,
        )
        out.append((float(eps), second_variation(p, x, h, n_quad=n_quad)))
    return out
