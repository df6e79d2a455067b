"""Problem definitions, functional variations and Euler-Lagrange residuals.

Four problem variants share one weighted functional

    J(x) = int_t0^t1 (t1-t)^(beta-1) L(t, x(t), cD^alpha x(t)) dt  [+ terminant]

and differ only in which endpoints are fixed.  The first-order
stationarity system is an *integral* equation whose shape splits by
regime: beta > alpha versus beta <= alpha (the boundary alpha = beta
belongs to the second regime).  Residuals are evaluated at interior
Chebyshev nodes; the open interval keeps the right-endpoint continuous
extension of the kernel transform out of the picture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import AdmissibilityError, ConfigError, DomainError
from .expr import Expr, eval_jet2, terminant_jet2
from .fracops import CalphaFunction, PowerTerm, s_operator
from .quadrature import DEFAULT_N, integrate_weighted_split
from .special import gamma

__all__ = [
    "Variant",
    "ProblemSpec",
    "ElReport",
    "evaluate_functional",
    "first_variation",
    "second_variation",
    "lemma33_function",
    "el_residual",
    "dubois_variation",
    "chebyshev_interior_nodes",
    "ENDPOINT_TOL",
]

ENDPOINT_TOL = 1e-8
DEFAULT_NODES = 33


class Variant(str, Enum):
    SIMPLEST = "simplest"          # both endpoints fixed, no terminant
    FREE_INITIAL = "free_initial"  # x(t1) fixed, terminant l(x(t0))
    BOLZA = "bolza"                # both endpoints free, terminant l(x(t0), x(t1))
    FREE_FINAL = "free_final"      # x(t0) fixed, terminant l(x(t1))


@dataclass(frozen=True)
class ProblemSpec:
    variant: Variant
    alpha: float
    beta: float
    t0: float
    t1: float
    n: int
    lagrangian: Expr
    terminant: Expr | None = None
    x0_fixed: np.ndarray | None = None
    x1_fixed: np.ndarray | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.beta <= 0.0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if not self.t0 < self.t1:
            raise ConfigError(f"need t0 < t1, got ({self.t0}, {self.t1})")
        if self.n < 1:
            raise ConfigError(f"state dimension must be >= 1, got {self.n}")
        for name in ("x0_fixed", "x1_fixed"):
            v = getattr(self, name)
            if v is not None:
                v = np.atleast_1d(np.asarray(v, dtype=float))
                if v.shape != (self.n,):
                    raise ConfigError(f"{name} must have dimension {self.n}")
                object.__setattr__(self, name, v)
        lag_vars = {kind for kind, _ in self.lagrangian.variables()}
        if not lag_vars <= {"t", "x", "y"}:
            raise ConfigError("Lagrangian may only use t, x and y variables")
        term_vars = (
            {kind for kind, _ in self.terminant.variables()} if self.terminant else set()
        )
        v = Variant(self.variant)
        object.__setattr__(self, "variant", v)
        if v is Variant.SIMPLEST:
            if self.x0_fixed is None or self.x1_fixed is None:
                raise ConfigError("simplest variant fixes both endpoints")
            if self.terminant is not None:
                raise ConfigError("simplest variant admits no terminant")
        elif v is Variant.FREE_INITIAL:
            if self.x1_fixed is None:
                raise ConfigError("free_initial variant fixes x(t1)")
            if self.x0_fixed is not None:
                raise ConfigError("free_initial variant leaves x(t0) free")
            if not term_vars <= {"a"}:
                raise ConfigError("free_initial terminant may depend only on a1..an")
        elif v is Variant.BOLZA:
            if self.x0_fixed is not None or self.x1_fixed is not None:
                raise ConfigError("bolza variant leaves both endpoints free")
            if self.terminant is None:
                raise ConfigError("bolza variant requires a terminant")
            if not term_vars <= {"a", "b"}:
                raise ConfigError("bolza terminant may depend only on a and b variables")
        else:  # FREE_FINAL
            if self.x0_fixed is None:
                raise ConfigError("free_final variant fixes x(t0)")
            if self.x1_fixed is not None:
                raise ConfigError("free_final variant leaves x(t1) free")
            if not term_vars <= {"b"}:
                raise ConfigError("free_final terminant may depend only on b1..bn")

    @property
    def case_two(self) -> bool:
        """True in the bracketing 0 < beta <= alpha <= 1 (alpha = beta included)."""
        return self.beta <= self.alpha

    @property
    def regime(self) -> str:
        return "case_two" if self.case_two else "case_one"


@dataclass
class ElReport:
    regime: str
    node_ts: np.ndarray
    residual_el: np.ndarray  # (nodes, n)
    inferred_k: np.ndarray  # (n,)
    fit_residual: np.ndarray  # (n,) weighted RMS of residual_el
    residual_transversality: dict[str, np.ndarray] = field(default_factory=dict)
    max_abs: float = 0.0
    note: str = ""


def chebyshev_interior_nodes(t0: float, t1: float, m: int) -> np.ndarray:
    """m Chebyshev-Gauss points of (t0, t1), strictly interior, increasing."""
    k = np.arange(m)
    s = np.cos(np.pi * (2 * k + 1) / (2 * m))
    return np.sort(0.5 * (t0 + t1) + 0.5 * (t1 - t0) * s)


def _close(a: np.ndarray, b: np.ndarray) -> bool:
    return bool(np.all(np.abs(a - b) <= ENDPOINT_TOL * (1.0 + np.abs(b))))


def _check_admissible(p: ProblemSpec, x: CalphaFunction, n_quad: int) -> None:
    if x.dim != p.n:
        raise AdmissibilityError(f"trajectory dimension {x.dim} != problem dimension {p.n}")
    if abs(x.t0 - p.t0) > ENDPOINT_TOL or abs(x.t1 - p.t1) > ENDPOINT_TOL:
        raise AdmissibilityError("trajectory interval does not match the problem")
    if abs(x.alpha - p.alpha) > 1e-12:
        raise AdmissibilityError(f"trajectory order {x.alpha} != problem order {p.alpha}")
    if p.x0_fixed is not None and not _close(x.x0, p.x0_fixed):
        raise AdmissibilityError(f"x(t0) = {x.x0} violates fixed value {p.x0_fixed}")
    if p.x1_fixed is not None:
        x1 = x(p.t1, n=n_quad)
        if not _close(x1, p.x1_fixed):
            raise AdmissibilityError(f"x(t1) = {x1} violates fixed value {p.x1_fixed}")


def _check_variation(p: ProblemSpec, h: CalphaFunction, n_quad: int) -> None:
    if h.dim != p.n:
        raise AdmissibilityError(f"variation dimension {h.dim} != problem dimension {p.n}")
    zero = np.zeros(p.n)
    if p.variant in (Variant.SIMPLEST, Variant.FREE_FINAL) and not _close(h.x0, zero):
        raise AdmissibilityError(f"variation must vanish at t0, got h(t0) = {h.x0}")
    if p.variant in (Variant.SIMPLEST, Variant.FREE_INITIAL):
        h1 = h(p.t1, n=n_quad)
        if not _close(h1, zero):
            raise AdmissibilityError(f"variation must vanish at t1, got h(t1) = {h1}")


def _terminant_jets(p: ProblemSpec, x: CalphaFunction, n_quad: int):
    """(value, l_a, l_b, H_aa, H_ab, H_bb) of the terminant along x."""
    a = x.x0
    b = x(p.t1, n=n_quad)
    if p.terminant is None:
        z = np.zeros(p.n)
        zz = np.zeros((p.n, p.n))
        return 0.0, z, z, zz, zz, zz
    return terminant_jet2(p.terminant, a, b)


def _weighted_integral(
    p: ProblemSpec, g: Callable[[float], np.ndarray], breaks: Sequence[float], n_quad: int
):
    """int_t0^t1 (t1-t)^(beta-1) g(t) dt, split at the declared breaks."""
    return integrate_weighted_split(g, p.t0, p.t1, p.beta - 1.0, 0.0, breaks=breaks, n=n_quad)


def evaluate_functional(p: ProblemSpec, x: CalphaFunction, n_quad: int = DEFAULT_N) -> float:
    """J(x): weighted Lagrangian integral plus terminant where present."""
    _check_admissible(p, x, n_quad)

    def integrand(t: float) -> float:
        from .expr import evaluate as _eval

        return _eval(p.lagrangian, t=t, x=x(t, n=n_quad), y=x.caputo(t))

    val = _weighted_integral(p, integrand, x.jumps, n_quad)
    if p.terminant is not None:
        val = val + _terminant_jets(p, x, n_quad)[0]
    return float(val)


def first_variation(
    p: ProblemSpec, x: CalphaFunction, h: CalphaFunction, n_quad: int = DEFAULT_N
) -> float:
    """delta J(x; h) = int w [<L_x, h> + <L_y, cD h>] dt + terminant terms."""
    _check_admissible(p, x, n_quad)
    _check_variation(p, h, n_quad)

    def integrand(t: float) -> float:
        _, gx, gy, *_ = eval_jet2(p.lagrangian, t, x(t, n=n_quad), x.caputo(t))
        return float(gx @ h(t, n=n_quad) + gy @ h.caputo(t))

    breaks = tuple(x.jumps) + tuple(h.jumps)
    val = float(_weighted_integral(p, integrand, breaks, n_quad))
    _, l_a, l_b, *_ = _terminant_jets(p, x, n_quad)
    if p.variant in (Variant.FREE_INITIAL, Variant.BOLZA):
        val += float(l_a @ h.x0)
    if p.variant in (Variant.BOLZA, Variant.FREE_FINAL):
        val += float(l_b @ h(p.t1, n=n_quad))
    return val


def second_variation(
    p: ProblemSpec, x: CalphaFunction, h: CalphaFunction, n_quad: int = DEFAULT_N
) -> float:
    """delta^2 J(x; h) with P = L_yy, Q = L_xy, R = L_xx along x."""
    _check_admissible(p, x, n_quad)
    _check_variation(p, h, n_quad)

    def integrand(t: float) -> float:
        _, _, _, hxx, hxy, hyy = eval_jet2(p.lagrangian, t, x(t, n=n_quad), x.caputo(t))
        hv = h(t, n=n_quad)
        dv = h.caputo(t)
        return float(dv @ hyy @ dv + 2.0 * (hv @ hxy @ dv) + hv @ hxx @ hv)

    breaks = tuple(x.jumps) + tuple(h.jumps)
    val = float(_weighted_integral(p, integrand, breaks, n_quad))
    _, _, _, h_aa, h_ab, h_bb = _terminant_jets(p, x, n_quad)
    h0 = h.x0
    h1 = h(p.t1, n=n_quad)
    if p.variant in (Variant.FREE_INITIAL, Variant.BOLZA):
        val += float(h0 @ h_aa @ h0)
    if p.variant is Variant.BOLZA:
        val += 2.0 * float(h0 @ h_ab @ h1)
    if p.variant in (Variant.BOLZA, Variant.FREE_FINAL):
        val += float(h1 @ h_bb @ h1)
    return val


def lemma33_function(
    a0: Callable[[float], np.ndarray],
    a1: Callable[[float], np.ndarray],
    p: ProblemSpec,
    t: float,
    n_quad: int = DEFAULT_N,
) -> np.ndarray:
    """f(t) = (t1-t)^(1-beta) (I^alpha_{t1-} b)(t) + a1(t), b = (t1-t)^(beta-1) a0.

    The combined kernel (t1-tau)^(beta-1) (tau-t)^(alpha-1) is one
    double-weight quadrature (the S transform applied to a0).
    """
    s_val = s_operator(a0, p.alpha, p.beta, p.t0, p.t1, t, n=n_quad)
    return np.atleast_1d(np.asarray(s_val, dtype=float)) + np.atleast_1d(
        np.asarray(a1(t), dtype=float)
    )


def _kernel_caseII(p: ProblemSpec, t: np.ndarray | float):
    return (p.t1 - t) ** (p.alpha - p.beta) / gamma(p.alpha)


def el_residual(
    p: ProblemSpec,
    x: CalphaFunction,
    n_nodes: int = DEFAULT_NODES,
    n_quad: int = DEFAULT_N,
) -> ElReport:
    """Per-node residuals of the variant's Euler-Lagrange system along x.

    Case one (beta > alpha): stationarity demands
        (t1-t)^(beta-alpha) [ (S L_x)(t) + L_y(t) ] = 0
    with the variant's endpoint conditions reported as transversality
    defects.  Case two (beta <= alpha): the system reads
        (S L_x)(t) + L_y(t) = k (t1-t)^(alpha-beta) / Gamma(alpha)
    for a constant vector k fixed by the variant's endpoint data (fitted
    by weighted least squares for the fixed-endpoint problem, where the
    boundary conditions live in the admissible class instead).
    """
    _check_admissible(p, x, n_quad)

    jet_cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def grads(t: float) -> tuple[np.ndarray, np.ndarray]:
        got = jet_cache.get(t)
        if got is None:
            _, gx, gy, *_ = eval_jet2(p.lagrangian, t, x(t, n=n_quad), x.caputo(t))
            got = (gx, gy)
            jet_cache[t] = got
        return got

    def a0(t: float) -> np.ndarray:
        return grads(t)[0]

    nodes = chebyshev_interior_nodes(p.t0, p.t1, n_nodes)
    s_vals = np.empty((n_nodes, p.n))
    ly_vals = np.empty((n_nodes, p.n))
    for i, t in enumerate(nodes):
        s_vals[i] = np.atleast_1d(
            s_operator(a0, p.alpha, p.beta, p.t0, p.t1, float(t), n=n_quad, breaks=x.jumps)
        )
        ly_vals[i] = grads(float(t))[1]

    _, l_a, l_b, *_ = _terminant_jets(p, x, n_quad)
    trans: dict[str, np.ndarray] = {}
    note = "alpha == beta: boundary regime, case_two applies" if p.alpha == p.beta else ""

    def integral_lx() -> np.ndarray:
        val = _weighted_integral(p, lambda t: grads(float(t))[0], x.jumps, n_quad)
        return np.atleast_1d(np.asarray(val, dtype=float))

    if not p.case_two:
        factor = (p.t1 - nodes) ** (p.beta - p.alpha)
        residual = factor[:, None] * (s_vals + ly_vals)
        inferred_k = np.zeros(p.n)
        fit = np.sqrt(np.mean(residual**2, axis=0))
        if p.variant in (Variant.FREE_INITIAL, Variant.BOLZA):
            trans["transversality_integral"] = integral_lx() + l_a
        if p.variant in (Variant.BOLZA, Variant.FREE_FINAL):
            trans["free_end_lx1"] = l_b.copy()
    else:
        ker = _kernel_caseII(p, nodes)
        base = s_vals + ly_vals
        w = (p.t1 - nodes) ** (p.beta - 1.0)
        if p.variant is Variant.SIMPLEST:
            # k fitted: the boundary data already lives in the admissible class
            denom = np.sum(w * ker**2)
            k_res = (w * ker) @ base / denom
            inferred_k = k_res
        elif p.variant is Variant.FREE_INITIAL:
            k_paper = -(integral_lx() + l_a)
            k_res = -k_paper
            inferred_k = k_paper
            trans["transversality_integral"] = integral_lx() + l_a + k_paper
        else:  # BOLZA, FREE_FINAL
            k_res = -l_b
            inferred_k = k_res.copy()
            if p.variant is Variant.BOLZA:
                trans["transversality_integral"] = integral_lx() + l_a + l_b
        residual = base - np.outer(ker, k_res)
        fit = np.sqrt((w @ residual**2) / np.sum(w))

    max_abs = float(np.max(np.abs(residual))) if residual.size else 0.0
    for v in trans.values():
        max_abs = max(max_abs, float(np.max(np.abs(v))))
    return ElReport(
        regime=p.regime,
        node_ts=nodes,
        residual_el=residual,
        inferred_k=np.atleast_1d(inferred_k),
        fit_residual=np.atleast_1d(fit),
        residual_transversality=trans,
        max_abs=max_abs,
        note=note,
    )


def dubois_variation(
    f: Callable[[float], float],
    p_orders: tuple[float, float, float, float],
    n_quad: int = DEFAULT_N,
) -> tuple[CalphaFunction, float]:
    """The constructive variation of the generalized Du Bois-Reymond lemma.

    Given continuous scalar f, returns (h, k_const) with h(t0) = 0 and
    h(t1) = 0 to quadrature tolerance:

      beta > alpha:  cD h = Gamma(alpha) (t1-t)^(beta-alpha) f(t) - k0,
                     k0 = Gamma(alpha+1)/(t1-t0)^alpha * int w f dt;
      beta <= alpha: cD h = f(t) - k (t1-t)^(alpha-beta)/Gamma(alpha),
                     k = (2a-b) Gamma(a)/(t1-t0)^(2a-b) * int (t1-t)^(a-1) f dt.
    """
    alpha, beta_ord, t0, t1 = p_orders
    if not (0.0 < alpha <= 1.0) or beta_ord <= 0.0:
        raise DomainError(f"need 0 < alpha <= 1 and beta > 0, got ({alpha}, {beta_ord})")
    ga = gamma(alpha)
    if beta_ord > alpha:
        mass = integrate_weighted_split(f, t0, t1, beta_ord - 1.0, 0.0, n=n_quad)
        k0 = gamma(alpha + 1.0) / (t1 - t0) ** alpha * float(mass)

        def psi(t: float, _k0=k0) -> float:
            return ga * (t1 - t) ** (beta_ord - alpha) * f(t) - _k0

        h = CalphaFunction(t0=t0, t1=t1, alpha=alpha, x0=np.zeros(1), psi_smooth=psi)
        return h, k0

    mass = integrate_weighted_split(f, t0, t1, alpha - 1.0, 0.0, n=n_quad)
    k = (2.0 * alpha - beta_ord) * ga / (t1 - t0) ** (2.0 * alpha - beta_ord) * float(mass)
    h = CalphaFunction(
        t0=t0,
        t1=t1,
        alpha=alpha,
        x0=np.zeros(1),
        psi_smooth=f,
        power_terms=(PowerTerm(np.array([-k / ga]), alpha - beta_ord),),
    )
    return h, k
