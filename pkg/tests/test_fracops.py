import math

import mpmath
import numpy as np
import pytest

from fvc.errors import DomainError
from fvc.fracops import (
    CalphaFunction,
    PowerTerm,
    caputo_left,
    composition_residual,
    evaluate,
    rl_integral_left,
    rl_integral_right,
    rl_power_integral,
    s_operator,
)
from fvc.special import beta, gamma


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 1.0])
@pytest.mark.parametrize("mu", [0.0, 0.5, 1.0, 2.0])
def test_power_rule_table(alpha, mu):
    # I^alpha t^mu = Gamma(mu+1)/Gamma(mu+alpha+1) t^(mu+alpha)
    for t in (0.37, 1.0):
        val = rl_integral_left(lambda s: 1.0, alpha, 0.0, t, left_exp=mu)
        exact = gamma(mu + 1.0) / gamma(mu + alpha + 1.0) * t ** (mu + alpha)
        assert abs(val - exact) <= 1e-10


def test_left_integral_examples():
    val = rl_integral_left(lambda s: 1.0, 0.5, 0.0, 1.0, left_exp=0.5)
    assert val == pytest.approx(gamma(1.5) / gamma(2.0), rel=1e-12)
    val = rl_integral_left(math.cos, 1.0, 0.0, math.pi / 2)
    assert val == pytest.approx(1.0, rel=1e-12)
    assert float(rl_integral_left(math.cos, 0.7, 0.0, 0.0)) == 0.0


def test_left_integral_rejects_out_of_range():
    with pytest.raises(DomainError):
        rl_integral_left(math.cos, 0.5, 0.0, -0.1)
    with pytest.raises(DomainError):
        rl_integral_left(math.cos, -0.5, 0.0, 1.0)


def test_left_integral_linearity():
    f = math.sin
    g = math.exp
    a = rl_integral_left(lambda t: 2.0 * f(t) - 3.0 * g(t), 0.5, 0.0, 0.8)
    b = 2.0 * rl_integral_left(f, 0.5, 0.0, 0.8) - 3.0 * rl_integral_left(g, 0.5, 0.0, 0.8)
    assert a == pytest.approx(b, rel=1e-12)


def test_right_integral_examples():
    for t in (0.0, 0.4):
        val = rl_integral_right(lambda s: 1.0, 0.6, 1.0, t)
        assert val == pytest.approx((1.0 - t) ** 0.6 / gamma(1.6), rel=1e-12)
    val = rl_integral_right(lambda s: 3.0, 1.0, 1.0, 0.25)
    assert val == pytest.approx(3.0 * 0.75, rel=1e-12)


def test_right_integral_beta_reduction_with_riemann_oracle():
    # f = (t1 - tau)^0.5, alpha = 0.5: closed form B(1.5, 0.5)/Gamma(0.5) (t1 - t)
    t = 0.3
    val = rl_integral_right(lambda s: 1.0, 0.5, 1.0, t, right_exp=0.5)
    assert val == pytest.approx(beta(1.5, 0.5) / gamma(0.5) * (1.0 - t), rel=1e-12)
    taus = np.linspace(t, 1.0, 200_001)[:-1] + (1.0 - t) / 400_000
    brute = np.sum((1.0 - taus) ** 0.5 * (taus - t) ** (-0.5)) * (1.0 - t) / 200_000
    # the midpoint sum converges only like h^(1/2) at the singular end
    assert val == pytest.approx(brute / gamma(0.5), rel=1e-3)


def test_power_integral_closed_form():
    # against high-precision quadrature for a genuinely Holder factor
    alpha, e = 0.5, 0.3
    for t in (0.2, 0.7, 1.0):
        val = rl_power_integral(alpha, e, 0.0, 1.0, t)
        ref = float(
            mpmath.quad(lambda u: (t - u) ** (alpha - 1.0) * (1.0 - u) ** e, [0.0, t])
        ) / gamma(alpha)
        assert val == pytest.approx(ref, abs=1e-9)
    assert rl_power_integral(alpha, e, 0.0, 1.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        rl_power_integral(0.3, -0.5, 0.0, 1.0, 1.0)


def test_caputo_is_the_stored_generator():
    x = CalphaFunction(t0=0.0, t1=1.0, alpha=0.5, x0=np.array([2.0]))
    assert caputo_left(x, 0.3) == pytest.approx([0.0])
    x = CalphaFunction(t0=0.0, t1=1.0, alpha=0.5, x0=np.zeros(1), psi_smooth=lambda t: np.ones(1))
    assert caputo_left(x, 0.9) == pytest.approx([1.0])
    c = gamma(1.5)
    x = CalphaFunction(
        t0=0.0, t1=1.0, alpha=0.5, x0=np.zeros(1), power_terms=(PowerTerm(np.array([c]), 0.0),)
    )
    assert caputo_left(x, 0.11) == pytest.approx([c], rel=1e-15)


def test_jump_points_validated_and_flagged():
    x = CalphaFunction(
        t0=0.0, t1=1.0, alpha=0.5, x0=np.zeros(1), psi_smooth=lambda t: np.ones(1), jumps=(0.5,)
    )
    assert x.is_jump(0.5) and not x.is_jump(0.4)
    with pytest.raises(DomainError):
        CalphaFunction(t0=0.0, t1=1.0, alpha=0.5, x0=np.zeros(1), jumps=(1.5,))
    with pytest.raises(DomainError):
        CalphaFunction(t0=0.0, t1=1.0, alpha=1.5, x0=np.zeros(1))


def test_evaluate_examples():
    x = CalphaFunction(t0=0.0, t1=1.0, alpha=0.5, x0=np.array([4.0]))
    assert evaluate(x, 0.0) == pytest.approx([4.0])
    x = CalphaFunction(t0=0.0, t1=1.0, alpha=1.0, x0=np.zeros(1), psi_smooth=lambda t: np.ones(1))
    assert evaluate(x, 0.6) == pytest.approx([0.6], rel=1e-13)
    x = CalphaFunction(
        t0=0.0, t1=1.0, alpha=0.5, x0=np.zeros(1),
        psi_smooth=lambda t: np.array([gamma(1.5)]),
    )
    assert evaluate(x, 0.49) == pytest.approx([0.7], abs=1e-12)


def test_evaluate_power_terms_match_independent_quadrature():
    x = CalphaFunction(
        t0=0.0, t1=1.0, alpha=0.5, x0=np.zeros(1),
        power_terms=(PowerTerm(np.array([1.3]), 0.3),),
    )
    t = 0.7
    ref = 1.3 * float(
        mpmath.quad(lambda u: (t - u) ** (-0.5) * (1.0 - u) ** 0.3, [0.0, t])
    ) / gamma(0.5)
    assert evaluate(x, t) == pytest.approx([ref], abs=1e-9)


def test_representation_identity_random_polynomials():
    rng = np.random.default_rng(11)
    for _ in range(5):
        coeffs = rng.uniform(-1.0, 1.0, 4)
        psi = lambda t, c=coeffs: np.array([np.polynomial.polynomial.polyval(t, c)])
        x = CalphaFunction(t0=0.0, t1=1.0, alpha=0.6, x0=np.array([0.4]), psi_smooth=psi)
        for t in (0.25, 0.8):
            ref = float(
                mpmath.quad(lambda u: (t - u) ** (-0.4) * psi(u)[0], [0.0, t])
            ) / gamma(0.6)
            assert evaluate(x, t) == pytest.approx([0.4 + ref], abs=1e-10)


@pytest.mark.parametrize(
    "f,alpha,bound",
    [
        (lambda t: 1.0, 0.5, 1e-13),
        (math.sin, 0.5, 1e-10),
        (lambda t: t**2, 1.0, 1e-12),
    ],
)
def test_composition_residuals(f, alpha, bound):
    r_deriv, r_quad = composition_residual(f, alpha, 0.0, 1.0)
    assert r_deriv == 0.0
    assert r_quad <= bound


@pytest.mark.parametrize("alpha,beta_ord", [(0.5, 0.5), (0.7, 0.3), (0.5, 1.5), (1.0, 1.0)])
def test_s_operator_constant_closed_form(alpha, beta_ord):
    # (S1)(t) = Gamma(beta)/Gamma(alpha+beta) (t1-t)^alpha
    for t in (0.0, 0.3, 0.99):
        val = s_operator(lambda s: 1.0, alpha, beta_ord, 0.0, 1.0, t)
        exact = gamma(beta_ord) / gamma(alpha + beta_ord) * (1.0 - t) ** alpha
        assert abs(float(val) - exact) <= 1e-10


def test_s_operator_zero_and_endpoint():
    assert float(s_operator(lambda s: 0.0, 0.5, 0.5, 0.0, 1.0, 0.4)) == 0.0
    # beta > alpha: continuous extension by zero at t1
    assert float(s_operator(math.cos, 0.5, 1.5, 0.0, 1.0, 1.0)) == 0.0
    # beta <= alpha: extension value stays close to the near-boundary values
    near = float(s_operator(lambda s: 1.0, 0.5, 0.5, 0.0, 1.0, 1.0 - 1e-7))
    ext = float(s_operator(lambda s: 1.0, 0.5, 0.5, 0.0, 1.0, 1.0))
    assert ext == pytest.approx(near, abs=1e-3)


def test_s_operator_continuity_rate():
    # adjacent differences shrink at rate >= min(alpha, alpha+beta-1, 1)
    alpha, beta_ord = 0.6, 0.8
    a = lambda t: 1.0 + t - 0.5 * t**2
    q = min(alpha, alpha + beta_ord - 1.0, 1.0)

    def max_diff(h):
        ts = np.arange(0.0, 1.0 + 1e-12, h)
        vals = [float(s_operator(a, alpha, beta_ord, 0.0, 1.0, float(t))) for t in ts]
        return max(abs(v2 - v1) for v1, v2 in zip(vals, vals[1:]))

    d1, d2 = max_diff(0.02), max_diff(0.005)
    assert d2 < d1
    rate = math.log(d1 / d2) / math.log(0.02 / 0.005)
    assert rate >= q - 0.1
