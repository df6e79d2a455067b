"""Fractional variational calculus toolkit.

Trajectories live in C^alpha / PC^alpha form (initial value plus Caputo
derivative), functionals carry the weight (t1-t)^(beta-1), and the
first- and second-order necessary conditions split by the regime
beta > alpha versus beta <= alpha.
"""

from .errors import (
    AdmissibilityError,
    ConfigError,
    DegenerateBump,
    DimensionError,
    DomainError,
    EvalError,
    FvcError,
    JumpPointError,
    LimitError,
    ParseError,
    SchemaError,
    SingularSystem,
)
from .expr import Expr, eval_jet2, parse, terminant_jet2, to_string
from .fracops import (
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
from .legendre import (
    BumpKind,
    LegendreReport,
    bump_variation,
    legendre_check,
    pqr_along,
    second_variation_probe,
)
from .quadrature import QuadRule, integrate_weighted, integrate_weighted_split, jacobi_rule
from .solver import SolveOutcome, direct_minimize, solve_separable
from .special import beta, gamma, log_gamma, power_inequality_gap
from .variational import (
    ElReport,
    ProblemSpec,
    Variant,
    dubois_variation,
    el_residual,
    evaluate_functional,
    first_variation,
    lemma33_function,
    second_variation,
)

__version__ = "0.1.0"
