"""Exception hierarchy shared by all fvc modules."""


class FvcError(Exception):
    """Base class for all toolkit errors."""


class DomainError(FvcError):
    """Argument outside the mathematical domain of an operation."""


class LimitError(FvcError):
    """Resource limit exceeded (e.g. quadrature node count out of range)."""


class ParseError(FvcError):
    """Expression text could not be parsed.

    Carries the byte offset of the failure and the set of tokens that
    would have been accepted there.
    """

    def __init__(self, message: str, offset: int, expected: set[str] | None = None):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset
        self.expected = expected or set()


class DimensionError(FvcError):
    """Variable index exceeds the declared state dimension."""


class EvalError(FvcError):
    """Numeric domain violation during expression evaluation (log/sqrt/...)."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{message}" + (f" in `{where}`" if where else ""))
        self.where = where


class AdmissibilityError(FvcError):
    """Trajectory or variation violates the variant's boundary conditions."""


class JumpPointError(FvcError):
    """Evaluation requested at a declared discontinuity of the Caputo derivative."""


class SchemaError(FvcError):
    """Trajectory or config file does not match the documented schema."""


class DegenerateBump(FvcError):
    """Mean-value bump collapsed: the profile function is constant on the support."""


class SingularSystem(FvcError):
    """Endpoint/transversality linear system is rank-deficient."""


class ConfigError(FvcError):
    """Run configuration is malformed or inconsistent."""
