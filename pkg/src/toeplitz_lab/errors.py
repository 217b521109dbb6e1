"""Exception hierarchy.

Every error carries a stable string ``code`` and the CLI exit status it maps to
(2 parse/config, 3 numeric, 4 domain violation).
"""


class LabError(Exception):
    code = "LAB_ERROR"
    exit_code = 3

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context

    def __str__(self):
        return f"{self.code}: {self.args[0]}"


class DimensionMismatch(LabError, ValueError):
    code = "DIMENSION_MISMATCH"
    exit_code = 2


class ConeViolation(LabError, ValueError):
    code = "CONE_VIOLATION"


class BranchFailure(LabError, ArithmeticError):
    code = "BRANCH_FAILURE"


class StepExitsDomain(LabError, ValueError):
    code = "STEP_EXITS_DOMAIN"
    exit_code = 4


class PointNotInDomain(LabError, ValueError):
    code = "POINT_NOT_IN_DOMAIN"
    exit_code = 4


class SolveFailure(LabError, ArithmeticError):
    code = "SOLVE_FAILURE"


class NotAWeightVector(LabError, ValueError):
    code = "NOT_A_WEIGHT_VECTOR"


class OutOfRange(LabError, ValueError):
    code = "OUT_OF_RANGE"
    exit_code = 2


class ParseError(LabError, ValueError):
    code = "PARSE_ERROR"
    exit_code = 2

    def __init__(self, message, position=None, **context):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message, position=position, **context)
        self.position = position


class VariableError(ParseError):
    code = "VARIABLE_ERROR"


class PhaseWeightError(ParseError):
    code = "PHASE_WEIGHT_ERROR"


class KindError(LabError, TypeError):
    code = "KIND_ERROR"
    exit_code = 2


class EvalDomainError(LabError, ArithmeticError):
    code = "EVAL_DOMAIN_ERROR"


class SamplingStall(LabError, RuntimeError):
    code = "SAMPLING_STALL"


class IllConditioned(LabError, ArithmeticError):
    code = "ILL_CONDITIONED"


class UnsupportedLambda(LabError, ValueError):
    code = "UNSUPPORTED_LAMBDA"
    exit_code = 2


class ExponentRange(LabError, ValueError):
    code = "EXPONENT_RANGE"
    exit_code = 2


class ConfigError(LabError, ValueError):
    code = "CONFIG_ERROR"
    exit_code = 2


class LabWarning(UserWarning):
    """Non-fatal numerical diagnostics (conditioning, variance guard, envelope caps)."""
