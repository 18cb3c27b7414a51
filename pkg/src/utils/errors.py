"""
Exception hierarchy for the spatial-memory pattern toolkit.
Every error raised by the analysis and simulation modules derives from MemopatError,
so the command line and the API can report them with one handler.
"""


class MemopatError(Exception):
    """Base class for all toolkit errors."""


class ModelError(MemopatError):
    pass


class NoConstantState(ModelError):
    """The growth model has no positive zero and no u_star override was given."""


class StabilityError(MemopatError):
    pass


class DegenerateMap(StabilityError):
    """w_u vanishes at the constant state: the state is stable for every alpha."""


class BifurcationError(MemopatError):
    pass


class GrowthDegenerate(BifurcationError):
    """f_u vanishes at the constant state, the second-order correction is singular."""


class DegenerateCurvature(BifurcationError):
    """alpha''(0) is zero; direction of the branch needs higher-order terms."""


class WrongSide(BifurcationError):
    """No leading-order branch exists on the requested side of the threshold."""


class CurvatureMismatch(BifurcationError):
    """Closed-form curvature disagrees with the quadrature projection."""


class SolverError(MemopatError):
    pass


class BlowUp(SolverError):
    """Non-finite values or runaway density during time stepping."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NotConverged(SolverError):
    """The steady-state criterion was not met before t_max."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SweepError(MemopatError):
    pass


class InsufficientData(SweepError):
    pass


class SubcriticalDiagram(SweepError):
    """Normal-form fitting was requested on a diagram whose local branch is unstable."""


class ConfigError(MemopatError, ValueError):
    """Base class for configuration problems. Carries the key and line when known."""

    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.key = key
        self.line = line


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass
