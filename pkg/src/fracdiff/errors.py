"""Exception hierarchy. Each class carries a short machine-readable code."""


class FracDiffError(Exception):
    code = "ERROR"
    exit_code = 2


class TailNotIntegrable(FracDiffError):
    code = "TAIL_NOT_INTEGRABLE"


class GridMismatch(FracDiffError):
    code = "GRID_MISMATCH"


class PoleError(FracDiffError):
    code = "POLE"


class OutOfRange(FracDiffError):
    code = "OUT_OF_RANGE"


class NonpositiveArgument(FracDiffError):
    code = "NONPOSITIVE_ARGUMENT"


class NegativeArgument(FracDiffError):
    code = "NEGATIVE_ARGUMENT"


class NewtonDiverged(FracDiffError):
    code = "NEWTON_DIVERGED"


class OrderViolation(FracDiffError):
    code = "ORDER_VIOLATION"


class NonConvergent(FracDiffError):
    code = "NON_CONVERGENT"


class NotConverging(FracDiffError):
    code = "NOT_CONVERGING"
    exit_code = 3


class NonpositiveProfile(FracDiffError):
    code = "NONPOSITIVE_PROFILE"


class NotRearranged(FracDiffError):
    code = "NOT_REARRANGED"


class MassMismatch(FracDiffError):
    code = "MASS_MISMATCH"


class PreconditionFailed(FracDiffError):
    code = "PRECONDITION_FAILED"


class WindowTooShort(FracDiffError):
    code = "WINDOW_TOO_SHORT"


class SupportViolation(FracDiffError):
    code = "SUPPORT_VIOLATION"


class ConfigError(FracDiffError):
    code = "PARSE_ERROR"
    exit_code = 1
