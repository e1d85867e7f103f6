"""Exception types shared across the package.

The CLI maps these onto exit codes: ValidationError (and subclasses) -> 2,
ConvergenceError and EvaluationFailure -> 3.
"""


class EulerLabError(Exception):
    """Base class for all package errors."""


class ValidationError(EulerLabError, ValueError):
    """Rejected input, violated operation contract, or bad usage."""


class SingularMapError(ValidationError):
    """The Jacobian determinant of a map vanishes somewhere on the grid."""


class ConvergenceError(EulerLabError, RuntimeError):
    """An iteration hit its cap without meeting its tolerance.

    ``history`` carries the per-iteration update or residual norms so the
    failure can be diagnosed from the exception alone.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = tuple(history) if history is not None else ()


class EvaluationFailure(EulerLabError, RuntimeError):
    """A right-hand-side evaluation raised mid-run.

    ``node`` identifies the collocation node (or step) at which the
    evaluation failed; ``t`` is the corresponding complex time.
    """

    def __init__(self, message, node=None, t=None):
        super().__init__(message)
        self.node = node
        self.t = t


# Dedicated message for the one initial condition the theory excludes:
# a spatially uniform velocity (pure k=0 mode) has trajectories that need
# not be analytic, and every admissible field here is mean-free.
UNIFORM_FLOW_MESSAGE = (
    "initial velocity has a nonzero spatial mean (uniform drift component); "
    "uniform flows are excluded from the analyticity machinery -- remove the "
    "k=0 mode"
)
