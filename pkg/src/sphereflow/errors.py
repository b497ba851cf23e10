"""Exception types shared across the package."""


class SphereflowError(Exception):
    """Base class for all package errors."""


class ConeDomainError(SphereflowError):
    """A curvature vector left the open positive cone of an admissible speed."""


class SpeedEvaluationError(SphereflowError):
    """A speed function returned a non-finite value; carries the offending input."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ConvexityLostError(SphereflowError):
    """Convexity failed at a grid node under a cone-restricted speed."""

    def __init__(self, node_index, t=None, kappa=None):
        super().__init__(
            f"convexity lost at node {node_index}"
            + (f" (t={t:.6g})" if t is not None else "")
        )
        self.node_index = node_index
        self.t = t
        self.kappa = kappa


class NumericalBlowupError(SphereflowError):
    """NaN/Inf appeared during time stepping; carries the last valid state."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class PoleMarginError(SphereflowError):
    """A radial graph came too close to a coordinate pole."""


class HemisphereError(SphereflowError):
    """A spherical curve left the open hemisphere required by the projection."""


class IntegrationStallError(SphereflowError):
    """An ODE integration could not proceed even in the substituted variable."""


class CalibrationError(SphereflowError):
    """A closed-form family failed its self-consistency gate."""


class ConfigError(SphereflowError):
    """A run configuration failed schema validation; carries a JSON pointer."""

    def __init__(self, message, pointer=""):
        super().__init__(message)
        self.pointer = pointer
