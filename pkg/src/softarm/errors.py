"""Exception types shared across the package."""


class SoftArmError(Exception):
    """Base class for all softarm errors."""


class ActionError(SoftArmError):
    """A cable action violates the zero-sum or range contract."""


class ActuationRangeError(ActionError):
    """A requested motion needs cable displacements beyond the hardware range."""


class ShapeMismatchError(SoftArmError):
    """A network input or weight has the wrong shape for the declared spec."""


class ModelFormatError(SoftArmError):
    """A model bundle file is missing, truncated, corrupted, or wrong version."""


class DatasetFormatError(SoftArmError):
    """A dataset or trajectory log file cannot be parsed."""


class PlanningError(SoftArmError):
    """The configuration planner hit a non-finite cost and refused to move."""
