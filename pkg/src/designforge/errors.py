"""Exception hierarchy.

Every error carries a short machine-readable ``code`` that the command line
front end reports on stderr.
"""


class DesignForgeError(Exception):
    code = "error"


class DimensionLimitError(DesignForgeError):
    code = "dimension_limit"


class SizeError(DesignForgeError):
    code = "size"


class ShapeError(DesignForgeError, ValueError):
    code = "shape"


class PlacementError(DesignForgeError, ValueError):
    code = "placement"


class DomainError(DesignForgeError, ValueError):
    code = "domain"


class PreconditionError(DesignForgeError, ValueError):
    code = "precondition"


class NumericalRankError(DesignForgeError):
    code = "numerical_rank"


class SymmetryError(DesignForgeError):
    code = "symmetry"


class BoundsError(DesignForgeError, IndexError):
    code = "bounds"


class RoundingError(DesignForgeError, ValueError):
    """Parameters off the admissible grid of the cascade construction."""

    code = "rounding"


class ConstructionError(DesignForgeError):
    code = "construction"

    def __init__(self, message, best_mu=None):
        super().__init__(message)
        self.best_mu = best_mu


class ConvergenceError(DesignForgeError):
    code = "convergence"

    def __init__(self, message, last_iterate=None, last_value=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.last_value = last_value
