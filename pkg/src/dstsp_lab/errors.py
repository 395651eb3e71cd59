"""Exception types shared across the laboratory."""


class InvalidPlan(ValueError):
    """A collection plan violates its instance: cursor underflow, collecting a
    target off its path, a double collect, a missed target, or not returning
    to the root."""


class SearchSpaceTooLarge(ValueError):
    """Brute-force guards exceeded (instance too large for exact search)."""


class HypothesisViolated(ValueError):
    """Parameters fall outside the regime a closed-form bound requires."""


class ControlOutOfRange(ValueError):
    """A control input exceeds the model's admissible set."""


class NotSymmetric(ValueError):
    """Trajectory reversal requested for a model without reversible motion."""


class EmptyPointSet(ValueError):
    """Volume of an empty set of sample points is undefined."""


class DegenerateFit(ValueError):
    """Log-log fit too poor to trust (undersampled or resolution too coarse)."""


class NonIntegerGamma(ValueError):
    """Cell subdivision requires an integer growth exponent."""


class OutOfSupport(ValueError):
    """A point lies outside the covered region."""


class CellNotContained(ValueError):
    """A cell's box is not contained in its anchor's reachable set."""


class TargetOutsideCover(ValueError):
    """A target cannot be located in any root cell of the cover."""


class TooLarge(ValueError):
    """Exact enumeration refused: instance exceeds the small-case guards."""


class NonpositiveZeta(ValueError):
    """Envelope regularization requires a strictly positive floor."""


class GridMismatch(ValueError):
    """Two grid fields do not share origin, cell size, and dimensions."""


class AlphaOutOfRange(ValueError):
    """A cell-volume fraction must lie in (0, 1]."""


class OutOfGrid(ValueError):
    """A trajectory leaves the region where the cost field is defined."""


class ZeroMass(ValueError):
    """A bound is undefined at zero expected occupancy."""


class AllZeroFailures(ValueError):
    """Every measured failure probability is zero: below measurement floor."""


class ConfigError(ValueError):
    """Bad run configuration (unknown field, wrong type, missing value)."""
