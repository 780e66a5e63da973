"""Exception types shared across the package."""


class AtomsimError(Exception):
    """Base class for all package-specific errors."""


class LatticeMismatchError(AtomsimError):
    """Two objects built on different lattices were combined."""


class PatternFitError(AtomsimError):
    """Requested target pattern does not fit inside the lattice."""


class InfeasibleInstanceError(AtomsimError):
    """Instance has fewer atoms than target sites, or a region cannot be opened."""


class InvalidPlanError(AtomsimError):
    """Plan failed sequential validation."""

    def __init__(self, violation):
        self.violation = violation
        super().__init__(str(violation))


class OracleLimitError(AtomsimError):
    """Exhaustive oracle exceeded its size bound or node budget."""
