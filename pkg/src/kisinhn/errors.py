"""Exception types shared across the package."""


class KisinError(Exception):
    """Base class for all library errors."""


class ParseError(KisinError):
    """Malformed Laurent literal or module file."""


class InsufficientPrecision(KisinError):
    """A valuation or pivot decision cannot be certified at the working precision."""


class NonSquare(KisinError):
    """A square matrix was required (determinants, Smith form of full lattices)."""


class SingularMatrix(KisinError):
    """Matrix is not invertible over the Laurent series field."""


class SeedPrecisionTooSmall(KisinError):
    """Requested seed depth is below the contraction threshold N0."""


class NonConvergence(KisinError):
    """Fixed-point iteration failed to converge within the step budget."""


class FiltrationWitnessNotNested(KisinError):
    """Greedy HN construction produced witnesses that do not form a chain."""


class NotEffective(KisinError):
    """Operation requires an effective module (all elementary divisors >= 0)."""


class DimensionMismatch(KisinError):
    """Vectors or subspaces do not live in the expected ambient dimension."""


class LengthMismatch(DimensionMismatch):
    """Sequences compared entrywise have different lengths."""


class NotUnstable(KisinError):
    """Kempf filtration requested for a semi-stable subspace."""


class AmbiguousMaximizer(KisinError):
    """Two distinct filtrations tie for the instability maximum."""


class ScaleTooLarge(KisinError):
    """Input exceeds the supported desk-scale budget."""


class DetConstraintInfeasible(KisinError):
    """No lattice satisfies the determinant constraint for the given Hodge type."""


class BudgetExceeded(KisinError):
    """Enumeration exceeded its configured point budget."""


class NotDominating(KisinError):
    """Polygon does not lie on or above the reference polygon."""


class TameDegreeNotCoprime(KisinError):
    """Tame base change degree must be coprime to p."""
