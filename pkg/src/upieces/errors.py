"""Exception types shared across the package."""


class UpiecesError(Exception):
    """Base class for all library errors."""


class UnsupportedField(UpiecesError):
    """Requested field size is not a supported prime power."""


class CharMismatch(UpiecesError):
    """Operation requires a different field characteristic."""


class DimensionMismatch(UpiecesError):
    """Operands live in incompatible spaces or fields."""


class NotNilpotent(UpiecesError):
    """Matrix expected to be nilpotent is not."""


class NotUnipotent(UpiecesError):
    """Matrix expected to be unipotent is not."""


class DegreeMismatch(UpiecesError):
    """Map is not homogeneous of the required degree."""


class NotInE3(UpiecesError):
    """Perturbation does not raise filtration degree by at least 3."""


class NotPrimitive(UpiecesError):
    """Vector is not in the requested primitive subspace."""


class NotCommuting(UpiecesError):
    """Graded map does not commute with the graded nilpotent."""


class OddDimension(UpiecesError):
    """Symplectic space must have even dimension."""


class NotMMember(UpiecesError):
    """Nilpotent is not a member of the symplectic log-free set."""


class NotSpMember(UpiecesError):
    """Matrix does not preserve the symplectic form."""


class NotInL(UpiecesError):
    """Index is outside the set where the small quadratic form is defined."""


class NotInLprime(UpiecesError):
    """Index is outside the set where the big quadratic form is defined."""


class InadmissibleLabel(UpiecesError):
    """Piece label violates the admissibility conditions for the group."""


class IncompatibleQ(UpiecesError):
    """Quadratic form does not polarize to the prescribed bilinear form."""


class ScaleExceeded(UpiecesError):
    """Requested computation is beyond the supported desk scale."""


class RangeError(UpiecesError):
    """Numeric argument outside the valid range."""


class NonIntegralFit(UpiecesError):
    """Interpolating polynomial has a non-integer coefficient."""
