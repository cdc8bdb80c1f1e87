"""Exception taxonomy for the library.

Every error raised by the geometric modules derives from GeometryError so
callers (and the CLI exit-code mapping) can treat the taxonomy as closed.
"""


class GeometryError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(GeometryError):
    """Operand dimensions are incompatible with the object's shape."""


class RankDeficient(GeometryError):
    """Matrix rows are dependent beyond tolerance; the dual basis is undefined."""


class NotContracting(GeometryError):
    """A row-span projection was requested on a square (full-rank) frame."""


class DegenerateBias(GeometryError):
    """Output layer bias is zero, so the kernel hyperplane passes through the origin."""


class DegenerateDirection(GeometryError):
    """An output weight vanishes; the pulled-back hyperplane is parallel to a dual line."""


class AllNegative(GeometryError):
    """Every intersection value is negative; the decision boundary is empty."""


class InvalidM(GeometryError):
    """Requested canonical class index is outside 0..d-1."""


class EmptyPiece(GeometryError):
    """Sampling was requested on a boundary piece with no points."""


class EmptyIntersection(GeometryError):
    """No boundary samples fall inside the nonnegative orthant at this level."""


class EnumerationLimit(GeometryError):
    """Combinatorial enumeration refused: the index dimension exceeds the guard."""


class SchemaError(GeometryError):
    """Input file or request does not conform to the documented schema."""
