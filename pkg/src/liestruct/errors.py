"""Exception hierarchy shared by every liestruct module."""


class LiestructError(Exception):
    """Base class for all library errors."""


class UnknownAlgebra(LiestructError, KeyError):
    pass


class MissingBinding(LiestructError, KeyError):
    pass


class ParameterOutOfRange(LiestructError, ValueError):
    pass


class SingularBinding(LiestructError, ValueError):
    """An automorphism binding produced a singular matrix or a zero denominator."""


class ConstraintViolation(LiestructError, ValueError):
    """A circle/hyperbola coordinate pair is off its curve."""


class DimensionMismatch(LiestructError, ValueError):
    pass


class UnderDetermined(LiestructError, ValueError):
    pass


class Inconsistent(LiestructError, ValueError):
    pass


class SingularMatrix(LiestructError, ValueError):
    pass


class SingularMetric(SingularMatrix):
    pass


class IncompatibleInputs(LiestructError, ValueError):
    pass


class NotApplicable(LiestructError):
    """Raised when an H-induced bracket cannot be isomorphic to the algebra."""


class ScalarMixing(LiestructError, TypeError):
    """Exact and floating scalars met without an explicit conversion."""
