"""Exception hierarchy.

Every error raised on purpose by the library derives from :class:`QEPError`,
which itself is a ``ValueError`` so callers that only care about bad input can
catch the builtin.
"""


class QEPError(ValueError):
    """Base class for all library errors."""


class NonHermitian(QEPError):
    pass


class NotPSD(QEPError):
    pass


class NotNormalized(QEPError):
    pass


class SingularInput(QEPError):
    pass


class DimensionMismatch(QEPError):
    pass


class LengthMismatch(QEPError):
    pass


class NotPartition(QEPError):
    pass


class NotUnitary(QEPError):
    pass


class NotProjector(QEPError):
    pass


class NotResolution(QEPError):
    pass


class WeightMismatch(QEPError):
    pass


class ZeroProbability(QEPError):
    """Conditioning on an event whose probability is (numerically) zero."""


class ZeroEvidence(ZeroProbability):
    pass


class SupportViolation(QEPError):
    """An absolute-continuity requirement between two states fails."""


class InfiniteDivergence(SupportViolation):
    pass


class NonCommutingSupports(QEPError):
    pass


class Infeasible(QEPError):
    pass


class MaxIterExceeded(QEPError):
    pass


class UnknownTheorem(QEPError):
    pass
