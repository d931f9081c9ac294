"""Exception types raised by primdetect."""


class PrimDetectError(Exception):
    """Base class for all library errors."""


class InvalidInputError(PrimDetectError, ValueError):
    pass


class DomainError(InvalidInputError):
    """Parameter value outside a patch's domain."""


class InvalidTransformError(InvalidInputError):
    pass


class InsufficientSamplesError(InvalidInputError):
    def __init__(self, n_points, n_required, degree):
        self.n_points = n_points
        self.n_required = n_required
        self.degree = degree
        super().__init__(
            f"degree {degree} implicitization needs at least {n_required} "
            f"points (N_min), got {n_points}"
        )


class UnsupportedDegreeError(InvalidInputError):
    pass


class NumericalError(PrimDetectError, ArithmeticError):
    pass


class DegreeOverflowError(PrimDetectError):
    """No degree up to the cap passed its threshold.

    ``spectrum`` maps each tried degree to the smallest singular value found.
    """

    def __init__(self, spectrum, m_cap):
        self.spectrum = dict(spectrum)
        self.m_cap = m_cap
        super().__init__(f"no implicit degree <= {m_cap} qualifies; sigma_min spectrum {self.spectrum}")


class PreconditionError(PrimDetectError):
    pass
