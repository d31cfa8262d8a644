"""Exception hierarchy shared by every module."""


class CknError(Exception):
    """Base class for all toolkit errors."""


class DomainError(CknError, ValueError):
    """An argument lies outside the domain of the operation."""


class SpecError(CknError, ValueError):
    """A weight specification is malformed."""


class ParseError(SpecError):
    """The weight mini-language could not be parsed.

    ``position`` is the 0-based character offset of the failure.
    """

    def __init__(self, message, text, position):
        self.message = message
        self.text = text
        self.position = position
        caret = " " * position + "^"
        super().__init__(f"{message} at position {position}\n  {text}\n  {caret}")


class UnsupportedClassError(CknError, ValueError):
    """The weight is not in W0 or Winf, so no monotone rearrangement exists."""


class PlateauImageError(DomainError):
    """The requested level is the value of the envelope on a plateau."""


class SupportError(DomainError):
    """A test function's support does not fit inside the admissible interval."""


class HypothesisError(CknError, ValueError):
    """A hypothesis required by the operation is not met."""


class UnsupportedDimensionError(DomainError):
    """Non-radial functionals are only implemented on the circle (n = 2)."""
