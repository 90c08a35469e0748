"""Exception hierarchy shared by every module of the package."""


class NuisanceError(Exception):
    """Base class for all errors raised by nuisblue."""


class RankDeficient(NuisanceError):
    pass


class DegenerateShape(NuisanceError):
    pass


class NotSPD(NuisanceError):
    pass


class RankViolation(RankDeficient):
    """The stacked design ``[H G]`` (or a reduced form of it) lost column rank."""


class ShapeViolation(NuisanceError):
    pass


class TooFewNonZeros(NuisanceError):
    """A nuisance column has fewer than two usable entries to difference against."""


class ReferenceOnZeroRow(NuisanceError):
    pass


class IndexOutOfRange(NuisanceError, IndexError):
    pass


class TargetOnAnchor(NuisanceError):
    pass


class ExpansionPointOnAnchor(NuisanceError):
    pass


class NonPositiveRange(NuisanceError):
    pass


class NonPositiveGamma(NuisanceError):
    pass


class SingularFIM(NuisanceError):
    pass


class EmptyInput(NuisanceError, ValueError):
    pass


class ConfigError(NuisanceError):
    """Malformed campaign configuration; ``lineno`` is set when known."""

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
