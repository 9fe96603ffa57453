"""Exception and warning types shared across the package."""


class KokotsakisError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateCorner(KokotsakisError):
    """A triple-product denominator vanishes at a central vertex."""

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"degenerate corner at vertex {index}")


class CoincidentLines(KokotsakisError):
    pass


class NotCollinear(KokotsakisError):
    pass


class InfiniteEndpoint(KokotsakisError):
    pass


class DegenerateAngle(KokotsakisError):
    pass


class WingPlaneParallelToBase(KokotsakisError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"wing plane at vertex {index} is parallel to the central plane")


class NonPlanarCentralFace(KokotsakisError):
    pass


class UnsupportedInfinityPattern(KokotsakisError):
    pass


class ConstructionDegenerate(KokotsakisError):
    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"witness construction degenerate at step {step}")


class StepFailure(KokotsakisError):
    pass


class EliminationSingular(KokotsakisError):
    pass


class BothZero(KokotsakisError):
    pass


class InfeasibleParameters(KokotsakisError):
    pass


class NoRealRealization(KokotsakisError):
    pass


class MeshFormatError(KokotsakisError, ValueError):
    """Base class for document loading problems."""


class ParseError(MeshFormatError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class SchemaVersionMismatch(MeshFormatError):
    pass


class LengthError(MeshFormatError):
    pass


class NormalizationFallback(UserWarning):
    """The designated normalization coefficient vanished; another one was used."""


class UnreliableOrder(UserWarning):
    """A finite-difference derivative estimate is dominated by its error bar."""
