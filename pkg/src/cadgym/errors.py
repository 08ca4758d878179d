"""Exception hierarchy shared across the package."""


class CadGymError(Exception):
    """Base class for all package errors."""


class GeometryError(CadGymError):
    """Invalid geometric construction (open loop, zero area, bad axis...)."""


class OutOfDomain(CadGymError):
    """Parametric coordinates outside a face's domain."""


class NotPlanar(CadGymError):
    pass


class NotParallel(CadGymError):
    pass


class Coplanar(CadGymError):
    pass


class UnsupportedSurface(CadGymError):
    pass


class InvalidOpForState(CadGymError):
    """Boolean op incompatible with the current solid (e.g. union on empty)."""


class EmptyTarget(CadGymError):
    pass


class EmptyCloud(CadGymError):
    pass


class SizeMismatch(CadGymError):
    pass


class EmptySet(CadGymError):
    pass


class ShapeMismatch(CadGymError):
    pass


class VersionMismatch(CadGymError):
    pass


class LengthMismatch(CadGymError):
    pass


class UnknownTarget(CadGymError):
    pass


class EpisodeFinished(CadGymError):
    pass


class InvalidMark(CadGymError):
    pass


class QuotaUnreachable(CadGymError):
    pass


class CorruptRecord(CadGymError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class DslSyntaxError(CadGymError):
    """Lexical or grammatical error in DSL text, with position info."""

    def __init__(self, message, line, column):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class DslSemanticError(CadGymError):
    """Well-formed DSL text violating a semantic rule."""
