"""Exception types raised across the package."""


class GlergError(Exception):
    """Base class for all package errors."""


# number field
class BasisMismatch(GlergError):
    pass


class UnsupportedProduct(GlergError):
    pass


class UnsupportedInverse(GlergError):
    pass


class RefinementBudgetExceeded(GlergError):
    pass


# expressions / indicators
class NotBounded(GlergError):
    pass


class NotIntegerValued(GlergError):
    pass


class RangeEstimateUnstable(GlergError):
    pass


class NotAnIndicator(GlergError):
    pass


# torus model
class PieceExplosion(GlergError):
    pass


class PointOnNoPiece(GlergError):
    pass


class CutoffExceeded(GlergError):
    pass


class NoInteriorPiece(GlergError):
    pass


# averaging
class ComplexityRefusal(GlergError):
    pass


class NonMonotoneWeight(GlergError):
    pass


class NotFolner(GlergError):
    pass


# systems / joint ergodicity
class NonCommuting(GlergError):
    pass


class UnknownHandle(GlergError):
    pass


class UnboundedRequired(GlergError):
    pass


class HypothesisFailed(GlergError):
    pass


# dsl
class DslSyntaxError(GlergError):
    def __init__(self, line, col, expected, found=None):
        self.line = line
        self.col = col
        self.expected = frozenset(expected)
        self.found = found
        exp = ", ".join(sorted(repr(e) for e in self.expected))
        msg = f"line {line}, col {col}: expected one of {{{exp}}}"
        if found is not None:
            msg += f", found {found!r}"
        super().__init__(msg)


class UnknownName(GlergError):
    def __init__(self, name, line=None, col=None):
        self.name = name
        self.line = line
        self.col = col
        where = f" at line {line}, col {col}" if line is not None else ""
        super().__init__(f"unknown name {name!r}{where}")
