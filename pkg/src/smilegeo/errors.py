"""Exception hierarchy shared across the package."""


class SmileGeoError(Exception):
    """Base class for all smilegeo errors."""


class DegenerateTenor(SmileGeoError):
    """d1/d2 requested with zero tenor or zero volatility."""


class PriceOutOfBand(SmileGeoError):
    """Option price violates the no-arbitrage band, no implied vol exists."""


class NoConvergence(SmileGeoError):
    """Iterative solver exhausted its iteration budget."""


class InconsistentForward(SmileGeoError):
    """Distribution mean does not match the market forward."""


class TargetOutsideDomain(SmileGeoError):
    """Delta target cannot be bracketed inside the smile domain."""


class DomainTooNarrow(SmileGeoError):
    """Requested evaluation grid exceeds the smile domain."""


class OriginOutsideShape(SmileGeoError):
    """Shape cannot be inverted: rays from the origin miss it or cut it twice."""


class NonpositiveVol(SmileGeoError):
    """Inverted shape implies a non-positive volatility somewhere on the grid."""


class CollinearPoints(SmileGeoError):
    """Three points do not define a circle."""


class DegenerateConfiguration(SmileGeoError):
    """Five points do not define a unique conic (rank below 5)."""


class NotAnEllipse(SmileGeoError):
    """Fitted conic fails the ellipse discriminant test."""


class CurveTooShort(SmileGeoError):
    """Too few points for curvature differentiation stencils."""


class DisjointSupport(SmileGeoError):
    """Density curves share no strike overlap."""


class DegenerateMass(SmileGeoError):
    """Density grid carries too little probability mass for a stable fit."""


class MissingAnchor(SmileGeoError):
    """A required anchor quote (25P / ATM / 25C) is absent."""


class ParseError(SmileGeoError):
    """Malformed surface CSV input."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", field {field!r})" if field else ")")
        super().__init__(message + loc)
