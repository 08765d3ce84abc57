"""Exception types raised across hopflax."""


class HopflaxError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(HopflaxError, ValueError):
    """Input data violates a documented precondition."""


class AsymmetricDistance(ValidationError):
    def __init__(self, i, j, dij, dji):
        self.indices = (i, j)
        super().__init__(f"dist({i},{j})={dij!r} differs from dist({j},{i})={dji!r}")


class NegativeDistance(ValidationError):
    def __init__(self, i, j, value):
        self.indices = (i, j)
        super().__init__(f"dist({i},{j})={value!r} is negative")


class CoincidentPoints(ValidationError):
    def __init__(self, i, j):
        self.indices = (i, j)
        super().__init__(f"distinct points {i} and {j} are at distance 0")


class NonzeroDiagonal(ValidationError):
    def __init__(self, i, value):
        self.indices = (i,)
        super().__init__(f"dist({i},{i})={value!r} must be 0")


class TriangleViolation(ValidationError):
    def __init__(self, x, y, z, excess):
        self.indices = (x, y, z)
        self.excess = excess
        super().__init__(
            f"dist({x},{z}) exceeds dist({x},{y}) + dist({y},{z}) by {excess:.3e}"
        )


class DisconnectedGraph(ValidationError):
    def __init__(self, components):
        self.components = components
        listing = "; ".join("{" + ", ".join(map(str, c)) + "}" for c in components)
        super().__init__(f"graph has {len(components)} components: {listing}")


class DualDiverges(HopflaxError, ValueError):
    def __init__(self, u, ell):
        self.u, self.ell = u, ell
        super().__init__(f"Legendre dual is +inf at u={u!r} (asymptotic slope {ell!r})")


class NotDelta2(HopflaxError, ValueError):
    def __init__(self, ratio, at):
        self.ratio, self.at = ratio, at
        super().__init__(f"alpha(2x)/alpha(x) reaches {ratio:.3e} at x={at:.3e}")


class NotCConvex(HopflaxError, ValueError):
    def __init__(self, deviation):
        self.deviation = deviation
        super().__init__(f"field is not c-convex: max |P_c Q_c f - f| = {deviation:.3e}")


class NonPositiveField(ValidationError):
    def __init__(self, index, value):
        self.index = index
        super().__init__(f"field value {value!r} at index {index} must be positive")


class InvalidMeasure(ValidationError):
    pass


class InfeasibleMarginals(HopflaxError, ValueError):
    def __init__(self, sum1, sum2):
        super().__init__(f"marginal masses differ: {sum1!r} vs {sum2!r}")


class FieldOutsideClass(HopflaxError, ValueError):
    def __init__(self, slope, ell):
        super().__init__(f"max slope {slope!r} exceeds asymptotic cost slope {ell!r}")


class ParameterOutOfRange(HopflaxError, ValueError):
    """A scalar argument lies outside its admissible interval."""


class LambdaOutOfRange(ParameterOutOfRange):
    pass


class UOutOfRange(ParameterOutOfRange):
    pass


class XOutOfRange(ParameterOutOfRange):
    pass


class TOutOfRange(ParameterOutOfRange):
    pass


class NonPositiveExponent(ParameterOutOfRange):
    def __init__(self, t, k):
        self.t = t
        super().__init__(f"exponent schedule k({t!r}) = {k!r} is not positive")


class DegenerateSchedule(ParameterOutOfRange):
    pass


class ThetaBelowFloor(ValidationError):
    pass


class ParseError(HopflaxError):
    def __init__(self, path, line, message):
        self.path, self.line = path, line
        super().__init__(f"{path}:{line}: {message}")
