"""Exception hierarchy for orbiflow.

Every error raised by the library derives from OrbiflowError so callers can
catch broadly; the CLI maps OrbiflowError to exit code 1 and iteration /
assertion failures to exit code 2.
"""


class OrbiflowError(Exception):
    """Base class for all orbiflow errors."""


# -- geometry kernel ---------------------------------------------------------

class GeometryError(OrbiflowError):
    pass


class VectorTooLong(GeometryError):
    """Exponential argument leaves the injectivity domain (spherical case)."""


class OutOfInjectivityRadius(GeometryError):
    pass


class AntipodalPoints(GeometryError):
    pass


class NonUniqueGeodesic(GeometryError):
    pass


class BaseMismatch(GeometryError):
    """A tangent vector was supplied at the wrong base point."""


# -- atlas -------------------------------------------------------------------

class AtlasError(OrbiflowError):
    pass


class InvalidSpec(AtlasError):
    pass


class DegenerateModel(AtlasError):
    pass


class UnknownChart(AtlasError):
    pass


class NoGermAvailable(AtlasError):
    pass


class IncompatibleGerms(AtlasError):
    pass


class ChartPlacementError(AtlasError):
    """No chart ball can host a short arc; indicates a broken atlas."""


# -- cycle space -------------------------------------------------------------

class CycleError(OrbiflowError):
    pass


class EndpointMismatch(CycleError):
    pass


class GermChainBroken(CycleError):
    pass


class LipschitzExceeded(CycleError):
    pass


class GermNotApplicable(CycleError):
    pass


class NotFigure8(CycleError):
    pass


class JunctionMismatch(CycleError):
    pass


class SingularJunction(CycleError):
    pass


# -- birkhoff ----------------------------------------------------------------

class SegmentTooLong(OrbiflowError):
    """A grid cell exceeds the covering margin; break number too small."""


# -- descent -----------------------------------------------------------------

class DescentError(OrbiflowError):
    pass


class NotInG(DescentError):
    """Cycle has a segment longer than delta/2."""


class NotInLittleG(DescentError):
    """Cycle has a segment longer than delta/4."""


class NotTypeInvariant(DescentError):
    pass


class StepTooLarge(DescentError):
    pass


class NotStable(DescentError):
    pass


class TrivialCycle(DescentError):
    pass


# -- drivers -----------------------------------------------------------------

class MaxItersExceeded(OrbiflowError):
    """Shortening did not terminate; carries the best cycle seen so far."""

    def __init__(self, message, best=None, trace=None):
        super().__init__(message)
        self.best = best
        self.trace = trace


class NoClearPoint(OrbiflowError):
    """epsilon too large: no regular point clears all singular points."""


class TriangulationFailed(OrbiflowError):
    pass


class StageJoinMismatch(OrbiflowError):
    pass


class OracleInconclusive(OrbiflowError):
    pass
