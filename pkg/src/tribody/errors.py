"""Exception hierarchy shared by every module."""


class ThreeBodyError(Exception):
    """Base class for all errors raised by tribody."""


class CollisionSingularity(ThreeBodyError, ArithmeticError):
    """Two bodies coincide where the force law or potential is singular."""


class TripleCollision(CollisionSingularity):
    """All three bodies sit at the centre of mass (I = 0)."""


class RankDeficient(ThreeBodyError):
    """The momentum constraint system cannot be solved."""


class HypothesisViolated(ThreeBodyError, ValueError):
    """An input does not satisfy the constraints an identity relies on."""


class CentroidNotRemoved(HypothesisViolated):
    pass


class NotDualTriplet(HypothesisViolated):
    """The four bilinear constraints of a dual vector triplet do not hold."""


class StationaryBody(ThreeBodyError):
    """A body has zero momentum where a direction or |p|**alpha is needed."""


class UndefinedTangent(StationaryBody):
    """A body is stationary so its tangent/normal line has no direction."""


class DegenerateCircumcircle(ThreeBodyError):
    pass


class DiameterUndefined(ThreeBodyError):
    pass


class ShootingError(ThreeBodyError):
    """Periodic-orbit refinement failed.

    Attributes
    ----------
    best_residual : float
        Smallest residual norm reached before giving up.
    iterations : int
        Number of residual evaluations spent.
    """

    def __init__(self, message, best_residual=float("nan"), iterations=0):
        super().__init__(f"{message} (best residual {best_residual:.3e} after {iterations} evaluations)")
        self.best_residual = best_residual
        self.iterations = iterations


class ShootingCollision(ShootingError):
    pass


class ConfigError(ThreeBodyError, ValueError):
    """Malformed run configuration; ``lineno`` points into the file when known."""

    def __init__(self, message, lineno=None):
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)
        self.lineno = lineno
