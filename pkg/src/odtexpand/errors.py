"""Exception types.

Everything deriving from :class:`PhysicsDomainError` is a physics or numerics
domain failure (CLI exit code 2), as opposed to a usage error.
"""


class PhysicsDomainError(ValueError):
    pass


class AttractivityError(PhysicsDomainError):
    """The trap would become repulsive (negative omega^2 or V0)."""


class SingularDetuningError(PhysicsDomainError):
    pass


class SingularRadiusError(PhysicsDomainError):
    pass


class GridTruncationError(PhysicsDomainError):
    """A state does not fit on the requested grid."""


class OutOfSpectrumError(PhysicsDomainError):
    pass


class DomainTooSmallError(PhysicsDomainError):
    """Probability density reached the grid boundary during propagation."""


class GridMismatchError(ValueError):
    pass


class QuadratureError(PhysicsDomainError):
    pass
