"""Exception types shared across the package."""


class KeplerBilliardError(Exception):
    """Base class for all package errors."""


class TableError(KeplerBilliardError, ValueError):
    """Invalid table description or a constructed curve that fails its checks."""


class BracketingError(KeplerBilliardError, RuntimeError):
    """A root could not be bracketed (nonconvex table or point outside)."""


class ArcError(KeplerBilliardError, ValueError):
    """The two-point Kepler problem has no admissible solution for the request."""


class AmbiguousBranch(ArcError):
    """Both Levi-Civita sign choices are equally valid (antipodal direct request)."""


class GrazingError(KeplerBilliardError, RuntimeError):
    """A trajectory or ray meets the boundary tangentially."""


class ShadowingError(KeplerBilliardError, RuntimeError):
    """No word domain or no critical point could be produced."""
