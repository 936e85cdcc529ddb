"""Exception hierarchy shared across the package."""


class ReplicationDesignError(Exception):
    """Base class for all package errors."""


class DomainError(ReplicationDesignError, ValueError):
    """An argument lies outside the domain of a function."""


class BracketError(ReplicationDesignError, ValueError):
    """The root-finding bracket does not contain a sign change."""


class IntegrationError(ReplicationDesignError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class InfeasibleOriginalError(ReplicationDesignError, ValueError):
    """The original study is not convincing enough for the requested method.

    Raised by the skeptical p-value when ``z_o**2 <= z_alpha**2``, in which
    case the skeptical prior variance is undefined.
    """


class UnsupportedDesignError(ReplicationDesignError, ValueError):
    """A multisite design outside the supported (balanced) class."""
