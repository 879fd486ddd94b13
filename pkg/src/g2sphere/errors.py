"""Exception types shared across the package."""


class G2Error(Exception):
    """Base class; ``code`` is the short token used by the CLI."""

    code = "G2"


class DomainError(G2Error, ValueError):
    """Parameters outside the domain of a construction."""

    code = "DOMAIN"


class NotCriticalError(DomainError):
    """A critical point was required but ``div T`` does not vanish."""

    code = "NOT_CRITICAL"


class StepRejected(G2Error, RuntimeError):
    """An integrator step drifted too far from the unit sphere."""

    code = "STEP_REJECTED"
