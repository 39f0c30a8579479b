"""Exception types shared across the package.

Argument-shape and precondition violations raise plain ValueError; the
classes below cover failure modes that callers may want to handle
separately (capacity limits, remote transport, degenerate fits).
"""


class LimetreeError(Exception):
    pass


class CapacityError(LimetreeError):
    """Requested enumeration or tree exceeds the configured size cap."""


class UnsupportedInstanceError(LimetreeError):
    """An instance other than the domain's anchor was passed where only
    the anchor is meaningful."""


class TransportError(LimetreeError):
    """Remote black-box endpoint could not be reached.

    Carries the number of attempts made so callers can decide whether to
    retry with different settings.
    """

    def __init__(self, message, attempts=1):
        super().__init__(message)
        self.attempts = attempts


class ProtocolError(LimetreeError):
    """Remote black-box endpoint answered, but not with well-formed
    probability rows."""


class DegenerateFitError(LimetreeError):
    """Normal-equation system is singular (unregularized ridge on a
    rank-deficient design)."""
