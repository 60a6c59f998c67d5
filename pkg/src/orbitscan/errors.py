"""Exception types shared across the pipeline.

Each error names the condition that makes a stage unable to produce a
meaningful result, so callers can branch on the class rather than parse
messages.
"""


class OrbitscanError(Exception):
    """Base class for all pipeline errors."""


class NonConvergent(OrbitscanError):
    """Iterative inversion failed to reach tolerance within the cap."""


class DegenerateGeometry(OrbitscanError):
    """Viewing geometry carries no usable 3D information."""


class InsufficientViews(OrbitscanError):
    """Fewer than two views available where at least two are required."""


class InvalidSpec(OrbitscanError):
    """A configuration or scene specification is unsatisfiable."""


class EmptyFrame(OrbitscanError):
    """A map frame contains no usable points."""


class NoTarget(OrbitscanError):
    """Clustering produced no cluster to select a target from."""


class DegenerateOrbit(OrbitscanError):
    """Orbit radius too small to define a circle."""


class NoFrameAvailable(OrbitscanError):
    """A capture was requested before any camera frame arrived."""


class EmptyReconstruction(OrbitscanError):
    """No point had the two usable views reconstruction requires."""


class IllegalTransition(OrbitscanError):
    """An event is not legal in the current mission state."""


class IoFailure(OrbitscanError):
    """A file could not be written or read."""
