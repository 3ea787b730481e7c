"""Shared exception types for the artikit pipeline."""


class ArtikitError(Exception):
    """Base class for all artikit-specific failures."""


class BranchAmbiguityError(ArtikitError):
    """Log map requested for a rotation too close to the pi branch cut."""


class TrackFileError(ArtikitError):
    """A track, segment, or result file violates the schema.

    The message names the offending field and index.
    """


class DegenerateStepError(ArtikitError):
    """A correspondence step has too few point pairs to constrain a transform."""


class DegenerateGeometryError(ArtikitError):
    """Point configuration is (near-)collinear; a rigid fit is underdetermined."""


class InsufficientMotionError(ArtikitError):
    """Observed motion is too small to identify an articulation model."""


class InsufficientTracksError(ArtikitError):
    """Too few tracks survive filtering to estimate a segment."""


class IllPosedError(ArtikitError):
    """A linear system has no unique solution (e.g. no observed samples)."""
