"""Exception types raised by the pipeline."""


class MvbGraspError(ValueError):
    """Base class for all structured pipeline errors."""


class DimensionMismatchError(MvbGraspError):
    pass


class MissingPixelCoordsError(MvbGraspError):
    pass


class EmptyCloudError(MvbGraspError):
    pass


class TooFewPointsError(MvbGraspError):
    pass


class EmptyCandidatesError(MvbGraspError):
    pass


class EmptyFacesError(MvbGraspError):
    pass


class ConfigError(MvbGraspError):
    pass


class OutputError(MvbGraspError):
    """Output directory missing, unwritable, or files exist without ``force``."""


class FilterExhausted(MvbGraspError):
    """Every candidate failed the alignment filter.

    ``scored`` holds the full candidate batch with alignments filled in so the
    caller can log it and fall back to score-only ranking.
    """

    def __init__(self, scored, message="alignment filter rejected every candidate"):
        super().__init__(message)
        self.scored = scored
