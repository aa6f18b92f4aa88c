"""Exception types raised by the library.

Each carries a stable ``code`` used by the CLI's machine-readable error output.
"""


class ObsAllocError(Exception):
    code = "error"


class DimensionError(ObsAllocError, ValueError):
    code = "dimension_mismatch"


class PreconditionError(ObsAllocError, ValueError):
    code = "precondition_failed"


class InsufficientExcitationError(ObsAllocError):
    """The regressor Gram matrix for a coordinate is numerically singular."""

    code = "insufficient_excitation"

    def __init__(self, coordinate, message=None):
        self.coordinate = coordinate
        super().__init__(message or f"regressor Gram matrix singular for coordinate {coordinate}")


class RankDeficiencyError(ObsAllocError):
    code = "rank_deficient"


class NotObservableWithinCandidates(ObsAllocError):
    code = "not_observable_within_candidates"


class SearchSpaceTooLarge(ObsAllocError):
    code = "search_space_too_large"
