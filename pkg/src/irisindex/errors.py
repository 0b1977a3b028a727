"""Exception hierarchy.

Every error carries a ``category`` used by the CLI to pick an exit code:
``data`` (malformed input, format or bookkeeping problems) exits 2 and
``numeric`` (degenerate geometry or spread) exits 3.
"""


class IrisIndexError(Exception):
    category = "data"
    exit_code = 2


class DataError(IrisIndexError, ValueError):
    category = "data"
    exit_code = 2


class NumericError(IrisIndexError, ValueError):
    category = "numeric"
    exit_code = 3


class LabelParseError(DataError):
    pass


class SizeError(DataError):
    """Payload has the wrong number of elements."""


class FormatError(DataError):
    pass


class DuplicateLabelError(DataError):
    pass


class UnknownLabelError(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class CompatibilityError(DataError):
    """An enrollment database was loaded against a map that did not produce it."""


class GeometryError(NumericError):
    """Invalid circle geometry (non-positive radius, pupil not inside iris)."""


class OutOfBoundsError(NumericError):
    def __init__(self, row, col, detail=""):
        self.row = row
        self.col = col
        msg = f"sample at (row={row}, col={col}) falls outside the image"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class DegenerateError(NumericError):
    """Zero spread, coincident points or similar degeneracies."""


class InsufficientSamplesError(NumericError):
    pass


class RankDeficiencyError(NumericError):
    pass
