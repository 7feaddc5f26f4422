"""Exception types raised across the package.

Everything derives from :class:`GazeTargetError` so callers (and the CLI)
can catch the whole family at once.
"""


class GazeTargetError(Exception):
    pass


class InvalidArgumentError(GazeTargetError, ValueError):
    pass


class InvalidDataError(GazeTargetError, ValueError):
    pass


class InvalidConfigurationError(InvalidArgumentError):
    """Parameters that are individually legal but unusable together."""


class PairingError(InvalidArgumentError):
    """Selections and ground-truth records are not aligned by frame_id."""


class FormatError(InvalidDataError):
    """A binary or text file does not follow its declared layout."""


class ParseError(InvalidDataError):
    def __init__(self, message: str, path=None, lineno: int | None = None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where = f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class RecordValidationError(InvalidDataError):
    def __init__(self, frame_id, rule: str, detail: str):
        self.frame_id = frame_id
        self.rule = rule
        super().__init__(f"record {frame_id!r} violates rule '{rule}': {detail}")


class NoRegionError(GazeTargetError):
    """The heatmap has no positive cell, so no hot region exists."""


class PlacementError(GazeTargetError):
    pass
