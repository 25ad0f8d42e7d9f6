class QGRankError(Exception):
    pass


class DataError(QGRankError):
    """Malformed or unreadable input data (KB, lexicon, dataset, checkpoint)."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        if path is not None and line is not None:
            where = f"{path}:{line}"
        elif path is not None:
            where = str(path)
        elif line is not None:
            where = f"line {line}"
        else:
            where = ""
        super().__init__(f"{where}: {message}" if where else message)


class NumericalError(QGRankError):
    """A loss or gradient became non-finite."""


class NoParseError(QGRankError):
    """No candidate query graph exists for a question."""
