"""Exception hierarchy shared by all modules."""


class MlhpcError(Exception):
    """Base class for every error raised by this package."""


class MalformedEvent(MlhpcError):
    """A sentinel-prefixed log line whose payload is not a valid event."""

    def __init__(self, message, source=None, line=None):
        self.reason = message
        self.source = source
        self.line = line
        super().__init__(self._render())

    def _render(self):
        where = ""
        if self.source is not None:
            where = f"{self.source}:"
        if self.line is not None:
            where += f"{self.line}:"
        return f"{where} {self.reason}".strip()

    def at(self, source, line):
        return MalformedEvent(self.reason, source=source, line=line)


class InvalidRunLog(MlhpcError):
    """The event stream violates a RunLog invariant."""


class MissingRunStart(InvalidRunLog):
    pass


class NonMonotonicTime(InvalidRunLog):
    pass


class UnbalancedIntervals(MlhpcError):
    pass


class MissingRunStop(MlhpcError):
    pass


class SubmissionError(MlhpcError):
    pass


class MissingSystemFile(SubmissionError):
    pass


class EmptyEntry(SubmissionError):
    pass


class InconsistentEntry(SubmissionError):
    """Runs of one result directory disagree on an entry-defining value."""


class InsufficientRuns(MlhpcError):
    pass


class NegativeRemainder(MlhpcError):
    pass


class OutOfCurveRange(MlhpcError):
    pass


class EmptyInput(MlhpcError):
    pass


class NonPositiveValue(MlhpcError):
    pass


class MalformedRow(MlhpcError):
    def __init__(self, message, row=None):
        self.row = row
        prefix = f"row {row}: " if row is not None else ""
        super().__init__(prefix + message)


class ConfigError(MlhpcError):
    pass
