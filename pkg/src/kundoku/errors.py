"""Exception hierarchy shared across the package."""


class KundokuError(Exception):
    """Base class for every error raised by this package."""


class ParseError(KundokuError, ValueError):
    """Malformed mark notation or corpus record."""

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class InvalidAnnotationError(KundokuError):
    """The automaton rejected a sentence; ``trace`` carries the diagnostic run."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class SearchLimitExceeded(KundokuError):
    pass


class InexpressibleError(KundokuError):
    """A reading order that no Kaeriten annotation can produce."""

    def __init__(self, message, pattern=None):
        super().__init__(message)
        self.pattern = pattern


class AlignmentError(KundokuError):
    pass


class CorpusError(KundokuError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
