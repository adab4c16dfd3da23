"""Exception hierarchy shared across the pipeline."""


class TrendSpamError(Exception):
    """Base class for every error raised by this package."""


# event model

class EventError(TrendSpamError, ValueError):
    pass


class MissingField(EventError):
    def __init__(self, field):
        super().__init__(f"missing required field {field!r}")
        self.field = field


class KindLineageMismatch(EventError):
    pass


class InvalidTimestamp(EventError):
    pass


class NonNumericTimestamp(InvalidTimestamp):
    pass


class TimestampRangeError(InvalidTimestamp):
    pass


class DuplicateEventId(EventError):
    pass


# ingest

class IngestError(TrendSpamError):
    pass


class ParseError(IngestError, ValueError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyInput(IngestError, ValueError):
    pass


class InvalidWidth(TrendSpamError, ValueError):
    pass


# trending

class NonContiguousSnapshots(TrendSpamError, ValueError):
    pass


class OddK(TrendSpamError, ValueError):
    pass


# growth

class ZeroDenominator(TrendSpamError, ZeroDivisionError):
    pass


class IndexOutOfRange(TrendSpamError, IndexError):
    pass


class EmptySample(TrendSpamError, ValueError):
    pass


# statfit

class NonPositiveValue(TrendSpamError, ValueError):
    pass


class TooFewPoints(TrendSpamError, ValueError):
    pass


class TooFewDistinct(TooFewPoints):
    pass


class InsufficientTail(TrendSpamError, ValueError):
    pass


class NonPositiveForLogBins(NonPositiveValue):
    pass


# spamdetect

class EmptySuspects(TrendSpamError, ValueError):
    pass


class TooFewEvents(TrendSpamError, ValueError):
    pass


# synth

class ParamError(TrendSpamError, ValueError):
    pass


class TargetNotFound(TrendSpamError, LookupError):
    pass
