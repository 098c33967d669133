"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class QAugError(Exception):
    """Base class for every error raised by qaugnet."""


class InputError(QAugError, ValueError):
    """A caller-supplied argument violates an operation's precondition."""


# frame codec
class FrameError(QAugError):
    pass


class MalformedHeader(FrameError):
    pass


class MalformedFrame(FrameError):
    pass


class Truncated(FrameError):
    pass


class UnsupportedScheme(FrameError):
    pass


class InconsistentMode(FrameError):
    pass


# corpus
class IngestError(QAugError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ContextMismatch(QAugError):
    pass


# classifier
class DegenerateTraining(QAugError):
    pass


class DimensionError(QAugError, ValueError):
    pass


class ModelFormatError(QAugError):
    pass


class ArtifactMismatch(QAugError):
    pass


# qkd
class AbortedSession(QAugError):
    pass


class KeyExhausted(QAugError):
    pass


# network
class UnknownChannel(QAugError):
    pass


class IntegrityError(QAugError):
    pass


class IoError(QAugError, OSError):
    pass
