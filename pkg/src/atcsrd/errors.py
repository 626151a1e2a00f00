"""Exception types raised across the toolkit.

Every error derives from :class:`AtcSrdError` (itself a ``ValueError``) so callers
can catch toolkit failures in one place while still distinguishing the cause.
"""


class AtcSrdError(ValueError):
    pass


# transcripts


class TranscriptError(AtcSrdError):
    pass


class EmptyInput(TranscriptError):
    pass


class WordsBeforeFirstTag(TranscriptError):
    pass


class EmptyTurn(TranscriptError):
    pass


class MalformedTag(TranscriptError):
    """A tag literal appeared with the wrong casing (e.g. ``AtcoTag``)."""


class MissingTimestamps(TranscriptError):
    pass


class ManifestError(TranscriptError):
    pass


# alignment


class PlaceholderCollision(AtcSrdError):
    pass


# language model


class EmptyCorpus(AtcSrdError):
    pass


# acoustics


class AudioError(AtcSrdError):
    pass


class UnsupportedFormat(AudioError):
    pass


class CorruptHeader(AudioError):
    pass


class SilentInput(AudioError):
    pass


# role clustering


class InsufficientSamples(AtcSrdError):
    pass


class DimensionMismatch(AtcSrdError):
    pass


class ZeroVector(AtcSrdError):
    pass


# ctc


class CtcError(AtcSrdError):
    pass


class InfeasibleTarget(CtcError):
    pass


class PosteriorFormatError(CtcError):
    pass
