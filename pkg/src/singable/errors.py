"""Exception hierarchy.

Every error raised on purpose by this package derives from :class:`SingableError`,
so the CLI can map them all to a single exit path.
"""


class SingableError(Exception):
    """Base class for all package errors."""


class EmptyInput(SingableError, ValueError):
    pass


class UnpronounceableToken(SingableError, ValueError):
    pass


class NoClassifiableLines(SingableError, ValueError):
    pass


class ProfileError(SingableError, ValueError):
    """Malformed or inconsistent language profile file."""


class EmptyMelody(SingableError, ValueError):
    pass


class MalformedDocument(SingableError, ValueError):
    pass


class ZeroDurationNote(MalformedDocument):
    pass


class TooLong(SingableError, ValueError):
    pass


class InvalidConstraints(SingableError, ValueError):
    pass


class UnsupportedPlacement(SingableError, ValueError):
    pass


class DirectionMismatch(SingableError, ValueError):
    pass


class EmptyCorpus(SingableError, ValueError):
    pass


class VersionMismatch(SingableError, ValueError):
    pass


class CorruptFile(SingableError, ValueError):
    pass


class NoCompletableHypothesis(SingableError, RuntimeError):
    pass


class SearchSpaceTooLarge(SingableError, ValueError):
    pass


class UnfinishedHypothesis(SingableError, ValueError):
    pass


class EmptySet(SingableError, ValueError):
    pass


class NoRequiredBoundaries(SingableError, ValueError):
    pass


class ExternalCommandFailed(SingableError, RuntimeError):
    def __init__(self, batch_index: int, message: str):
        super().__init__(f"batch {batch_index}: {message}")
        self.batch_index = batch_index


class UnclassifiableRhyme(SingableError, ValueError):
    """The end word of a sentence has no rhyme class under the profile."""
