"""Exception hierarchy shared by all glos modules.

Every error that can reach a user carries a stable ``kind`` string (the
class name) so the CLI and the HTTP service can report machine-readable
error categories without string matching on messages.
"""

from __future__ import annotations


class GlosError(Exception):
    """Base class for all errors raised by this package."""

    @property
    def kind(self) -> str:
        return type(self).__name__


# --- text / G2P ------------------------------------------------------------

class G2PError(GlosError):
    """Base class for grapheme-to-phoneme failures."""


class UnmappableGrapheme(G2PError):
    """No rewrite rule covers a character of the input word."""

    def __init__(self, char: str, offset: int, word: str = ""):
        self.char = char
        self.offset = offset
        self.word = word
        where = f" in {word!r}" if word else ""
        super().__init__(f"no rule matches {char!r} at offset {offset}{where}")


class NoNucleus(G2PError):
    """A phone sequence contains no vowel and cannot be syllabified."""


class RuleFileError(GlosError):
    """A rule or lexicon file is malformed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# --- audio / features -------------------------------------------------------

class UnsupportedFormat(GlosError):
    """Audio file is readable but not in the supported encoding."""


class CorruptFile(GlosError):
    """File cannot be parsed at all."""


class TooShort(GlosError):
    """Audio is shorter than a single analysis window."""


class FingerprintMismatch(GlosError):
    """Features were extracted with a different configuration than the model."""


# --- acoustic models ---------------------------------------------------------

class EmptyCorpus(GlosError):
    """No usable training utterances."""


class UtteranceTooShort(GlosError):
    """An utterance has fewer frames than its model requires states."""


class AlignmentFailure(GlosError):
    """No finite-probability path through the alignment graph."""


class DimensionMismatch(GlosError):
    """Feature vector dimensionality differs from the model's."""


# --- alignment ---------------------------------------------------------------

class GraphTooLong(GlosError):
    """More mandatory model states than available frames."""


class RegionOutOfRange(GlosError):
    """Requested re-alignment region lies outside the audio."""


class InsufficientAnchors(GlosError):
    """Long alignment could not find any reliable anchor words."""


# --- VAD / diarization --------------------------------------------------------

class SingleClass(GlosError):
    """Training labels contain only one class."""


class SingularCovariance(GlosError):
    """Covariance not positive definite even after regularization."""


# --- file formats --------------------------------------------------------------

class ParseError(GlosError):
    """A structured text document is malformed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvariantViolation(GlosError):
    """A parsed document violates a structural invariant (e.g. interval overlap)."""


class InvalidTiers(GlosError):
    """Tiers handed to a writer overlap or fall outside the document range."""


# --- corpus --------------------------------------------------------------------

class MissingAudio(GlosError):
    """One or more audio files referenced by a manifest do not exist."""

    def __init__(self, paths: list[str]):
        self.paths = list(paths)
        shown = ", ".join(self.paths[:5])
        more = f" (+{len(self.paths) - 5} more)" if len(self.paths) > 5 else ""
        super().__init__(f"{len(self.paths)} missing audio file(s): {shown}{more}")


class DuplicateSession(GlosError):
    """The same session id appears with conflicting metadata."""


class TooFewSessions(GlosError):
    """Not enough sessions to produce a non-trivial split."""


# --- service ----------------------------------------------------------------------

class BadInputManifest(GlosError):
    """Job request is missing required inputs or has unknown ones."""


class PayloadTooLarge(GlosError):
    """Uploaded payload exceeds the configured limit."""


class UnknownJob(GlosError):
    """No job with the requested id."""
