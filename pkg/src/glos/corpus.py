"""Corpus manifest handling: loading, splitting, statistics validation.

A manifest is a UTF-8 tab-separated file with one item per line and no
header: ``session <TAB> speaker <TAB> kind <TAB> audio-path <TAB>
transcription``.  Audio paths are resolved relative to the manifest's
directory.  Token counting is whitespace ``split()`` on the transcription,
case-preserving; the vocabulary is the set of distinct tokens.
"""

from __future__ import annotations

import random
import wave
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DuplicateSession,
    MissingAudio,
    ParseError,
    TooFewSessions,
)

__all__ = [
    "Item",
    "Session",
    "CorpusStats",
    "CorpusManifest",
    "load_manifest",
    "split",
    "validate_stats",
]

KINDS = ("sentence", "word")

# A complete recording session per the collection protocol.
FULL_SENTENCES = 20
FULL_WORDS = 10


@dataclass(frozen=True)
class Item:
    audio: Path
    transcription: str
    kind: str


@dataclass(frozen=True)
class Session:
    session_id: str
    speaker_id: str
    items: tuple[Item, ...]


@dataclass(frozen=True)
class CorpusStats:
    speakers: int
    sessions: int
    tokens: int
    vocabulary: int
    hours: float


@dataclass(frozen=True)
class CorpusManifest:
    sessions: tuple[Session, ...]
    stats: CorpusStats
    warnings: tuple[str, ...] = field(default=())


def _wav_duration(path: Path) -> float:
    try:
        with wave.open(str(path), "rb") as w:
            rate = w.getframerate()
            return w.getnframes() / rate if rate else 0.0
    except (wave.Error, EOFError, OSError):
        return 0.0  # existence was already checked; unreadable counts as 0 h


def _compute_stats(sessions) -> CorpusStats:
    speakers = {s.speaker_id for s in sessions}
    tokens = 0
    vocab: set[str] = set()
    seconds = 0.0
    for session in sessions:
        for item in session.items:
            words = item.transcription.split()
            tokens += len(words)
            vocab.update(words)
            seconds += _wav_duration(item.audio)
    return CorpusStats(len(speakers), len(sessions), tokens, len(vocab),
                       seconds / 3600.0)


def _session_warnings(sessions) -> tuple[str, ...]:
    notes = []
    for s in sessions:
        n_sent = sum(1 for i in s.items if i.kind == "sentence")
        n_word = sum(1 for i in s.items if i.kind == "word")
        if (n_sent, n_word) != (FULL_SENTENCES, FULL_WORDS):
            notes.append(
                f"session {s.session_id}: {n_sent} sentences + {n_word} words"
                f" (a complete session has {FULL_SENTENCES}+{FULL_WORDS})")
    return tuple(notes)


def _build_manifest(sessions) -> CorpusManifest:
    return CorpusManifest(tuple(sessions), _compute_stats(sessions),
                          _session_warnings(sessions))


def load_manifest(path: str | Path) -> CorpusManifest:
    """Read and validate a manifest file.

    Every referenced audio file must exist (all missing paths are reported in
    one MissingAudio error); a session id used by two speakers is a
    DuplicateSession.  Sessions that deviate from the full recording protocol
    are listed in ``manifest.warnings`` but do not fail the load.
    """
    path = Path(path)
    base = path.parent
    rows: list[tuple[str, str, str, Path, str]] = []
    text = path.read_text(encoding="utf-8")
    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 5:
            raise ParseError(
                f"expected 5 tab-separated fields, got {len(parts)}",
                line=line_no)
        session, speaker, kind, audio, transcription = parts
        if not session or not speaker:
            raise ParseError("empty session or speaker id", line=line_no)
        if kind not in KINDS:
            raise ParseError(
                f"unknown item kind {kind!r} (expected one of {KINDS})",
                line=line_no)
        rows.append((session, speaker, kind, base / audio, transcription))

    missing = sorted({str(r[3]) for r in rows if not r[3].is_file()})
    if missing:
        raise MissingAudio(missing)

    speaker_of: dict[str, str] = {}
    items_of: dict[str, list[Item]] = {}
    order: list[str] = []
    for session, speaker, kind, audio, transcription in rows:
        if session not in speaker_of:
            speaker_of[session] = speaker
            items_of[session] = []
            order.append(session)
        elif speaker_of[session] != speaker:
            raise DuplicateSession(
                f"session {session!r} listed for both "
                f"{speaker_of[session]!r} and {speaker!r}")
        items_of[session].append(Item(audio, transcription, kind))

    sessions = [Session(sid, speaker_of[sid], tuple(items_of[sid]))
                for sid in order]
    return _build_manifest(sessions)


def split(manifest: CorpusManifest, test_fraction: float = 0.1,
          seed: int = 0, speaker_disjoint: bool = False,
          ) -> tuple[CorpusManifest, CorpusManifest]:
    """Deterministic session-granular train/test split.

    The test half gets ``round(test_fraction · n_sessions)`` whole sessions,
    sampled by a seeded RNG over the sorted session ids, so the same seed
    always produces the same split.  With ``speaker_disjoint`` whole speakers
    are moved instead until the test half is at least that large.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be strictly between 0 and 1")
    n = len(manifest.sessions)
    if n < 2:
        raise TooFewSessions(f"cannot split {n} session(s)")
    n_test = round(test_fraction * n)
    rng = random.Random(seed)
    if speaker_disjoint:
        speakers = sorted({s.speaker_id for s in manifest.sessions})
        rng.shuffle(speakers)
        chosen: set[str] = set()
        count = 0
        for speaker in speakers:
            if count >= n_test:
                break
            chosen.add(speaker)
            count += sum(1 for s in manifest.sessions
                         if s.speaker_id == speaker)
        test_ids = {s.session_id for s in manifest.sessions
                    if s.speaker_id in chosen}
    else:
        ordered = sorted(s.session_id for s in manifest.sessions)
        test_ids = set(rng.sample(ordered, n_test))
    test = [s for s in manifest.sessions if s.session_id in test_ids]
    train = [s for s in manifest.sessions if s.session_id not in test_ids]
    return _build_manifest(train), _build_manifest(test)


def validate_stats(manifest: CorpusManifest, expected: dict) -> list[dict]:
    """Compare computed statistics against expected values; never raises.

    ``expected`` may contain any of: speakers, sessions, tokens, vocabulary,
    hours.  Returns one record per provided key with the expectation, the
    actual value and a match flag (hours compared to 3 decimals).
    """
    actual = {
        "speakers": manifest.stats.speakers,
        "sessions": manifest.stats.sessions,
        "tokens": manifest.stats.tokens,
        "vocabulary": manifest.stats.vocabulary,
        "hours": manifest.stats.hours,
    }
    report = []
    for key, want in expected.items():
        if key not in actual:
            report.append({"stat": key, "expected": want, "actual": None,
                           "match": False})
            continue
        have = actual[key]
        if key == "hours":
            match = abs(float(want) - have) < 5e-4
        else:
            match = int(want) == have
        report.append({"stat": key, "expected": want, "actual": have,
                       "match": match})
    return report
