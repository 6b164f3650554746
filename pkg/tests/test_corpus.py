"""Manifest loading, splitting and statistics tests."""

import numpy as np
import pytest

from glos.corpus import load_manifest, split, validate_stats
from glos.errors import (
    DuplicateSession,
    MissingAudio,
    ParseError,
    TooFewSessions,
)
from glos.dsp import write_wav


def _write_audio(path, seconds=0.1):
    write_wav(path, np.zeros(int(16000 * seconds)))


def _manifest(tmp_path, rows):
    audio_dir = tmp_path / "audio"
    audio_dir.mkdir(exist_ok=True)
    for row in rows:
        target = tmp_path / row[3]
        if not target.exists():
            _write_audio(target)
    path = tmp_path / "manifest.tsv"
    path.write_text(
        "".join("\t".join(r) + "\n" for r in rows), encoding="utf-8")
    return path


ROWS = [
    ("s1", "spkA", "sentence", "audio/a.wav", "pan ma kota"),
    ("s1", "spkA", "word", "audio/b.wav", "kot"),
    ("s2", "spkB", "sentence", "audio/c.wav", "kot pije wodę"),
]


def test_load_toy_manifest(tmp_path):
    m = load_manifest(_manifest(tmp_path, ROWS))
    assert m.stats.sessions == 2
    assert m.stats.speakers == 2
    assert m.stats.tokens == 7
    assert m.stats.vocabulary == 6  # 'kot' repeats
    assert m.stats.hours == pytest.approx(3 * 0.1 / 3600)
    assert [s.session_id for s in m.sessions] == ["s1", "s2"]
    assert len(m.warnings) == 2  # neither session is protocol-complete


def test_empty_manifest(tmp_path):
    path = tmp_path / "manifest.tsv"
    path.write_text("", encoding="utf-8")
    m = load_manifest(path)
    assert m.sessions == ()
    assert m.stats.tokens == 0


def test_missing_audio_listed_exhaustively(tmp_path):
    path = _manifest(tmp_path, ROWS)
    (tmp_path / "audio/a.wav").unlink()
    (tmp_path / "audio/c.wav").unlink()
    with pytest.raises(MissingAudio) as exc:
        load_manifest(path)
    assert len(exc.value.paths) == 2
    assert all(p.endswith((".wav",)) for p in exc.value.paths)


def test_duplicate_session_id(tmp_path):
    rows = ROWS + [("s1", "spkB", "word", "audio/d.wav", "dom")]
    with pytest.raises(DuplicateSession):
        load_manifest(_manifest(tmp_path, rows))


def test_interleaved_rows_same_speaker_are_one_session(tmp_path):
    rows = [ROWS[0], ROWS[2], ROWS[1]]  # s1, s2, s1 again
    m = load_manifest(_manifest(tmp_path, rows))
    assert m.stats.sessions == 2
    assert len(m.sessions[0].items) == 2


def test_bad_field_count_reports_line(tmp_path):
    path = tmp_path / "manifest.tsv"
    path.write_text("a\tb\tc\n", encoding="utf-8")
    with pytest.raises(ParseError) as exc:
        load_manifest(path)
    assert exc.value.line == 1


def test_bad_kind_rejected(tmp_path):
    rows = [("s1", "spkA", "poem", "audio/a.wav", "x")]
    with pytest.raises(ParseError):
        load_manifest(_manifest(tmp_path, rows))


# --- split -----------------------------------------------------------------------


def _many_sessions(tmp_path, n=10):
    rows = []
    for i in range(n):
        rows.append((f"s{i:02d}", f"spk{i % 4}", "sentence",
                     f"audio/u{i}.wav", f"zdanie numer {i}"))
    return load_manifest(_manifest(tmp_path, rows))


def test_split_sizes_and_partition(tmp_path):
    m = _many_sessions(tmp_path, 10)
    train, test = split(m, test_fraction=0.3, seed=7)
    assert test.stats.sessions == 3  # round(0.3·10)
    assert train.stats.sessions == 7
    all_ids = {s.session_id for s in m.sessions}
    train_ids = {s.session_id for s in train.sessions}
    test_ids = {s.session_id for s in test.sessions}
    assert train_ids | test_ids == all_ids
    assert train_ids & test_ids == set()


def test_split_deterministic_under_seed(tmp_path):
    m = _many_sessions(tmp_path, 12)
    a = split(m, 0.25, seed=42)
    b = split(m, 0.25, seed=42)
    assert [s.session_id for s in a[1].sessions] == \
        [s.session_id for s in b[1].sessions]
    c = split(m, 0.25, seed=43)
    assert [s.session_id for s in c[1].sessions] != \
        [s.session_id for s in a[1].sessions]


def test_split_half_on_four(tmp_path):
    m = _many_sessions(tmp_path, 4)
    train, test = split(m, 0.5, seed=0)
    assert (train.stats.sessions, test.stats.sessions) == (2, 2)


def test_split_session_granularity(tmp_path):
    rows = [
        ("s1", "spkA", "sentence", "audio/a.wav", "raz"),
        ("s1", "spkA", "sentence", "audio/b.wav", "dwa"),
        ("s2", "spkB", "sentence", "audio/c.wav", "trzy"),
        ("s3", "spkC", "sentence", "audio/d.wav", "cztery"),
    ]
    m = load_manifest(_manifest(tmp_path, rows))
    train, test = split(m, 0.34, seed=1)
    for half in (train, test):
        for s in half.sessions:
            if s.session_id == "s1":
                assert len(s.items) == 2  # items never split apart


def test_speaker_disjoint_mode(tmp_path):
    m = _many_sessions(tmp_path, 12)  # 4 speakers x 3 sessions
    train, test = split(m, 0.25, seed=5, speaker_disjoint=True)
    train_spk = {s.speaker_id for s in train.sessions}
    test_spk = {s.speaker_id for s in test.sessions}
    assert train_spk & test_spk == set()
    assert test.stats.sessions >= 3


def test_too_few_sessions(tmp_path):
    rows = [("s1", "spkA", "sentence", "audio/a.wav", "raz")]
    m = load_manifest(_manifest(tmp_path, rows))
    with pytest.raises(TooFewSessions):
        split(m)


def test_bad_fraction(tmp_path):
    m = _many_sessions(tmp_path, 4)
    with pytest.raises(ValueError):
        split(m, 0.0)
    with pytest.raises(ValueError):
        split(m, 1.0)


# --- stats validation -------------------------------------------------------------


def test_validate_stats_self_match(tmp_path):
    m = load_manifest(_manifest(tmp_path, ROWS))
    report = validate_stats(m, {
        "speakers": m.stats.speakers,
        "sessions": m.stats.sessions,
        "tokens": m.stats.tokens,
        "vocabulary": m.stats.vocabulary,
    })
    assert all(r["match"] for r in report)


def test_validate_stats_flags_mismatch(tmp_path):
    m = load_manifest(_manifest(tmp_path, ROWS))
    report = validate_stats(m, {"speakers": 317, "sessions": 554,
                                "tokens": 356674, "vocabulary": 46361})
    assert all(not r["match"] for r in report)
    assert {r["stat"] for r in report} == {
        "speakers", "sessions", "tokens", "vocabulary"}


def test_validate_stats_empty_and_unknown(tmp_path):
    m = load_manifest(_manifest(tmp_path, ROWS))
    assert validate_stats(m, {}) == []
    report = validate_stats(m, {"bogus": 1})
    assert report[0]["match"] is False
