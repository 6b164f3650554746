"""Synthetic miniature speech corpus.

Every phone of the inventory gets a fixed pair of sinusoid frequencies,
so phones are spectrally distinct, utterances have exactly known
boundaries (all on the 10 ms frame grid), and a small model can learn
them in seconds.  Silence is near-silent noise.  Speakers differ by a
multiplicative frequency scale, which is what the diarization tests
lean on.

This is test scaffolding that ships with the package: the command line
exposes it (``glos corpus synth``) so users can exercise training,
alignment, VAD, diarization and spotting end to end without real data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dsp import AudioBuffer, FeatureConfig, FeatureMatrix, mfcc, write_wav
from .g2p import G2P
from .g2p.phones import INVENTORY

SIL = "sil"
_SAMPLE_RATE = 16000
_HOP = 160
_WINDOW = 400

# Words whose pronunciations never end in a voiced obstruent, so the
# dictionary form matches what a speaker actually says phrase-finally.
WORD_POOL = [
    "pan", "tak", "kot", "dom", "woda", "rok", "nos", "las", "sen", "mam",
    "oko", "ucho", "rak", "sok", "mak", "tor", "jak", "cel", "szum", "żona",
    "lato", "pole", "rano", "sala", "tama",
]


def phone_frequencies(phone: str, scale: float = 1.0) -> tuple[float, float]:
    """Deterministic, distinct (f1, f2) for each phone symbol."""
    order = sorted(INVENTORY)
    idx = order.index(phone)
    f1 = 300.0 + 115.0 * idx
    f2 = 500.0 + 110.0 * ((idx * 7) % len(order))
    return f1 * scale, f2 * scale


def _phone_samples(phone: str, n_frames: int, rng: np.random.Generator,
                   scale: float) -> np.ndarray:
    n = n_frames * _HOP
    if phone == SIL:
        return 0.003 * rng.standard_normal(n)
    f1, f2 = phone_frequencies(phone, scale)
    t = np.arange(n) / _SAMPLE_RATE
    sig = (0.3 * np.sin(2 * np.pi * f1 * t + rng.uniform(0, 2 * np.pi))
           + 0.3 * np.sin(2 * np.pi * f2 * t + rng.uniform(0, 2 * np.pi)))
    return sig + 0.01 * rng.standard_normal(n)


@dataclass
class SynthUtterance:
    """Audio plus exact ground truth on the frame grid."""

    audio: AudioBuffer
    words: list[tuple[str, int, int]]    # (word, start frame, end frame)
    phone_spans: list[tuple[str, int, int]]
    phone_seq: list[str]                 # includes silences
    text: str

    def word_times(self) -> list[tuple[str, float, float]]:
        hop_s = _HOP / _SAMPLE_RATE
        return [(w, a * hop_s, b * hop_s) for w, a, b in self.words]


def synth_utterance(words: list[str], rng: np.random.Generator,
                    g2p: G2P | None = None, scale: float = 1.0,
                    edge_sil: tuple[int, int] = (12, 30),
                    inter_sil_prob: float = 0.4,
                    phone_frames: tuple[int, int] = (9, 22)) -> SynthUtterance:
    """Render a word sequence with per-word dictionary pronunciations."""
    g2p = g2p or G2P.default()
    chunks: list[np.ndarray] = []
    phone_spans: list[tuple[str, int, int]] = []
    word_spans: list[tuple[str, int, int]] = []
    phone_seq: list[str] = []
    cursor = 0

    def emit(phone: str, n_frames: int) -> None:
        nonlocal cursor
        chunks.append(_phone_samples(phone, n_frames, rng, scale))
        phone_spans.append((phone, cursor, cursor + n_frames))
        phone_seq.append(phone)
        cursor += n_frames

    emit(SIL, int(rng.integers(*edge_sil)))
    for i, word in enumerate(words):
        start = cursor
        for phone in g2p.word(word)[0]:
            emit(phone, int(rng.integers(*phone_frames)))
        word_spans.append((word, start, cursor))
        if i < len(words) - 1 and rng.random() < inter_sil_prob:
            emit(SIL, int(rng.integers(5, 16)))
    emit(SIL, int(rng.integers(*edge_sil)))

    samples = np.concatenate(chunks + [0.003 * rng.standard_normal(_WINDOW - _HOP)])
    audio = AudioBuffer(samples, _SAMPLE_RATE)
    return SynthUtterance(audio, word_spans, phone_spans, phone_seq, " ".join(words))


def synth_canonical(text: str, rng: np.random.Generator,
                    g2p: G2P | None = None, scale: float = 1.0,
                    edge_sil: tuple[int, int] = (12, 30),
                    phone_frames: tuple[int, int] = (9, 22)) -> SynthUtterance:
    """Render running text as one connected phrase (no pauses inside).

    The audio realizes exactly ``sil + canonical phones + sil``, which is
    what transcript-driven training reconstructs from the text.
    """
    g2p = g2p or G2P.default()
    phones = g2p.canonical(text)
    chunks = []
    spans = []
    seq = []
    cursor = 0
    for phone in [SIL] + phones + [SIL]:
        if phone == SIL:
            n = int(rng.integers(*edge_sil))
        else:
            n = int(rng.integers(*phone_frames))
        chunks.append(_phone_samples(phone, n, rng, scale))
        spans.append((phone, cursor, cursor + n))
        seq.append(phone)
        cursor += n
    samples = np.concatenate(chunks + [0.003 * rng.standard_normal(_WINDOW - _HOP)])
    return SynthUtterance(AudioBuffer(samples, _SAMPLE_RATE), [], spans, seq, text)


def training_corpus(rng: np.random.Generator, n_utterances: int = 10,
                    words_per_utt: tuple[int, int] = (3, 6),
                    g2p: G2P | None = None,
                    cfg: FeatureConfig | None = None,
                    ) -> tuple[list[tuple[FeatureMatrix, list[str]]], list[SynthUtterance]]:
    """Feature/phone-sequence pairs ready for flat_start and hard EM."""
    g2p = g2p or G2P.default()
    corpus = []
    utts = []
    for _ in range(n_utterances):
        words = list(rng.choice(WORD_POOL, size=int(rng.integers(*words_per_utt))))
        utt = synth_utterance(words, rng, g2p)
        feats = mfcc(utt.audio, cfg)
        corpus.append((feats, utt.phone_seq))
        utts.append(utt)
    return corpus, utts


def vad_dataset(rng: np.random.Generator, n_blocks: int = 14,
                g2p: G2P | None = None) -> tuple[AudioBuffer, np.ndarray]:
    """Audio alternating silence and speech, with per-frame labels."""
    g2p = g2p or G2P.default()
    chunks = []
    labels = []
    for b in range(n_blocks):
        if b % 2 == 0:
            n = int(rng.integers(25, 60))
            chunks.append(0.003 * rng.standard_normal(n * _HOP))
            labels.extend([False] * n)
        else:
            words = list(rng.choice(WORD_POOL, size=int(rng.integers(1, 4))))
            for word in words:
                for phone in g2p.word(word)[0]:
                    n = int(rng.integers(9, 22))
                    chunks.append(_phone_samples(phone, n, rng, 1.0))
                    labels.extend([True] * n)
    chunks.append(0.003 * rng.standard_normal(_WINDOW - _HOP))
    return AudioBuffer(np.concatenate(chunks), _SAMPLE_RATE), np.array(labels, bool)


def two_speaker_audio(rng: np.random.Generator, n_turns: int = 6,
                      scales: tuple[float, float] = (1.0, 1.45),
                      turn_frames: tuple[int, int] = (160, 320),
                      g2p: G2P | None = None,
                      ) -> tuple[AudioBuffer, list[tuple[float, float, int]]]:
    """Back-to-back speaker turns; returns (audio, [(start_s, end_s, spk)])."""
    g2p = g2p or G2P.default()
    chunks = []
    turns = []
    cursor = 0
    for turn in range(n_turns):
        spk = turn % 2
        target = int(rng.integers(*turn_frames))
        start = cursor
        while cursor - start < target:
            word = str(rng.choice(WORD_POOL))
            for phone in g2p.word(word)[0]:
                n = int(rng.integers(9, 22))
                chunks.append(_phone_samples(phone, n, rng, scales[spk]))
                cursor += n
        turns.append((start * 0.010, cursor * 0.010, spk))
    chunks.append(0.003 * rng.standard_normal(_WINDOW - _HOP))
    return AudioBuffer(np.concatenate(chunks), _SAMPLE_RATE), turns


def write_dataset(root: str | Path, n_sessions: int = 3,
                  sentences_per_session: int = 4, words_per_session: int = 2,
                  seed: int = 0, g2p: G2P | None = None) -> Path:
    """Write wav files, a TSV manifest and ground-truth JSON to ``root``.

    Sentence items are rendered canonically (training-ready); word items
    are isolated words.  Returns the manifest path.
    """
    g2p = g2p or G2P.default()
    rng = np.random.default_rng(seed)
    root = Path(root)
    (root / "audio").mkdir(parents=True, exist_ok=True)
    rows = []
    truth: dict[str, list] = {}
    for s in range(n_sessions):
        session = f"ses{s:03d}"
        speaker = f"spk{s % max(n_sessions - 1, 1):03d}"
        for i in range(sentences_per_session):
            words = list(rng.choice(WORD_POOL, size=int(rng.integers(3, 6))))
            utt = synth_canonical(" ".join(words), rng, g2p)
            rel = f"audio/{session}_s{i:02d}.wav"
            write_wav(root / rel, utt.audio.samples)
            rows.append((session, speaker, "sentence", rel, utt.text))
            truth[rel] = utt.phone_spans
        for i in range(words_per_session):
            word = str(rng.choice(WORD_POOL))
            utt = synth_utterance([word], rng, g2p, inter_sil_prob=0.0)
            rel = f"audio/{session}_w{i:02d}.wav"
            write_wav(root / rel, utt.audio.samples)
            rows.append((session, speaker, "word", rel, word))
            truth[rel] = utt.phone_spans
    manifest = root / "manifest.tsv"
    lines = ["\t".join(r) for r in rows]
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    (root / "truth.json").write_text(json.dumps(truth), encoding="utf-8")
    return manifest
