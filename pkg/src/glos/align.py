"""Forced alignment of transcripts against audio.

``force_align`` handles utterance-scale input exactly: it builds a
linear word graph (optional silence at the edges and between words,
parallel pronunciation variants from the G2P), runs Viterbi and turns
the state path into word and phone intervals.

``align_long`` scales that to recordings far beyond what a single
Viterbi pass should chew on: voice activity splits the audio into
chunks, the transcript is distributed over chunks in proportion to
expected word durations (with a safety margin of words on both sides),
chunks are aligned independently, well-scoring words away from the
uncertain chunk edges become anchors, and the stretches between anchors
are re-aligned recursively until everything is anchored, no span
shrinks, or the depth limit is hit.

``realign_region`` re-aligns a user-corrected stretch of an existing
alignment.  The region snaps outward to word boundaries and everything
outside it is returned untouched -- the same interval objects, so
outside values stay bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .am import SIL, AcousticModel
from .decode import GraphBuilder, emission_table, viterbi
from .dsp import AudioBuffer, FeatureConfig, FeatureMatrix, frame_count, mfcc
from .errors import (
    AlignmentFailure,
    GraphTooLong,
    InsufficientAnchors,
    InvariantViolation,
    RegionOutOfRange,
    TooShort,
)
from .g2p import G2P, tokenize


@dataclass(frozen=True)
class AlignedInterval:
    label: str
    start: float          # seconds
    end: float
    score: float          # mean per-frame emission log-likelihood

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass
class Alignment:
    words: list[AlignedInterval]
    phones: list[AlignedInterval]
    duration: float
    # Word index per phone interval (-1 for silence); lets callers
    # splice alignments without string matching.
    phone_words: list[int] = field(default_factory=list)

    def validate(self) -> None:
        validate_alignment(self)


def validate_alignment(alignment: Alignment) -> None:
    """Raise InvariantViolation unless the tiers are consistent.

    Words and phones must be sorted and non-overlapping, lie inside
    [0, duration], and every non-silence phone must nest inside a word.
    """
    eps = 1e-9
    for tier_name, tier in (("words", alignment.words), ("phones", alignment.phones)):
        prev_end = 0.0
        for iv in tier:
            if iv.start < -eps or iv.end > alignment.duration + eps:
                raise InvariantViolation(
                    f"{tier_name}: {iv.label!r} outside [0, {alignment.duration}]")
            if iv.end < iv.start:
                raise InvariantViolation(f"{tier_name}: {iv.label!r} reversed")
            if iv.start < prev_end - eps:
                raise InvariantViolation(
                    f"{tier_name}: {iv.label!r} overlaps previous interval")
            prev_end = iv.end
    if alignment.phone_words and len(alignment.phone_words) == len(alignment.phones):
        for iv, w in zip(alignment.phones, alignment.phone_words):
            if w < 0:
                continue
            word = alignment.words[w]
            if iv.start < word.start - eps or iv.end > word.end + eps:
                raise InvariantViolation(
                    f"phone {iv.label!r} leaks out of word {word.label!r}")


def words_from_text(text: str | list[str]) -> list[str]:
    if isinstance(text, str):
        return [w for phrase in tokenize(text) for w in phrase]
    return [w.lower() for w in text]


def build_graph(words: list[str], model: AcousticModel, g2p: G2P,
                use_sil: bool = True):
    """Linear word graph with optional silences and pronunciation variants."""
    builder = GraphBuilder(model)
    if use_sil:
        builder.add_optional([SIL])
    for idx, word in enumerate(words):
        prons = [list(p) for p in g2p.word(word)]
        builder.add_word(prons, idx)
        if use_sil:
            builder.add_optional([SIL])
    return builder.finish()


def _intervals_from_path(path: list[int], graph, emissions: np.ndarray,
                         words: list[str], hop: float, offset: float,
                         duration: float) -> Alignment:
    frame_scores = emissions[np.arange(len(path)), path]

    # Group frames into phone instances.  Node ids inside one phone
    # chain are consecutive, and every chain is entered at state 0, so a
    # +1 step that does not reset the state index stays in the phone.
    merged: list[AlignedInterval] = []
    merged_words: list[int] = []
    t = 0
    while t < len(path):
        node = path[t]
        u = t
        while u + 1 < len(path) and (
                path[u + 1] == path[u]
                or (path[u + 1] == path[u] + 1
                    and graph.states[path[u + 1]] != 0)):
            u += 1
        merged.append(AlignedInterval(
            graph.phones[node],
            offset + t * hop,
            offset + (u + 1) * hop,
            float(frame_scores[t:u + 1].mean()),
        ))
        merged_words.append(graph.word_idx[node])
        t = u + 1

    word_ivals: list[AlignedInterval] = []
    idx = 0
    while idx < len(merged):
        w = merged_words[idx]
        if w < 0:
            idx += 1
            continue
        j = idx
        while j + 1 < len(merged) and merged_words[j + 1] == w:
            j += 1
        span_scores = [m.score * (m.end - m.start) for m in merged[idx:j + 1]]
        total = merged[j].end - merged[idx].start
        word_ivals.append(AlignedInterval(
            words[w], merged[idx].start, merged[j].end,
            float(sum(span_scores) / total) if total else 0.0))
        idx = j + 1

    # Re-base phone ownership onto the word tier positions.
    remap = {}
    pos = 0
    for idx, w in enumerate(merged_words):
        if w >= 0 and w not in remap:
            remap[w] = pos
            pos += 1
    phone_owner = [remap.get(w, -1) for w in merged_words]

    alignment = Alignment(word_ivals, merged, duration, phone_owner)
    validate_alignment(alignment)
    return alignment


def force_align(features: FeatureMatrix, text: str | list[str],
                model: AcousticModel, g2p: G2P | None = None,
                use_sil: bool = True, offset: float = 0.0) -> Alignment:
    """Exact Viterbi alignment of a transcript against features.

    Raises GraphTooLong when the transcript needs more states than
    there are frames, and AlignmentFailure when no path survives.
    """
    g2p = g2p or G2P.default()
    model.check_features(features)
    words = words_from_text(text)
    if not words:
        raise AlignmentFailure("empty transcript")
    graph = build_graph(words, model, g2p, use_sil)
    emissions = emission_table(graph, model, features.data)
    path, _ = viterbi(graph, emissions)
    return _intervals_from_path(path, graph, emissions, words,
                                features.hop, offset, offset + features.duration)


# --- long-form alignment ------------------------------------------------------


@dataclass
class LongAlignConfig:
    chunk_threshold: float = 60.0   # seconds; longer audio gets chunked
    overlap_words: int = 5          # safety margin per chunk edge
    anchor_margin: float = 1.0      # nats/frame below the median word score
    max_depth: int = 5


@dataclass
class LongAlignResult:
    alignment: Alignment
    low_confidence: bool            # True when some words never anchored
    anchored_fraction: float


def energy_speech_spans(audio: AudioBuffer,
                        cfg: FeatureConfig | None = None) -> list[tuple[float, float]]:
    """Crude energy-based speech spans for when no VAD model is at hand."""
    cfg = cfg or FeatureConfig()
    win, hop = cfg.window_samples, cfg.hop_samples
    n = frame_count(len(audio.samples), cfg)
    if n == 0:
        return []
    idx = np.arange(win)[None, :] + hop * np.arange(n)[:, None]
    energy = np.log((audio.samples[idx] ** 2).sum(axis=1) + cfg.energy_floor)
    lo, hi = np.percentile(energy, [5, 95])
    mask = energy > (lo + hi) / 2.0
    # Bridge pauses up to 0.2 s so words stay together.
    spans = _mask_to_spans(mask)
    bridged: list[list[int]] = []
    for a, b in spans:
        if bridged and a - bridged[-1][1] <= 20:
            bridged[-1][1] = b
        else:
            bridged.append([a, b])
    hop_s = hop / audio.sample_rate
    return [(a * hop_s, b * hop_s) for a, b in bridged]


def _mask_to_spans(mask: np.ndarray) -> list[tuple[int, int]]:
    spans = []
    start = None
    for i, value in enumerate(mask):
        if value and start is None:
            start = i
        elif not value and start is not None:
            spans.append((start, i))
            start = None
    if start is not None:
        spans.append((start, len(mask)))
    return spans


def expected_word_duration(word: str, model: AcousticModel, g2p: G2P,
                           hop: float = 0.010) -> float:
    """Expected seconds the model spends on a word's primary pronunciation."""
    frames = 0.0
    for phone in g2p.word(word)[0]:
        trans = model.hmms[phone].trans
        frames += (1.0 / trans[:, 1]).sum()  # mean dwell of each state
    return frames * hop


def _chunk_spans(spans: list[tuple[float, float]], limit: float,
                 total_end: float) -> list[tuple[float, float]]:
    """Group speech spans into alignment chunks no longer than ``limit``."""
    if not spans:
        return [(0.0, total_end)]
    chunks: list[list[float]] = []
    for a, b in spans:
        if chunks and (b - chunks[-1][0]) <= limit:
            chunks[-1][1] = b
        else:
            chunks.append([a, b])
    return [(a, b) for a, b in chunks]


def _slice_audio(audio: AudioBuffer, t0: float, t1: float) -> AudioBuffer:
    a = max(0, int(round(t0 * audio.sample_rate)))
    b = min(len(audio.samples), int(round(t1 * audio.sample_rate)))
    return AudioBuffer(audio.samples[a:b], audio.sample_rate)


def align_long(audio: AudioBuffer, text: str | list[str], model: AcousticModel,
               g2p: G2P | None = None, vad_model=None,
               config: LongAlignConfig | None = None,
               feature_config: FeatureConfig | None = None) -> LongAlignResult:
    """Anchor-based alignment for recordings of arbitrary length."""
    g2p = g2p or G2P.default()
    config = config or LongAlignConfig()
    words = words_from_text(text)
    if not words:
        raise AlignmentFailure("empty transcript")

    if audio.duration <= config.chunk_threshold:
        alignment = force_align(mfcc(audio, feature_config), words, model, g2p)
        return LongAlignResult(alignment, False, 1.0)

    if vad_model is not None:
        from .vad import vad_segment
        from .dsp import vad_features
        segments = vad_segment(vad_features(audio, feature_config), vad_model)
        spans = [(s.start, s.end) for s in segments.segments if s.kind == "speech"]
    else:
        spans = energy_speech_spans(audio, feature_config)
    chunks = _chunk_spans(spans, config.chunk_threshold, audio.duration)

    # Distribute words over chunks proportionally to expected durations.
    expected = np.array([expected_word_duration(w, model, g2p) for w in words])
    centers = np.cumsum(expected) - expected / 2.0
    speech_total = sum(b - a for a, b in chunks)
    scale = centers / max(expected.sum(), 1e-9) * speech_total
    chunk_ranges: list[tuple[int, int]] = []
    consumed = 0.0
    for a, b in chunks:
        lo_t, hi_t = consumed, consumed + (b - a)
        consumed = hi_t
        in_chunk = np.nonzero((scale >= lo_t) & (scale < hi_t))[0]
        if len(in_chunk) == 0:
            chunk_ranges.append((0, 0))
            continue
        lo = max(0, int(in_chunk[0]) - config.overlap_words)
        hi = min(len(words), int(in_chunk[-1]) + 1 + config.overlap_words)
        chunk_ranges.append((lo, hi))

    placed: dict[int, tuple[AlignedInterval, list[AlignedInterval], bool]] = {}

    def consider(word_idx: int, interval: AlignedInterval,
                 phones: list[AlignedInterval], anchored: bool) -> None:
        old = placed.get(word_idx)
        if old is None or (anchored, interval.score) > (old[2], old[0].score):
            placed[word_idx] = (interval, phones, anchored)

    def align_span(t0: float, t1: float, lo: int, hi: int,
                   edge_margin: int) -> None:
        """Align words[lo:hi] inside [t0, t1] and record anchor candidates."""
        if hi <= lo:
            return
        chunk_audio = _slice_audio(audio, t0, t1)
        try:
            feats = mfcc(chunk_audio, feature_config)
            alignment = force_align(feats, words[lo:hi], model, g2p, offset=t0)
        except (GraphTooLong, AlignmentFailure, TooShort):
            return
        scores = [w.score for w in alignment.words]
        threshold = float(np.median(scores)) - config.anchor_margin
        for local, interval in enumerate(alignment.words):
            word_idx = lo + local
            in_core = edge_margin <= local < len(alignment.words) - edge_margin \
                or (lo == 0 and local < edge_margin) \
                or (hi == len(words) and local >= len(alignment.words) - edge_margin)
            phones = [p for p, o in zip(alignment.phones, alignment.phone_words)
                      if o == local]
            anchored = bool(in_core and interval.score >= threshold)
            consider(word_idx, interval, phones, anchored)

    for (t0, t1), (lo, hi) in zip(chunks, chunk_ranges):
        align_span(t0, t1, lo, hi, config.overlap_words)

    # Recursively re-align runs of unanchored words between anchors.
    for depth in range(1, config.max_depth + 1):
        unanchored = [i for i in range(len(words))
                      if i not in placed or not placed[i][2]]
        if not unanchored:
            break
        progress = False
        runs = _runs(unanchored)
        for lo, hi in runs:
            left = placed.get(lo - 1)
            right = placed.get(hi)
            t0 = left[0].end if left else 0.0
            t1 = right[0].start if right else audio.duration
            if t1 - t0 <= 0.02:
                continue
            before = sum(1 for i in range(lo, hi)
                         if i in placed and placed[i][2])
            align_span(t0, t1, lo, hi, edge_margin=0)
            after = sum(1 for i in range(lo, hi) if i in placed and placed[i][2])
            if after > before:
                progress = True
        if not progress:
            break

    missing = [i for i in range(len(words)) if i not in placed]
    if len(missing) == len(words):
        raise InsufficientAnchors("no word could be placed at all")
    # Fill any never-placed words with zero-length stubs at their
    # neighbour boundary so the output stays complete and ordered.
    for i in missing:
        prev_end = placed[i - 1][0].end if i - 1 in placed else 0.0
        stub = AlignedInterval(words[i], prev_end, prev_end, float("-inf"))
        placed[i] = (stub, [], False)

    word_ivals = []
    phone_ivals: list[AlignedInterval] = []
    phone_owner: list[int] = []
    for i in range(len(words)):
        interval, phones, _ = placed[i]
        word_ivals.append(interval)
        for p in phones:
            phone_ivals.append(p)
            phone_owner.append(i)
    word_ivals, phone_ivals, phone_owner = _drop_overlaps(
        word_ivals, phone_ivals, phone_owner)
    alignment = Alignment(word_ivals, phone_ivals, audio.duration, phone_owner)
    validate_alignment(alignment)
    anchored = sum(1 for v in placed.values() if v[2])
    low_confidence = anchored < len(words)
    return LongAlignResult(alignment, low_confidence, anchored / len(words))


def _runs(indices: list[int]) -> list[tuple[int, int]]:
    runs = []
    for i in indices:
        if runs and i == runs[-1][1]:
            runs[-1][1] = i + 1
        else:
            runs.append([i, i + 1])
    return [(a, b) for a, b in runs]


def _drop_overlaps(words, phones, owners):
    """Clip rare residual overlaps from independently aligned spans."""
    fixed_words: list[AlignedInterval] = []
    keep_word: list[bool] = []
    cursor = 0.0
    for iv in words:
        start = max(iv.start, cursor)
        end = max(iv.end, start)
        if (start, end) != (iv.start, iv.end):
            iv = replace(iv, start=start, end=end)
        fixed_words.append(iv)
        keep_word.append(True)
        cursor = end
    out_phones: list[AlignedInterval] = []
    out_owner: list[int] = []
    for p, o in zip(phones, owners):
        w = fixed_words[o]
        start, end = max(p.start, w.start), min(p.end, w.end)
        if end <= start:
            continue
        if (start, end) != (p.start, p.end):
            p = replace(p, start=start, end=end)
        out_phones.append(p)
        out_owner.append(o)
    return fixed_words, out_phones, out_owner


# --- region re-alignment ---------------------------------------------------------


def words_in_region(alignment: Alignment, region: tuple[float, float]) -> list[str]:
    """Labels of the words a region would snap to (for identity corrections)."""
    t0, t1 = region
    return [w.label for w in alignment.words if w.end > t0 and w.start < t1]


def realign_region(features: FeatureMatrix, alignment: Alignment,
                   region: tuple[float, float], text: str | list[str],
                   model: AcousticModel, g2p: G2P | None = None) -> Alignment:
    """Re-align one region of an existing alignment with corrected words.

    The region snaps outward to word boundaries.  Intervals outside the
    snapped region are returned as the very same objects (bit-identical
    values); only the inside is replaced.
    """
    g2p = g2p or G2P.default()
    model.check_features(features)
    t0, t1 = region
    if not (0.0 <= t0 < t1 <= alignment.duration + 1e-9):
        raise RegionOutOfRange(
            f"region [{t0}, {t1}] outside [0, {alignment.duration}]")

    overlapped = [i for i, w in enumerate(alignment.words)
                  if w.end > t0 and w.start < t1]
    if overlapped:
        r0 = min(alignment.words[overlapped[0]].start, t0)
        r1 = max(alignment.words[overlapped[-1]].end, t1)
        first, last = overlapped[0], overlapped[-1] + 1
    else:
        r0, r1 = t0, t1
        first = last = next((i for i, w in enumerate(alignment.words)
                             if w.start >= t1), len(alignment.words))

    hop = features.hop
    f0 = int(round(r0 / hop))
    f1 = min(int(round(r1 / hop)), features.n_frames)
    sub = FeatureMatrix(features.data[f0:f1], features.fingerprint, hop,
                        n_samples=int((f1 - f0) * hop * features.sample_rate),
                        sample_rate=features.sample_rate)
    new_words = words_from_text(text)
    if new_words:
        inner = force_align(sub, new_words, model, g2p, offset=f0 * hop)
        inner_words, inner_phones = inner.words, inner.phones
        inner_owner = inner.phone_words
    else:
        inner_words, inner_phones, inner_owner = [], [], []

    words_out = (alignment.words[:first] + inner_words + alignment.words[last:])
    phones_out: list[AlignedInterval] = []
    owner_out: list[int] = []
    for p, o in zip(alignment.phones, alignment.phone_words):
        if p.end <= r0 + 1e-9:
            phones_out.append(p)
            owner_out.append(o)
    base = len(alignment.words[:first])
    for p, o in zip(inner_phones, inner_owner):
        phones_out.append(p)
        owner_out.append(o + base if o >= 0 else -1)
    shift = len(inner_words) - (last - first)
    for p, o in zip(alignment.phones, alignment.phone_words):
        if p.start >= r1 - 1e-9:
            phones_out.append(p)
            owner_out.append(o + shift if o >= last else o)
    result = Alignment(words_out, phones_out, alignment.duration, owner_out)
    validate_alignment(result)
    return result
