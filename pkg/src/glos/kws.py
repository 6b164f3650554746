"""Keyword spotting: likelihood-ratio sliding search over acoustic features.

Each keyword is expanded to phone-state sequences (lexicon pronunciation, or
rule-generated and syllable-segmented for out-of-vocabulary words) and scored
at every start frame against an online background model — the best single
phone-state score per frame.  Spans whose keyword-vs-background ratio peaks
above the threshold become hits, after greedy non-overlap suppression.

Scores are per-frame normalized log-likelihood ratios (keyword path minus
background, divided by span length), so spans of different lengths compare on
one scale.  Reported likelihoods are rescaled to the non-negative range:
``max(0, score − θ₀)·100`` with ``θ₀ = LIKELIHOOD_ORIGIN``.  Only ordering
and thresholding are meaningful; the absolute scale is a display convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .am import AcousticModel
from .dsp import FeatureMatrix
from .errors import G2PError
from .g2p import G2P, Lexicon, syllabify

__all__ = [
    "KeywordHit",
    "KeywordQuery",
    "LIKELIHOOD_ORIGIN",
    "build_query",
    "background_scores",
    "search",
    "format_hits",
]

NEG_INF = float("-inf")

# Raw score subtracted before scaling to the reported non-negative likelihood.
LIKELIHOOD_ORIGIN = -5.0


@dataclass(frozen=True)
class KeywordHit:
    keyword: str
    start: float
    duration: float
    likelihood: float

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("hit duration must be positive")
        if self.likelihood < 0:
            raise ValueError("likelihood is non-negative by construction")


@dataclass(frozen=True)
class KeywordQuery:
    keyword: str
    pronunciations: tuple[tuple[str, ...], ...]
    mode: str  # "word" | "syllable-fallback"
    # Per pronunciation, the phone index where each syllable starts (empty for
    # lexicon words); recorded to allow partial-credit scoring downstream.
    syllable_starts: tuple[tuple[int, ...], ...] = field(default=())

    def __post_init__(self):
        if not self.pronunciations:
            raise ValueError("a query needs at least one pronunciation")


def build_query(keyword: str, lexicon: Lexicon | None, g2p: G2P) -> KeywordQuery:
    """Expand one orthographic token into the phone sequences to search.

    In-lexicon words use their lexicon pronunciations directly.  Unknown words
    fall back to the rewrite rules, and the result is segmented into syllables
    whose concatenation is searched as a whole.
    """
    word = keyword.strip().lower()
    if not word:
        raise G2PError("empty keyword")
    if lexicon is not None and word in lexicon:
        prons = tuple(tuple(p) for p in lexicon.get(word))
        return KeywordQuery(word, prons, "word")
    variants = g2p.word(word)
    prons = tuple(tuple(v) for v in variants)
    starts = []
    for pron in prons:
        syllables = syllabify(list(pron))
        offsets = []
        pos = 0
        for syl in syllables:
            offsets.append(pos)
            pos += len(syl.phones)
        starts.append(tuple(offsets))
    return KeywordQuery(word, prons, "syllable-fallback", tuple(starts))


def background_scores(model: AcousticModel, features: FeatureMatrix) -> np.ndarray:
    """Per-frame best phone-state log-likelihood (the online garbage model)."""
    model.check_features(features)
    best = np.full(features.n_frames, NEG_INF)
    for phone in model.phones:
        for state in range(3):
            np.maximum(best, model.state_loglik(phone, state, features.data),
                       out=best)
    return best


def _scan_pronunciation(pron, model, features, background):
    """Token-passing scan of one phone sequence.

    Returns (raw_end, start_frame): for every end frame, the best
    keyword-vs-background score of a path through the full sequence ending
    there, and the frame where that path started.
    """
    states = [(ph, s) for ph in pron for s in range(3)]
    n = len(states)
    em = np.stack(
        [model.state_loglik(ph, s, features.data) for ph, s in states], axis=1)
    em -= background[:, None]
    stay = np.array([model.transition_logs(ph, s)[0] for ph, s in states])
    adv = np.array([model.transition_logs(ph, s)[1] for ph, s in states])

    t_frames = features.n_frames
    dp = np.full(n, NEG_INF)
    start = np.zeros(n, dtype=int)
    raw_end = np.full(t_frames, NEG_INF)
    end_start = np.zeros(t_frames, dtype=int)
    for t in range(t_frames):
        stayed = dp + stay
        advanced = np.concatenate(([NEG_INF], dp[:-1] + adv[:-1]))
        keep_stay = stayed >= advanced  # ties keep the earlier-started token
        new_dp = np.where(keep_stay, stayed, advanced)
        new_start = np.where(keep_stay, start, np.concatenate(([0], start[:-1])))
        if new_dp[0] < 0.0:  # fresh token may enter the first state for free
            new_dp[0] = 0.0
            new_start[0] = t
        dp = new_dp + em[t]
        start = new_start
        raw_end[t] = dp[-1] + adv[-1]
        end_start[t] = start[-1]
    return raw_end, end_start


def _peak_candidates(raw_end, end_start, theta, hop):
    """Local maxima of the per-frame-normalized score curve above ``theta``."""
    t_frames = len(raw_end)
    spans = np.arange(t_frames) - end_start + 1
    with np.errstate(invalid="ignore"):
        norm = raw_end / np.maximum(spans, 1)
    out = []
    for t in range(t_frames):
        score = norm[t]
        if not np.isfinite(score) or score <= theta:
            continue
        if t > 0 and norm[t - 1] > score:
            continue
        if t + 1 < t_frames and norm[t + 1] > score:
            continue
        out.append((float(score), int(end_start[t]) * hop, int(spans[t]) * hop))
    return out


def search(features: FeatureMatrix, query: KeywordQuery, model: AcousticModel,
           theta: float = LIKELIHOOD_ORIGIN,
           background: np.ndarray | None = None) -> list[KeywordHit]:
    """All non-overlapping occurrences of one keyword scoring above ``theta``.

    Suppression is greedy by raw score; equal scores keep the earlier start,
    so identical inputs always produce identical hit lists.
    """
    model.check_features(features)
    if background is None:
        background = background_scores(model, features)
    candidates = []
    for pron in query.pronunciations:
        raw_end, end_start = _scan_pronunciation(pron, model, features,
                                                 background)
        candidates.extend(
            _peak_candidates(raw_end, end_start, theta, features.hop))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    kept: list[tuple[float, float, float]] = []
    for cand in candidates:
        _, c_start, c_dur = cand
        overlaps = any(
            c_start < k_start + k_dur and k_start < c_start + c_dur
            for _, k_start, k_dur in kept)
        if not overlaps:
            kept.append(cand)
    kept.sort(key=lambda c: (-c[0], c[1]))
    return [
        KeywordHit(query.keyword, start, dur,
                   max(0.0, (raw - LIKELIHOOD_ORIGIN)) * 100.0)
        for raw, start, dur in kept
    ]


def _fmt(value: float) -> str:
    """Two fractional digits with trailing zeros (and a bare dot) trimmed."""
    text = f"{value:.2f}"
    return text.rstrip("0").rstrip(".") if "." in text else text


def format_hits(hits: list[KeywordHit]) -> str:
    """One `<keyword> <start> <duration> <likelihood>` line per hit.

    Hits are grouped by keyword in order of first appearance and sorted by
    descending likelihood within each group.
    """
    groups: dict[str, list[KeywordHit]] = {}
    for hit in hits:
        groups.setdefault(hit.keyword, []).append(hit)
    lines = []
    for keyword, group in groups.items():
        for hit in sorted(group, key=lambda h: (-h.likelihood, h.start)):
            lines.append(
                f"{keyword} {_fmt(hit.start)} {_fmt(hit.duration)} "
                f"{_fmt(hit.likelihood)}")
    return "\n".join(lines) + ("\n" if lines else "")
