"""Speaker diarization: BIC change-point detection and agglomerative clustering.

Two audio spans are compared by asking whether their frames are better
modeled by one full-covariance Gaussian or two (``delta_bic``).  Change
points are found with a growing-window scan, and the resulting segments are
merged bottom-up until every remaining pair prefers to stay apart.  Speakers
are anonymous labels "S0", "S1", ... in order of first appearance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dsp import FeatureMatrix
from .errors import SingularCovariance, TooShort

__all__ = [
    "SpeakerSegment",
    "GaussStats",
    "ChangeConfig",
    "delta_bic",
    "detect_changes",
    "cluster_speakers",
    "diarize",
]

# Dimensions used for speaker comparison: the static cepstral block.
N_STATIC = 13
COV_REG = 1e-6


@dataclass(frozen=True)
class SpeakerSegment:
    start: float
    end: float
    speaker: str

    @property
    def duration(self) -> float:
        return self.end - self.start


class GaussStats:
    """Sufficient statistics (count, mean, ML covariance) for a feature span."""

    def __init__(self, n: int, mean: np.ndarray, cov: np.ndarray):
        self.n = int(n)
        self.mean = np.asarray(mean, dtype=float)
        self.cov = np.asarray(cov, dtype=float)
        if self.cov.shape != (self.dim, self.dim):
            raise ValueError("covariance shape does not match mean")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def from_frames(cls, frames: np.ndarray) -> "GaussStats":
        x = np.asarray(frames, dtype=float)
        if x.ndim != 2 or len(x) == 0:
            raise ValueError("need a non-empty (frames, dim) array")
        mean = x.mean(axis=0)
        centered = x - mean
        cov = centered.T @ centered / len(x)
        return cls(len(x), mean, cov)

    def merge(self, other: "GaussStats") -> "GaussStats":
        """Exact pooled statistics, as if both spans' frames were concatenated."""
        n = self.n + other.n
        mean = (self.n * self.mean + other.n * other.mean) / n
        second = (
            self.n * (self.cov + np.outer(self.mean, self.mean))
            + other.n * (other.cov + np.outer(other.mean, other.mean))
        ) / n
        return GaussStats(n, mean, second - np.outer(mean, mean))


def _logdet(cov: np.ndarray) -> float:
    with np.errstate(invalid="ignore"):
        sign, val = np.linalg.slogdet(cov)
    if sign <= 0 or not np.isfinite(val):
        dim = cov.shape[0]
        with np.errstate(invalid="ignore"):
            sign, val = np.linalg.slogdet(cov + COV_REG * np.eye(dim))
        if sign <= 0 or not np.isfinite(val):
            raise SingularCovariance(
                "covariance not positive definite even after regularization"
            )
    return float(val)


def delta_bic(left: GaussStats, right: GaussStats, lam: float = 1.0) -> float:
    """BIC difference between one-Gaussian and two-Gaussian models.

    Positive value: splitting into two models is favored (likely a speaker
    change).  Negative: one model suffices (merge).
    """
    if left.n == 0 or right.n == 0:
        raise ValueError("both spans must be non-empty")
    pooled = left.merge(right)
    d = pooled.dim
    penalty = lam * 0.5 * (d + d * (d + 1) / 2) * math.log(pooled.n)
    return (
        pooled.n / 2 * _logdet(pooled.cov)
        - left.n / 2 * _logdet(left.cov)
        - right.n / 2 * _logdet(right.cov)
        - penalty
    )


@dataclass(frozen=True)
class ChangeConfig:
    """Growing-window scan parameters, in frames (default hop 10 ms)."""

    min_window: int = 100     # smallest span on either side of a candidate
    grow: int = 50            # growth / slide step
    max_window: int = 1000    # cap before the window starts sliding
    lam: float = 1.0


class _CumStats:
    """Prefix sums of x and x·xᵀ for O(D²) span statistics."""

    def __init__(self, data: np.ndarray):
        x = np.asarray(data, dtype=float)
        t, d = x.shape
        self.s1 = np.zeros((t + 1, d))
        np.cumsum(x, axis=0, out=self.s1[1:])
        outer = x[:, :, None] * x[:, None, :]
        self.s2 = np.zeros((t + 1, d, d))
        np.cumsum(outer, axis=0, out=self.s2[1:])

    def stats(self, a: int, b: int) -> GaussStats:
        n = b - a
        mean = (self.s1[b] - self.s1[a]) / n
        cov = (self.s2[b] - self.s2[a]) / n - np.outer(mean, mean)
        return GaussStats(n, mean, cov)

    def span_logdets(self, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
        """log|Σ| of many spans at once (with the same regularization fallback)."""
        n = (ends - starts).astype(float)[:, None]
        mean = (self.s1[ends] - self.s1[starts]) / n
        cov = (self.s2[ends] - self.s2[starts]) / n[..., None] \
            - mean[:, :, None] * mean[:, None, :]
        with np.errstate(invalid="ignore"):
            sign, val = np.linalg.slogdet(cov)
        bad = (sign <= 0) | ~np.isfinite(val)
        if bad.any():
            dim = cov.shape[-1]
            reg = cov[bad] + COV_REG * np.eye(dim)
            sign_r, val_r = np.linalg.slogdet(reg)
            if (sign_r <= 0).any() or not np.isfinite(val_r).all():
                raise SingularCovariance(
                    "covariance not positive definite even after regularization"
                )
            val[bad] = val_r
        return val


def _scan_window(cum, start, end, cfg):
    """Best split of [start, end); returns (frame, score) or None."""
    lo = start + cfg.min_window
    hi = end - cfg.min_window
    if hi < lo:
        return None
    cands = np.arange(lo, hi + 1)
    full = cum.span_logdets(np.array([start]), np.array([end]))[0]
    left = cum.span_logdets(np.full(len(cands), start), cands)
    right = cum.span_logdets(cands, np.full(len(cands), end))
    n = end - start
    n1 = (cands - start).astype(float)
    n2 = (end - cands).astype(float)
    d = cum.s1.shape[1]
    penalty = cfg.lam * 0.5 * (d + d * (d + 1) / 2) * math.log(n)
    scores = n / 2 * full - n1 / 2 * left - n2 / 2 * right - penalty
    best = int(np.argmax(scores))  # first max: earliest time wins ties
    return int(cands[best]), float(scores[best])


def detect_changes(features, cfg: ChangeConfig | None = None,
                   hop: float = 0.010) -> list[float]:
    """Speaker change times (seconds) via a growing-window ΔBIC scan.

    Within the current analysis window every split at least ``min_window``
    frames from both ends is scored; the argmax is emitted if its ΔBIC is
    positive and the scan restarts there, otherwise the window grows by
    ``grow`` frames up to ``max_window`` and then slides.
    """
    cfg = cfg or ChangeConfig()
    if isinstance(features, FeatureMatrix):
        data, hop = features.data[:, :N_STATIC], features.hop
    else:
        data = np.asarray(features, dtype=float)
    t = len(data)
    if t < 2 * cfg.min_window:
        raise TooShort(
            f"need at least {2 * cfg.min_window} frames, got {t}"
        )
    cum = _CumStats(data)
    changes: list[int] = []
    start = 0
    width = 2 * cfg.min_window
    while start + 2 * cfg.min_window <= t:
        end = min(start + width, t)
        found = _scan_window(cum, start, end, cfg)
        if found is not None and found[1] > 0:
            # A maximum hugging the window's trailing edge usually means the
            # true change lies beyond what we can see yet; keep growing unless
            # the window is already at the file end or the size cap.
            interior = found[0] < end - cfg.min_window
            if interior or end >= t or width >= cfg.max_window:
                changes.append(found[0])
                start = found[0]
                width = 2 * cfg.min_window
                continue
        if end >= t:
            break
        if width < cfg.max_window:
            width = min(width + cfg.grow, cfg.max_window)
        else:
            start += cfg.grow
    return [c * hop for c in changes]


def cluster_speakers(segments, lam: float = 1.0) -> list[SpeakerSegment]:
    """Merge (start, end, GaussStats) segments into labeled speaker turns.

    Repeatedly merges the cluster pair with the most negative ΔBIC until all
    remaining pairs score positive.  Labels are "S0", "S1", ... assigned to
    clusters in order of their earliest segment.
    """
    items = sorted(segments, key=lambda s: s[0])
    if not items:
        return []
    cluster_of = list(range(len(items)))          # segment -> cluster id
    stats: dict[int, GaussStats] = {i: s[2] for i, s in enumerate(items)}
    while len(stats) > 1:
        ids = sorted(stats)
        best = None
        for i_pos, i in enumerate(ids):
            for j in ids[i_pos + 1:]:
                score = delta_bic(stats[i], stats[j], lam)
                if best is None or score < best[0]:
                    best = (score, i, j)
        if best[0] > 0:
            break
        _, i, j = best
        stats[i] = stats[i].merge(stats[j])
        del stats[j]
        cluster_of = [i if c == j else c for c in cluster_of]
    labels: dict[int, str] = {}
    out = []
    for seg_idx, (start, end, _) in enumerate(items):
        cluster = cluster_of[seg_idx]
        if cluster not in labels:
            labels[cluster] = f"S{len(labels)}"
        out.append(SpeakerSegment(start, end, labels[cluster]))
    return out


def diarize(features: FeatureMatrix, speech=None,
            cfg: ChangeConfig | None = None) -> list[SpeakerSegment]:
    """Full pipeline: change detection then clustering, speech spans only.

    ``speech`` is an optional segment list from the voice activity detector;
    when given, only its "speech" spans are analyzed and nonspeech is never
    assigned a speaker.  Without it the whole feature matrix is treated as
    speech.
    """
    cfg = cfg or ChangeConfig()
    data = features.data[:, :N_STATIC]
    hop = features.hop
    if speech is None:
        spans = [(0, len(data))]
    else:
        spans = [
            (s.start_frame, min(s.end_frame, len(data)))
            for s in speech.segments if s.kind == "speech"
        ]
    pieces = []
    for a, b in spans:
        if b - a <= 0:
            continue
        bounds = [a]
        if b - a >= 2 * cfg.min_window:
            for t in detect_changes(data[a:b], cfg, hop):
                bounds.append(a + int(round(t / hop)))
        bounds.append(b)
        for p, q in zip(bounds, bounds[1:]):
            pieces.append((p * hop, q * hop, GaussStats.from_frames(data[p:q])))
    return cluster_speakers(pieces, cfg.lam)
