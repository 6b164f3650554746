"""Voice activity detection.

A logistic-regression classifier over 16 frame features (log energy,
zero-crossing rate, spectral entropy, 13 cepstra) produces per-frame
speech posteriors.  The decision threshold is picked on the training
data as the largest value still reaching the requested speech recall
(a VAD feeding transcription must not lose speech; precision matters less).
Smoothing then turns posteriors into segments: median filter, hangover,
and minimum-duration merging.  The resulting segments partition the
audio exactly: boundaries live on the frame grid, the last segment ends
at the audio duration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dsp import FeatureMatrix
from .errors import FingerprintMismatch, SingleClass


@dataclass
class VadModel:
    weights: np.ndarray
    bias: float
    threshold: float              # posterior decision threshold in (0, 1)
    feat_mean: np.ndarray
    feat_std: np.ndarray
    fingerprint: str
    converged: bool = True
    recall_target: float = 0.99

    def __post_init__(self):
        self.weights = np.asarray(self.weights, float)
        self.feat_mean = np.asarray(self.feat_mean, float)
        self.feat_std = np.asarray(self.feat_std, float)
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold {self.threshold} outside (0, 1)")

    def posteriors(self, features: FeatureMatrix) -> np.ndarray:
        if features.fingerprint != self.fingerprint:
            raise FingerprintMismatch(
                f"features {features.fingerprint!r} vs model {self.fingerprint!r}")
        z = (features.data - self.feat_mean) / self.feat_std
        return _sigmoid(z @ self.weights + self.bias)

    def to_dict(self) -> dict:
        return {
            "format": "glos-vad",
            "version": 1,
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "threshold": self.threshold,
            "feat_mean": self.feat_mean.tolist(),
            "feat_std": self.feat_std.tolist(),
            "fingerprint": self.fingerprint,
            "converged": self.converged,
            "recall_target": self.recall_target,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "VadModel":
        if payload.get("format") != "glos-vad":
            raise ValueError("not a VAD model file")
        return cls(
            np.array(payload["weights"]), payload["bias"], payload["threshold"],
            np.array(payload["feat_mean"]), np.array(payload["feat_std"]),
            payload["fingerprint"], payload["converged"],
            payload.get("recall_target", 0.99),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "VadModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def vad_train(features: FeatureMatrix | np.ndarray, labels: np.ndarray,
              fingerprint: str | None = None, recall_target: float = 0.99,
              max_epochs: int = 500, tol: float = 1e-6,
              learning_rate: float = 1.0) -> VadModel:
    """Fit the frame classifier and pick the recall-constrained threshold.

    Gradient descent on the mean logistic loss, stopping when the loss
    improves by less than ``tol`` or after ``max_epochs``; in the latter
    case the model is still returned, flagged ``converged=False``.
    Raises SingleClass when labels are all speech or all nonspeech.
    """
    if isinstance(features, FeatureMatrix):
        data = features.data
        fingerprint = features.fingerprint
    else:
        data = np.asarray(features, float)
        if fingerprint is None:
            raise ValueError("fingerprint required with a bare matrix")
    labels = np.asarray(labels).astype(bool)
    if labels.all() or not labels.any():
        raise SingleClass("training labels contain a single class")
    if len(labels) != len(data):
        raise ValueError("labels and features disagree in length")

    mean = data.mean(axis=0)
    std = data.std(axis=0)
    std = np.where(std < 1e-8, 1.0, std)
    x = (data - mean) / std
    y = labels.astype(float)

    w = np.zeros(x.shape[1])
    b = 0.0
    n = len(y)
    lr = learning_rate
    last_loss = math.inf
    converged = False
    for _ in range(max_epochs):
        p = _sigmoid(x @ w + b)
        loss = -np.mean(y * np.log(np.maximum(p, 1e-300))
                        + (1 - y) * np.log(np.maximum(1 - p, 1e-300)))
        if last_loss - loss < tol and loss <= last_loss:
            converged = True
            break
        if loss > last_loss:
            lr *= 0.5  # overshoot: halve the step and try again
        last_loss = min(loss, last_loss)
        grad_w = x.T @ (p - y) / n
        grad_b = float(np.mean(p - y))
        w -= lr * grad_w
        b -= lr * grad_b

    posteriors = _sigmoid(x @ w + b)
    threshold = _recall_threshold(posteriors[labels], recall_target)
    return VadModel(w, b, threshold, mean, std,
                    fingerprint, converged, recall_target)


def _recall_threshold(speech_posteriors: np.ndarray, target: float) -> float:
    """Largest threshold that keeps at least ``target`` recall on speech."""
    needed = math.ceil(target * len(speech_posteriors))
    ranked = np.sort(speech_posteriors)[::-1]
    theta = float(ranked[max(needed - 1, 0)])
    # Guard the open interval: posteriors of a sigmoid are strictly
    # inside (0, 1) already, but numerical saturation can hit 1.0.
    return min(max(theta, 1e-12), 1.0 - 1e-12)


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    kind: str          # "speech" | "nonspeech"
    start_frame: int
    end_frame: int


@dataclass
class SegmentList:
    segments: list[Segment]
    duration: float
    hop: float

    def validate_partition(self) -> None:
        """Exact partition check on the frame grid plus the final edge."""
        if not self.segments:
            raise ValueError("no segments")
        if self.segments[0].start_frame != 0 or self.segments[0].start != 0.0:
            raise ValueError("first segment must start at zero")
        for a, b in zip(self.segments, self.segments[1:]):
            if a.end_frame != b.start_frame or a.end != b.start:
                raise ValueError(f"gap or overlap near {a.end}")
            if a.kind == b.kind:
                raise ValueError("adjacent segments must alternate kinds")
        if self.segments[-1].end != self.duration:
            raise ValueError("last segment must end at the audio duration")


@dataclass(frozen=True)
class SmoothingConfig:
    median_frames: int = 11
    hangover: float = 0.2          # seconds appended to every speech run
    min_speech: float = 0.1        # seconds
    min_nonspeech: float = 0.2


def _median_filter_bool(mask: np.ndarray, width: int) -> np.ndarray:
    """Majority vote in a centered window, edges repeat the boundary value."""
    if width <= 1:
        return mask.copy()
    half = width // 2
    padded = np.concatenate([np.repeat(mask[0], half), mask,
                             np.repeat(mask[-1], half)])
    counts = np.convolve(padded.astype(int), np.ones(width, int), mode="valid")
    return counts * 2 > width


def smooth_mask(mask: np.ndarray, hop: float,
                cfg: SmoothingConfig | None = None) -> np.ndarray:
    """Median filter, hangover, then minimum-duration merging."""
    cfg = cfg or SmoothingConfig()
    out = _median_filter_bool(mask, cfg.median_frames)

    hang = round(cfg.hangover / hop)
    if hang > 0 and out.any():
        extended = out.copy()
        i = 0
        n = len(out)
        while i < n:
            if out[i]:
                j = i
                while j < n and out[j]:
                    j += 1
                extended[j:min(j + hang, n)] = True
                i = j
            else:
                i += 1
        out = extended

    min_sp = round(cfg.min_speech / hop)
    min_ns = round(cfg.min_nonspeech / hop)
    runs = _runs_of(out)
    while len(runs) > 1:
        violating = [
            (b - a, idx) for idx, (a, b, val) in enumerate(runs)
            if (b - a) < (min_sp if val else min_ns)
        ]
        if not violating:
            break
        _, idx = min(violating)     # shortest first, earliest on ties
        a, b, val = runs[idx]
        out[a:b] = not val
        runs = _runs_of(out)
    return out


def _runs_of(mask: np.ndarray) -> list[tuple[int, int, bool]]:
    runs = []
    start = 0
    for i in range(1, len(mask) + 1):
        if i == len(mask) or mask[i] != mask[start]:
            runs.append((start, i, bool(mask[start])))
            start = i
    return runs


def mask_to_segments(mask: np.ndarray, hop: float, duration: float) -> SegmentList:
    """Frame mask to an exact partition of [0, duration]."""
    segments = []
    for a, b, val in _runs_of(mask):
        start = a * hop
        end = b * hop
        segments.append(Segment(start, end, "speech" if val else "nonspeech", a, b))
    if segments:
        last = segments[-1]
        # The final frame's hop undershoots the true duration; extend.
        segments[-1] = Segment(last.start, duration, last.kind,
                               last.start_frame, last.end_frame)
    else:
        segments = [Segment(0.0, duration, "nonspeech", 0, 0)]
    out = SegmentList(segments, duration, hop)
    out.validate_partition()
    return out


def vad_segment(features: FeatureMatrix, model: VadModel,
                cfg: SmoothingConfig | None = None) -> SegmentList:
    """Posterior -> threshold -> smoothing -> exact partition."""
    posteriors = model.posteriors(features)
    mask = posteriors >= model.threshold
    mask = smooth_mask(mask, features.hop, cfg)
    return mask_to_segments(mask, features.hop, features.duration)
