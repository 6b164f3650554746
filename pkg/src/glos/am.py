"""Monophone GMM-HMM acoustic models and their training loops.

Each phone gets a left-to-right HMM (default 3 states, self-loop +
forward only).  States emit through diagonal-covariance Gaussian
mixtures.  Training is hard EM: Viterbi-align every utterance against
its linear phone chain, re-estimate transitions as constrained maximum
likelihood and run one EM step on every state's Gaussian mixture over
its assigned frames.  Both M-steps are exact constrained maximizers
(variance floor, transition probability floor), so the total aligned
log-likelihood never decreases.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .decode import GraphBuilder, emission_table, viterbi
from .dsp import FeatureMatrix
from .errors import (
    AlignmentFailure,
    DimensionMismatch,
    EmptyCorpus,
    FingerprintMismatch,
    GraphTooLong,
    UtteranceTooShort,
)

LOG_2PI = math.log(2.0 * math.pi)
DEFAULT_VAR_FLOOR = 1e-4
TRANS_FLOOR = 1e-3
SIL = "sil"

# A training/alignment corpus is a list of these pairs.
Utterance = tuple[FeatureMatrix, list[str]]


@dataclass
class Gmm:
    """Diagonal-covariance Gaussian mixture."""

    weights: np.ndarray  # (K,)
    means: np.ndarray    # (K, D)
    vars: np.ndarray     # (K, D)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        self.vars = np.atleast_2d(np.asarray(self.vars, dtype=np.float64))
        if abs(self.weights.sum() - 1.0) > 1e-9:
            raise ValueError(f"mixture weights sum to {self.weights.sum()!r}")
        if (self.vars <= 0).any():
            raise ValueError("non-positive variance")

    @property
    def n_components(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def loglik(self, frames: np.ndarray) -> np.ndarray:
        """(T,) log densities; also accepts a single (D,) frame."""
        single = frames.ndim == 1
        x = np.atleast_2d(frames)
        if x.shape[1] != self.dim:
            raise DimensionMismatch(
                f"frame dim {x.shape[1]}, model dim {self.dim}")
        out = self.component_logliks(x)
        total = logsumexp(out, axis=1)
        return float(total[0]) if single else total

    def component_logliks(self, x: np.ndarray) -> np.ndarray:
        """(T, K) per-component joint log densities log(w_k N_k(x))."""
        const = (np.log(self.weights)
                 - 0.5 * (self.dim * LOG_2PI + np.log(self.vars).sum(axis=1)))
        diff = x[:, None, :] - self.means[None, :, :]
        quad = (diff * diff / self.vars[None, :, :]).sum(axis=2)
        return const[None, :] - 0.5 * quad


@dataclass
class PhoneHmm:
    """Left-to-right HMM without skips."""

    phone: str
    states: list[Gmm]
    trans: np.ndarray  # (S, 2): [stay, advance] per state

    def __post_init__(self):
        self.trans = np.asarray(self.trans, dtype=np.float64)
        if self.trans.shape != (len(self.states), 2):
            raise ValueError("transition table shape mismatch")
        if not np.allclose(self.trans.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("transition rows must sum to 1")


@dataclass
class AcousticModel:
    """All phone HMMs plus the feature recipe they were trained on."""

    hmms: dict[str, PhoneHmm]
    fingerprint: str
    var_floor: float = DEFAULT_VAR_FLOOR
    n_states: int = 3

    @property
    def dim(self) -> int:
        first = next(iter(self.hmms.values()))
        return first.states[0].dim

    @property
    def phones(self) -> list[str]:
        return sorted(self.hmms)

    def check_features(self, features: FeatureMatrix) -> None:
        if features.fingerprint != self.fingerprint:
            raise FingerprintMismatch(
                f"features {features.fingerprint!r} vs model {self.fingerprint!r}")

    def frame_loglik(self, phone: str, state: int, frame: np.ndarray) -> float:
        frame = np.asarray(frame, dtype=np.float64)
        if frame.ndim != 1 or frame.shape[0] != self.dim:
            raise DimensionMismatch(
                f"frame shape {frame.shape}, model dim {self.dim}")
        return float(self.hmms[phone].states[state].loglik(frame))

    def state_loglik(self, phone: str, state: int, frames: np.ndarray) -> np.ndarray:
        return self.hmms[phone].states[state].loglik(frames)

    def transition_logs(self, phone: str, state: int) -> tuple[float, float]:
        stay, advance = self.hmms[phone].trans[state]
        return math.log(stay), math.log(advance)

    # --- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": "glos-am",
            "version": 1,
            "fingerprint": self.fingerprint,
            "var_floor": self.var_floor,
            "n_states": self.n_states,
            "phones": {
                name: {
                    "trans": hmm.trans.tolist(),
                    "states": [
                        {
                            "weights": g.weights.tolist(),
                            "means": g.means.tolist(),
                            "vars": g.vars.tolist(),
                        }
                        for g in hmm.states
                    ],
                }
                for name, hmm in sorted(self.hmms.items())
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "AcousticModel":
        if payload.get("format") != "glos-am":
            raise ValueError("not an acoustic model file")
        hmms = {}
        for name, spec in payload["phones"].items():
            states = [
                Gmm(np.array(s["weights"]), np.array(s["means"]), np.array(s["vars"]))
                for s in spec["states"]
            ]
            hmms[name] = PhoneHmm(name, states, np.array(spec["trans"]))
        return cls(hmms, payload["fingerprint"], payload["var_floor"],
                   payload["n_states"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "AcousticModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def flat_start(corpus: list[Utterance], inventory: list[str] | None = None,
               n_states: int = 3, var_floor: float = DEFAULT_VAR_FLOOR,
               ) -> AcousticModel:
    """Initialize single-Gaussian models from uniform segmentations.

    Every utterance is cut into equal spans, one per phone state in
    transcription order (a 60-frame utterance over 2 phones yields six
    10-frame spans).  Phones of the inventory that never occur in the
    corpus start from the global statistics, so the model always covers
    the full inventory plus silence.
    """
    if not corpus:
        raise EmptyCorpus("no training utterances")
    fingerprint = corpus[0][0].fingerprint
    dim = corpus[0][0].dim
    sums: dict[tuple[str, int], np.ndarray] = {}
    sqsums: dict[tuple[str, int], np.ndarray] = {}
    counts: dict[tuple[str, int], int] = {}
    total_sum = np.zeros(dim)
    total_sq = np.zeros(dim)
    total_n = 0
    for features, phones in corpus:
        if features.fingerprint != fingerprint:
            raise FingerprintMismatch("mixed feature configurations in corpus")
        data = features.data
        n_frames = len(data)
        n_segments = n_states * len(phones)
        if not phones or n_frames < n_segments:
            raise UtteranceTooShort(
                f"{n_frames} frames for {n_segments} states")
        for seg in range(n_segments):
            lo = seg * n_frames // n_segments
            hi = (seg + 1) * n_frames // n_segments
            span = data[lo:hi]
            key = (phones[seg // n_states], seg % n_states)
            if key not in sums:
                sums[key] = np.zeros(dim)
                sqsums[key] = np.zeros(dim)
                counts[key] = 0
            sums[key] += span.sum(axis=0)
            sqsums[key] += (span * span).sum(axis=0)
            counts[key] += len(span)
        total_sum += data.sum(axis=0)
        total_sq += (data * data).sum(axis=0)
        total_n += n_frames

    global_mean = total_sum / total_n
    global_var = np.maximum(total_sq / total_n - global_mean ** 2, var_floor)
    if inventory is None:
        from .g2p.phones import INVENTORY
        inventory = list(INVENTORY)
    phone_set = set(inventory)
    phone_set.update(p for _, phones in corpus for p in phones)
    phone_set.add(SIL)

    hmms = {}
    for phone in sorted(phone_set):
        states = []
        for s in range(n_states):
            key = (phone, s)
            if counts.get(key):
                mean = sums[key] / counts[key]
                var = np.maximum(sqsums[key] / counts[key] - mean ** 2, var_floor)
            else:
                mean, var = global_mean.copy(), global_var.copy()
            states.append(Gmm(np.array([1.0]), mean[None, :], var[None, :]))
        hmms[phone] = PhoneHmm(phone, states, np.full((n_states, 2), 0.5))
    return AcousticModel(hmms, fingerprint, var_floor, n_states)


@dataclass
class TrainResult:
    model: AcousticModel
    loglik_history: list[float]          # total aligned log-likelihood per iteration
    frames_per_iteration: list[int]
    skipped: list[list[int]] = field(default_factory=list)  # utterance indices


def _align_utterance(model: AcousticModel, features: FeatureMatrix,
                     phones: list[str]):
    """Viterbi path of one utterance against its mandatory phone chain."""
    builder = GraphBuilder(model)
    builder.add_chain(phones, word_idx=0)
    graph = builder.finish()
    emissions = emission_table(graph, model, features.data)
    path, score = viterbi(graph, emissions)
    return path, score, graph


def viterbi_train(model: AcousticModel, corpus: list[Utterance],
                  iterations: int = 10) -> TrainResult:
    """Hard-EM re-estimation; the history it returns is non-decreasing."""
    if not corpus:
        raise EmptyCorpus("no training utterances")
    history: list[float] = []
    frame_counts: list[int] = []
    skipped_log: list[list[int]] = []
    for _ in range(iterations):
        frames_by_state: dict[tuple[str, int], list[np.ndarray]] = {}
        stay_counts: dict[tuple[str, int], int] = {}
        adv_counts: dict[tuple[str, int], int] = {}
        total_ll = 0.0
        total_frames = 0
        skipped: list[int] = []
        for idx, (features, phones) in enumerate(corpus):
            model.check_features(features)
            try:
                path, score, graph = _align_utterance(model, features, phones)
            except (AlignmentFailure, GraphTooLong):
                skipped.append(idx)
                continue
            total_ll += score
            total_frames += features.n_frames
            state_seq = [(graph.phones[n], graph.states[n]) for n in path]
            for t, key in enumerate(state_seq):
                frames_by_state.setdefault(key, []).append(features.data[t])
                last = t == len(state_seq) - 1
                if last or path[t + 1] != path[t]:
                    adv_counts[key] = adv_counts.get(key, 0) + 1
                else:
                    stay_counts[key] = stay_counts.get(key, 0) + 1
        if len(skipped) == len(corpus):
            raise AlignmentFailure("every utterance failed to align")
        skipped_log.append(skipped)
        history.append(total_ll)
        frame_counts.append(total_frames)
        _reestimate(model, frames_by_state, stay_counts, adv_counts)
    return TrainResult(model, history, frame_counts, skipped_log)


def _reestimate(model: AcousticModel,
                frames_by_state: dict[tuple[str, int], list[np.ndarray]],
                stay_counts: dict[tuple[str, int], int],
                adv_counts: dict[tuple[str, int], int]) -> None:
    for key, rows in frames_by_state.items():
        phone, state = key
        hmm = model.hmms[phone]
        x = np.vstack(rows)
        gmm = hmm.states[state]
        # One EM step for the mixture on its hard-assigned frames.
        joint = gmm.component_logliks(x)                     # (n, K)
        post = np.exp(joint - logsumexp(joint, axis=1, keepdims=True))
        occ = post.sum(axis=0)                               # (K,)
        weights = np.maximum(occ, 1e-10)
        weights = weights / weights.sum()
        means = gmm.means.copy()
        vars_ = gmm.vars.copy()
        for k in range(gmm.n_components):
            if occ[k] < 1e-8:
                continue  # dead component: keep its parameters
            mean_k = post[:, k] @ x / occ[k]
            var_k = post[:, k] @ (x * x) / occ[k] - mean_k ** 2
            means[k] = mean_k
            vars_[k] = np.maximum(var_k, model.var_floor)
        hmm.states[state] = Gmm(weights, means, vars_)
        # Constrained ML for the binary stay/advance choice.
        stay = stay_counts.get(key, 0)
        adv = adv_counts.get(key, 0)
        if stay + adv:
            p_stay = min(max(stay / (stay + adv), TRANS_FLOOR), 1.0 - TRANS_FLOOR)
            hmm.trans[state] = (p_stay, 1.0 - p_stay)


def mixup(model: AcousticModel, target: int) -> AcousticModel:
    """Grow every state's mixture to ``target`` components.

    Repeatedly splits the heaviest component: weight halves, the means
    move apart by 0.1 standard deviations, variances are copied.
    """
    for hmm in model.hmms.values():
        for s, gmm in enumerate(hmm.states):
            if target < gmm.n_components:
                raise ValueError(
                    f"target {target} below current size {gmm.n_components}")
            weights = list(gmm.weights)
            means = list(gmm.means)
            vars_ = list(gmm.vars)
            while len(weights) < target:
                i = int(np.argmax(weights))
                offset = 0.1 * np.sqrt(vars_[i])
                w = weights[i] / 2.0
                weights[i] = w
                mean_i = means[i]
                means[i] = mean_i - offset
                weights.append(w)
                means.append(mean_i + offset)
                vars_.append(vars_[i].copy())
            hmm.states[s] = Gmm(np.array(weights), np.array(means), np.array(vars_))
    return model
