"""Acoustic model: GMMs, flat start, hard-EM training, mixture growth."""

import math

import numpy as np
import pytest

from glos.am import (
    AcousticModel,
    Gmm,
    PhoneHmm,
    TrainResult,
    flat_start,
    mixup,
    viterbi_train,
)
from glos.dsp import FeatureMatrix
from glos.errors import (
    DimensionMismatch,
    EmptyCorpus,
    FingerprintMismatch,
    UtteranceTooShort,
)
from oracles import gmm_loglik_scipy

FP = "test|fake"


def _feats(data: np.ndarray) -> FeatureMatrix:
    return FeatureMatrix(np.asarray(data, float), FP, 0.010,
                         n_samples=len(data) * 160 + 240, sample_rate=16000)


def _toy_corpus(rng, n_utts=4, phones=("aa", "bb"), frames_each=30):
    """Two fake phones with well-separated 2-D distributions."""
    centers = {"aa": np.array([0.0, 0.0]), "bb": np.array([4.0, -3.0])}
    corpus = []
    for _ in range(n_utts):
        seq, rows = [], []
        for phone in phones:
            n = frames_each + int(rng.integers(-5, 6))
            rows.append(centers[phone] + 0.3 * rng.standard_normal((n, 2)))
            seq.append(phone)
        corpus.append((_feats(np.vstack(rows)), seq))
    return corpus


# --- gmm ----------------------------------------------------------------------

def test_gmm_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        Gmm(np.array([0.6, 0.5]), np.zeros((2, 3)), np.ones((2, 3)))


def test_gmm_rejects_nonpositive_variance():
    with pytest.raises(ValueError):
        Gmm(np.array([1.0]), np.zeros((1, 2)), np.array([[1.0, 0.0]]))


def test_single_gaussian_loglik_at_mean():
    variances = np.array([[0.5, 2.0, 1.3]])
    gmm = Gmm(np.array([1.0]), np.zeros((1, 3)), variances)
    expected = -0.5 * np.log(2 * math.pi * variances).sum()
    assert abs(gmm.loglik(np.zeros(3)) - expected) < 1e-12


def test_gmm_loglik_matches_scipy_oracle():
    rng = np.random.default_rng(11)
    weights = np.array([0.25, 0.4, 0.35])
    means = rng.normal(0, 2, (3, 5))
    variances = rng.uniform(0.2, 3.0, (3, 5))
    gmm = Gmm(weights, means, variances)
    for _ in range(25):
        x = rng.normal(0, 2, 5)
        ours = gmm.loglik(x)
        ref = gmm_loglik_scipy(weights, means, variances, x)
        assert abs(ours - ref) < 1e-9


def test_frame_loglik_dimension_mismatch():
    gmm = Gmm(np.array([1.0]), np.zeros((1, 4)), np.ones((1, 4)))
    model = AcousticModel(
        {"a": PhoneHmm("a", [gmm] * 3, np.full((3, 2), 0.5))}, FP)
    with pytest.raises(DimensionMismatch):
        model.frame_loglik("a", 0, np.zeros(5))


# --- flat start ------------------------------------------------------------------

def test_flat_start_uniform_segmentation_oracle():
    data = np.arange(60, dtype=float).reshape(60, 1)
    corpus = [(_feats(data), ["aa", "bb"])]
    model = flat_start(corpus, inventory=["aa", "bb"])
    # 60 frames over 6 states: exactly 10 frames per state.
    for phone, base in (("aa", 0), ("bb", 30)):
        for s in range(3):
            seg = data[base + 10 * s: base + 10 * (s + 1), 0]
            assert model.hmms[phone].states[s].means[0, 0] == pytest.approx(seg.mean())


def test_flat_start_covers_inventory_and_sil():
    rng = np.random.default_rng(0)
    corpus = _toy_corpus(rng)
    model = flat_start(corpus, inventory=["aa", "bb", "cc"])
    assert set(model.hmms) == {"aa", "bb", "cc", "sil"}
    # Unseen phones start from global statistics.
    seen = np.vstack([f.data for f, _ in corpus])
    assert model.hmms["cc"].states[0].means[0] == pytest.approx(seen.mean(axis=0))


def test_flat_start_variance_floor():
    data = np.ones((30, 2))  # zero variance everywhere
    model = flat_start([(_feats(data), ["aa"])], inventory=["aa"])
    assert np.all(model.hmms["aa"].states[0].vars >= 1e-4)


def test_flat_start_errors():
    with pytest.raises(EmptyCorpus):
        flat_start([])
    with pytest.raises(UtteranceTooShort):
        flat_start([(_feats(np.zeros((5, 2))), ["aa", "bb"])])
    good = _feats(np.zeros((30, 2)))
    bad = FeatureMatrix(np.zeros((30, 2)), "other|fp", 0.010, 30 * 160, 16000)
    with pytest.raises(FingerprintMismatch):
        flat_start([(good, ["aa"]), (bad, ["aa"])])


# --- hard EM ------------------------------------------------------------------------

def test_viterbi_train_loglik_never_decreases():
    rng = np.random.default_rng(1)
    corpus = _toy_corpus(rng, n_utts=5)
    model = flat_start(corpus)
    result = viterbi_train(model, corpus, iterations=8)
    assert isinstance(result, TrainResult)
    assert len(result.loglik_history) == 8
    frames = result.frames_per_iteration[0]
    for earlier, later in zip(result.loglik_history, result.loglik_history[1:]):
        assert later >= earlier - 1e-6 * frames
    assert not any(result.skipped)


def test_viterbi_train_tightens_transitions():
    rng = np.random.default_rng(2)
    corpus = _toy_corpus(rng, n_utts=6)
    model = flat_start(corpus)
    viterbi_train(model, corpus, iterations=5)
    for phone in ("aa", "bb"):
        stay = model.hmms[phone].trans[:, 0]
        # Long steady segments force self-loop-heavy states somewhere,
        # and the probability floor always holds.
        assert stay.max() > 0.5
        assert np.all((stay >= 1e-3) & (stay <= 1 - 1e-3))


def test_viterbi_train_skips_hopeless_utterance():
    rng = np.random.default_rng(3)
    corpus = _toy_corpus(rng, n_utts=3)
    # Too few frames for the mandatory chain: must be skipped, not fatal.
    corpus.append((_feats(np.zeros((4, 2))), ["aa", "bb"]))
    model = flat_start(corpus[:3])
    result = viterbi_train(model, corpus, iterations=2)
    assert result.skipped == [[3], [3]]


def test_viterbi_train_all_skipped_is_fatal():
    rng = np.random.default_rng(4)
    model = flat_start(_toy_corpus(rng))
    from glos.errors import AlignmentFailure
    with pytest.raises(AlignmentFailure):
        viterbi_train(model, [(_feats(np.zeros((2, 2))), ["aa", "bb"])], 1)


# --- mixup -----------------------------------------------------------------------------

def test_mixup_splits_heaviest_component():
    gmm = Gmm(np.array([0.7, 0.3]),
              np.array([[1.0, 2.0], [5.0, 6.0]]),
              np.array([[0.25, 1.0], [1.0, 1.0]]))
    model = AcousticModel(
        {"a": PhoneHmm("a", [gmm], np.array([[0.5, 0.5]]))}, FP, n_states=1)
    mixup(model, 3)
    grown = model.hmms["a"].states[0]
    assert grown.n_components == 3
    assert grown.weights == pytest.approx([0.35, 0.3, 0.35])
    offset = 0.1 * np.sqrt([0.25, 1.0])
    assert grown.means[0] == pytest.approx([1.0, 2.0] - offset)
    assert grown.means[2] == pytest.approx([1.0, 2.0] + offset)
    assert grown.vars[2] == pytest.approx([0.25, 1.0])


def test_mixup_rejects_shrinking():
    gmm = Gmm(np.array([0.5, 0.5]), np.zeros((2, 2)), np.ones((2, 2)))
    model = AcousticModel(
        {"a": PhoneHmm("a", [gmm], np.array([[0.5, 0.5]]))}, FP, n_states=1)
    with pytest.raises(ValueError):
        mixup(model, 1)


def test_mixup_then_train_still_monotone():
    rng = np.random.default_rng(5)
    corpus = _toy_corpus(rng, n_utts=5)
    model = flat_start(corpus)
    viterbi_train(model, corpus, iterations=3)
    mixup(model, 2)
    result = viterbi_train(model, corpus, iterations=4)
    frames = result.frames_per_iteration[0]
    for earlier, later in zip(result.loglik_history, result.loglik_history[1:]):
        assert later >= earlier - 1e-6 * frames


# --- serialization -----------------------------------------------------------------------

def test_save_load_scores_bit_identical(tmp_path):
    rng = np.random.default_rng(6)
    corpus = _toy_corpus(rng)
    model = flat_start(corpus)
    viterbi_train(model, corpus, iterations=3)
    mixup(model, 2)
    path = tmp_path / "model.json"
    model.save(path)
    loaded = AcousticModel.load(path)
    assert loaded.fingerprint == model.fingerprint
    assert loaded.n_states == model.n_states
    probe = rng.normal(0, 1, (40, 2))
    for phone in model.hmms:
        for s in range(3):
            a = model.state_loglik(phone, s, probe)
            b = loaded.state_loglik(phone, s, probe)
            assert np.array_equal(a, b)  # bit-identical, not just close


def test_load_rejects_other_files(tmp_path):
    path = tmp_path / "nope.json"
    path.write_text('{"format": "something-else"}')
    with pytest.raises(ValueError):
        AcousticModel.load(path)
