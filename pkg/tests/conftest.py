import numpy as np
import pytest

from glos.am import flat_start, mixup, viterbi_train
from glos.g2p import G2P
from glos.synth import training_corpus


@pytest.fixture(scope="session")
def g2p() -> G2P:
    return G2P.default()


@pytest.fixture(scope="session")
def trained(g2p):
    """A small model trained on the synthetic corpus; shared, never mutated."""
    rng = np.random.default_rng(2024)
    corpus, _ = training_corpus(rng, n_utterances=12, g2p=g2p)
    model = flat_start(corpus)
    viterbi_train(model, corpus, iterations=4)
    mixup(model, 2)
    viterbi_train(model, corpus, iterations=3)
    return model
