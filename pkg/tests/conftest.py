import numpy as np
import pytest

from tagalog.config import TrainConfig
from tagalog.corpus import build_corpus, split
from tagalog.synth import SynthSpec, gen_synth


@pytest.fixture(scope="session")
def synth_corpus():
    """The 6-user / 60-post acceptance corpus, cleaned and split 80/10/10."""
    posts, vocab = build_corpus(gen_synth(SynthSpec(6, 60, 7, 12, 42)))
    vocab.freeze()
    train, val, test = split(posts, (0.8, 0.1, 0.1), 42)
    return train, val, test, vocab


@pytest.fixture(scope="session")
def trained(synth_corpus):
    from tagalog.train import train
    tr, va, te, vocab = synth_corpus
    ckpt, history = train(tr, va, vocab, TrainConfig(epochs=150))
    return ckpt, history


@pytest.fixture
def rng():
    return np.random.default_rng(0)
