import numpy as np
import pytest

from coocpoison import corpus, distmat


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def random_corpus(rng, n_words=20, n_lines=150, min_len=5, max_len=15, prefix="w"):
    words = [f"{prefix}{i}" for i in range(n_words)]
    return [
        " ".join(rng.choice(words, size=rng.integers(min_len, max_len)))
        for _ in range(n_lines)
    ]


@pytest.fixture
def small_counts(rng):
    """A counted random corpus shared by proximity/solver tests."""
    lines = random_corpus(rng)
    d = corpus.build_vocab(lines)
    c = corpus.count_cooc(lines, d, window=5)
    return lines, d, c


def config_for(kind, cooc, rng=None, estimated_ids=(), k=1):
    if kind == distmat.SPPMI:
        return distmat.DistConfig.sppmi(cooc, k=k)
    if kind == distmat.LCO:
        return distmat.DistConfig.lco(cooc.dim)
    rng = rng or np.random.default_rng(7)
    return distmat.DistConfig.bias(
        rng.normal(0, 0.3, cooc.dim), cooc if estimated_ids else None, estimated_ids
    )
