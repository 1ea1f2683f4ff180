import math

import numpy as np
import pytest

from coocpoison import corpus, distmat
from coocpoison.errors import ConfigError

from conftest import random_corpus


def test_f_examples():
    assert distmat.f_value(math.e**2, 1.0, 1.0, 0.0) == pytest.approx(0.0)
    assert distmat.f_value(math.e**3.5, 1.0, 1.0, 0.0) == pytest.approx(1.5)
    assert distmat.f_value(0.0, 1.0, 1.0, math.exp(-60)) == math.exp(-60)


def test_f_is_total():
    # no input raises; zero count maps to the floor
    assert distmat.f_value(0.0, -math.inf, 5.0, 0.0) == 0.0


def test_lco_entry_log1_is_zero():
    d = corpus.build_vocab(["u v"])
    c = corpus.count_cooc(["u v"], d, window=2)
    cfg = distmat.DistConfig.lco(c.dim)
    assert distmat.m_entry(0, 1, c, cfg) == pytest.approx(0.0)


def test_sppmi_matches_direct_formula(rng):
    # five-word corpus, entry checked against the shifted-PMI expression
    lines = random_corpus(rng, n_words=5, n_lines=80)
    d = corpus.build_vocab(lines)
    c = corpus.count_cooc(lines, d, window=3)
    k = 4
    cfg = distmat.DistConfig.sppmi(c, k=k)
    z = c.total()
    rowsums = c.rowsums()
    for u in range(len(d)):
        for v in range(len(d)):
            cuv = c.value(u, v)
            direct = 0.0
            if cuv > 0:
                direct = max(
                    math.log(cuv) - math.log(rowsums[u]) - math.log(rowsums[v]) + math.log(z / k),
                    0.0,
                )
            assert distmat.m_entry(u, v, c, cfg) == pytest.approx(direct, abs=1e-12)


def test_bias_all_zero_degenerates_to_lco(rng):
    lines = random_corpus(rng, n_words=6, n_lines=40)
    d = corpus.build_vocab(lines)
    c = corpus.count_cooc(lines, d, window=3)
    zero_bias = distmat.DistConfig.bias(np.zeros(c.dim))
    lco = distmat.DistConfig.lco(c.dim)
    for u in range(len(d)):
        for v in range(len(d)):
            assert distmat.m_entry(u, v, c, zero_bias) == pytest.approx(
                distmat.m_entry(u, v, c, lco)
            )


def test_m_nonnegative(rng):
    lines = random_corpus(rng, n_words=10, n_lines=60)
    d = corpus.build_vocab(lines)
    c = corpus.count_cooc(lines, d, window=4)
    for cfg in (
        distmat.DistConfig.sppmi(c, 2),
        distmat.DistConfig.lco(c.dim),
        distmat.DistConfig.bias(rng.normal(0, 1, c.dim)),
    ):
        for u in range(len(d)):
            _, vals = distmat.m_row(u, c, cfg)
            assert (vals >= 0).all()


def test_sppmi_symmetry(rng):
    lines = random_corpus(rng, n_words=8, n_lines=50)
    d = corpus.build_vocab(lines)
    c = corpus.count_cooc(lines, d, window=3)
    cfg = distmat.DistConfig.sppmi(c, 3)
    for u in range(len(d)):
        for v in range(len(d)):
            assert distmat.m_entry(u, v, c, cfg) == distmat.m_entry(v, u, c, cfg)


def test_sppmi_doubling_invariance(rng):
    lines = random_corpus(rng, n_words=7, n_lines=60)
    d = corpus.build_vocab(lines)
    once = corpus.count_cooc(lines, d, window=3)
    twice = corpus.count_cooc(lines + lines, d, window=3)
    cfg1 = distmat.DistConfig.sppmi(once, 5)
    cfg2 = distmat.DistConfig.sppmi(twice, 5)
    for u in range(len(d)):
        for v in range(len(d)):
            assert distmat.m_entry(u, v, once, cfg1) == pytest.approx(
                distmat.m_entry(u, v, twice, cfg2), abs=1e-9
            )


def test_new_word_bias_singleton_bucket():
    rowsums = np.array([10.0, 100.0, 1000.0])
    biases = np.array([0.1, 0.5, 0.9])
    est = distmat.NewWordBiasEstimator(rowsums, biases)
    assert est(100.0) == pytest.approx(0.5)


def test_new_word_bias_constant():
    est = distmat.NewWordBiasEstimator(np.array([3.0, 9.0, 81.0]), np.full(3, 0.37))
    for mass in (0.5, 3.0, 50.0, 1e6):
        assert est(mass) == pytest.approx(0.37)


def test_new_word_bias_three_buckets():
    # hand-built fixture: three groups with distinct masses and biases
    rowsums = np.array([2.0, 2.1, 50.0, 52.0, 900.0, 905.0])
    biases = np.array([0.0, 0.2, 1.0, 1.2, 2.0, 2.2])
    est = distmat.NewWordBiasEstimator(rowsums, biases)
    assert est(2.05) == pytest.approx(0.1)
    assert est(51.0) == pytest.approx(1.1)
    assert est(902.0) == pytest.approx(2.1)
    # empty bucket falls back to the global mean
    assert est(9.0) == pytest.approx(biases.mean())
    assert est(0.0) == pytest.approx(biases.mean())


def test_estimate_bias_new_word_requires_glove(rng):
    lines = random_corpus(rng, n_words=5, n_lines=20)
    d = corpus.build_vocab(lines)
    c = corpus.count_cooc(lines, d, window=2)
    with pytest.raises(ConfigError):
        distmat.estimate_bias_new_word(np.ones(5), distmat.BiasTerms.zero(5), c)
    cfg = distmat.DistConfig.bias(rng.normal(0, 1, 5))
    val = distmat.estimate_bias_new_word(np.zeros(5), cfg.bias, c)
    assert np.isfinite(val)


def test_empty_vocab_estimator_rejected():
    with pytest.raises(ConfigError):
        distmat.NewWordBiasEstimator(np.array([]), np.array([]))


def test_bias_file_roundtrip(tmp_path, rng):
    lines = random_corpus(rng, n_words=6, n_lines=20)
    d = corpus.build_vocab(lines)
    values = rng.normal(0, 1, len(d))
    p = tmp_path / "bias.txt"
    distmat.save_bias(d.words, values, str(p))
    back = distmat.load_bias(str(p), d)
    assert np.allclose(back, values)


def test_bias_file_missing_word(tmp_path):
    d = corpus.build_vocab(["a b"])
    p = tmp_path / "bias.txt"
    p.write_text("a 0.5\n")
    with pytest.raises(ConfigError):
        distmat.load_bias(str(p), d)
