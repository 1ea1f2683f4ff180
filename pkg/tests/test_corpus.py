import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coocpoison import corpus
from coocpoison.errors import ConfigError, ParseError

from conftest import random_corpus


def test_build_vocab_counts_and_order():
    d = corpus.build_vocab(["a b a"])
    assert d.words == ["a", "b"]
    assert list(d.counts) == [2, 1]
    assert d.id_of("a") == 0


def test_build_vocab_min_count():
    d = corpus.build_vocab(["a b a"], min_count=2)
    assert d.words == ["a"]


def test_build_vocab_empty_corpus():
    d = corpus.build_vocab([])
    assert len(d) == 0


def test_build_vocab_tie_broken_by_first_appearance():
    d = corpus.build_vocab(["b a", "a b c"])
    assert d.words[:2] == ["b", "a"]


def test_build_vocab_max_vocab():
    d = corpus.build_vocab(["a a a b b c"], max_vocab=2)
    assert d.words == ["a", "b"]


def test_lowercase_default():
    d = corpus.build_vocab(["The THE the"])
    assert d.words == ["the"]
    assert d.counts[0] == 3


def test_weight_values():
    g = corpus.weight_values(corpus.HARMONIC, 4)
    assert np.allclose(g, [1, 1 / 2, 1 / 3, 1 / 4])
    g = corpus.weight_values(corpus.LINEAR, 4)
    assert np.allclose(g, [1, 3 / 4, 1 / 2, 1 / 4])
    with pytest.raises(ConfigError):
        corpus.weight_values("nope", 4)


def test_count_single_pair():
    d = corpus.build_vocab(["s t"])
    c = corpus.count_cooc(["s t"], d, window=10)
    assert c.value(d.id_of("s"), d.id_of("t")) == 1.0


def test_count_harmonic_window2():
    d = corpus.build_vocab(["a b c"])
    c = corpus.count_cooc(["a b c"], d, window=2)
    a, b, cc = d.id_of("a"), d.id_of("b"), d.id_of("c")
    assert c.value(a, b) == 1.0
    assert c.value(b, cc) == 1.0
    assert c.value(a, cc) == 0.5


def test_count_linear_window2():
    d = corpus.build_vocab(["a b c"])
    c = corpus.count_cooc(["a b c"], d, window=2, weighting=corpus.LINEAR)
    a, b, cc = d.id_of("a"), d.id_of("b"), d.id_of("c")
    assert c.value(a, b) == 1.0
    assert c.value(b, cc) == 1.0
    assert c.value(a, cc) == 0.5


def test_lines_do_not_span():
    d = corpus.build_vocab(["a", "b"])
    c = corpus.count_cooc(["a", "b"], d, window=5)
    assert c.mat.nnz == 0


def test_oov_occupies_positions():
    d = corpus.Dictionary(["a", "b"], np.array([1, 1]))
    c = corpus.count_cooc(["a xxx b"], d, window=2)
    # distance between a and b is 2 even though xxx is out of vocabulary
    assert c.value(0, 1) == 0.5
    assert c.skipped_tokens == 1


def test_merge_identity_and_sum():
    d = corpus.build_vocab(["a b"])
    c1 = corpus.count_cooc(["a b"], d, window=2)
    merged = corpus.merge([c1, c1])
    assert merged.value(0, 1) == 2.0
    alone = corpus.merge([c1])
    assert (alone.mat != c1.mat).nnz == 0


def test_merge_mismatch_rejected():
    d = corpus.build_vocab(["a b"])
    c1 = corpus.count_cooc(["a b"], d, window=2)
    c2 = corpus.count_cooc(["a b"], d, window=3)
    with pytest.raises(ConfigError):
        corpus.merge([c1, c2])


def test_merge_sharded_equals_single_pass(rng):
    lines = random_corpus(rng, n_words=12, n_lines=1000)
    d = corpus.build_vocab(lines)
    whole = corpus.count_cooc(lines, d, window=4)
    shards = [
        corpus.count_cooc(lines[i::4], d, window=4) for i in range(4)
    ]
    merged = corpus.merge(shards)
    assert np.allclose((merged.mat - whole.mat).data, 0, atol=1e-12) or (merged.mat != whole.mat).nnz == 0


@settings(max_examples=30, deadline=None)
@given(
    st.lists(
        st.lists(st.integers(0, 6), min_size=1, max_size=12).map(
            lambda ids: " ".join(f"w{i}" for i in ids)
        ),
        min_size=1,
        max_size=8,
    ),
    st.integers(1, 6),
)
def test_symmetry_property(lines, window):
    d = corpus.build_vocab(lines)
    if len(d) == 0:
        return
    c = corpus.count_cooc(lines, d, window=window)
    assert abs(c.mat - c.mat.T).max() == 0.0


@settings(max_examples=20, deadline=None)
@given(st.permutations(list(range(6))))
def test_line_order_invariance(perm):
    lines = ["a b c", "c d", "a e f g", "b b", "e a c", "f g a"]
    d = corpus.build_vocab(lines)
    base = corpus.count_cooc(lines, d, window=3)
    shuffled = corpus.count_cooc([lines[i] for i in perm], d, window=3)
    assert (base.mat != shuffled.mat).nnz == 0


def test_self_concatenation_doubles(rng):
    lines = random_corpus(rng, n_words=8, n_lines=40)
    d = corpus.build_vocab(lines)
    once = corpus.count_cooc(lines, d, window=3)
    twice = corpus.count_cooc(lines + lines, d, window=3)
    assert np.allclose((twice.mat - 2 * once.mat).data if (twice.mat - 2 * once.mat).nnz else [0], 0, atol=1e-9)


def test_marginal_bound(rng):
    lines = random_corpus(rng, n_words=10, n_lines=60)
    d = corpus.build_vocab(lines)
    window = 4
    c = corpus.count_cooc(lines, d, window=window)
    cap = 2.0 * corpus.weight_values(corpus.HARMONIC, window).sum()
    rowsums = c.rowsums()
    for u in range(len(d)):
        assert rowsums[u] <= d.counts[u] * cap + 1e-9


def test_vocab_roundtrip(tmp_path):
    d = corpus.build_vocab(["the the the cat sat"])
    p = tmp_path / "vocab.txt"
    corpus.save_vocab(d, str(p))
    text = p.read_text()
    assert text.splitlines()[0] == "the 3"
    d2 = corpus.load_vocab(str(p))
    assert d2.words == d.words
    assert list(d2.counts) == list(d.counts)


def test_vocab_parse_error_offset(tmp_path):
    p = tmp_path / "vocab.txt"
    p.write_text("the 3\nbroken\n")
    with pytest.raises(ParseError) as e:
        corpus.load_vocab(str(p))
    assert e.value.offset == 6


def test_cooc_roundtrip_bit_exact(tmp_path, rng):
    lines = random_corpus(rng, n_words=9, n_lines=30)
    d = corpus.build_vocab(lines)
    c = corpus.count_cooc(lines, d, window=3)
    p = tmp_path / "cooc.bin"
    corpus.save_cooc(c, str(p))
    c2 = corpus.load_cooc(str(p), len(d), 3)
    assert (c.mat != c2.mat).nnz == 0


def test_cooc_record_layout(tmp_path):
    d = corpus.Dictionary([f"w{i}" for i in range(8)], np.ones(8, dtype=np.int64))
    import scipy.sparse as sp

    mat = sp.csr_matrix(([0.5], ([2], [6])), shape=(8, 8))
    p = tmp_path / "one.bin"
    corpus.save_cooc(corpus.CoocMatrix(mat, 3, corpus.HARMONIC), str(p))
    raw = p.read_bytes()
    assert len(raw) == 16
    # 1-based little-endian int32 ids then a little-endian float64
    assert raw == (3).to_bytes(4, "little") + (7).to_bytes(4, "little") + np.float64(0.5).tobytes()


def test_cooc_truncated_record(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"\x01\x00\x00\x00\x02\x00\x00\x00")
    with pytest.raises(ParseError):
        corpus.load_cooc(str(p), 4, 2)


def test_extended_dictionary():
    d = corpus.build_vocab(["a b a"])
    d2 = d.extended(["zzz"])
    assert d2.id_of("zzz") == 2
    assert d2.counts[2] == 0
    with pytest.raises(ConfigError):
        d2.extended(["a"])
