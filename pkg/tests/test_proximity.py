import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coocpoison import corpus, distmat, proximity
from coocpoison.errors import SpecError

from conftest import config_for, random_corpus


def dense_cos2_oracle(u, v, cooc, cfg):
    """Dense from-first-principles evaluation of second-order proximity."""
    rowsums = cooc.rowsums()
    ids = np.arange(cooc.dim)
    b = cfg.bias.values_for(ids, rowsums)
    rows = []
    for w in (u, v):
        row = cooc.row_dense(w)
        bw = cfg.bias.value_of(w, rowsums[w])
        m = np.zeros(cooc.dim)
        pos = row > 0
        m[pos] = np.maximum(np.log(row[pos]) - bw - b[pos], 0.0)
        rows.append(m)
    nu, nv = np.dot(rows[0], rows[0]), np.dot(rows[1], rows[1])
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.dot(rows[0], rows[1]) / math.sqrt(nu * nv))


def cos1_formula_oracle(u, v, cooc, cfg):
    rowsums = cooc.rowsums()
    b_u = cfg.bias.value_of(u, rowsums[u])
    b_v = cfg.bias.value_of(v, rowsums[v])
    num = distmat.f_value(cooc.value(u, v), b_u, b_v, 0.0)
    den = math.sqrt(
        distmat.f_value(rowsums[u], b_u, b_v, cfg.epsilon_floor)
        * distmat.f_value(rowsums[v], b_u, b_v, cfg.epsilon_floor)
    )
    return num / den if num > 0 else 0.0


def test_cos1_self_is_one():
    # a word whose only cooccurrences are with itself: numerator == normalizer
    d = corpus.Dictionary(["a"], np.array([4]))
    c = corpus.count_cooc(["a a a"], d, window=1)
    cfg = distmat.DistConfig.lco(1)
    assert proximity.cos1(0, 0, c, cfg) == pytest.approx(1.0)


def test_cos1_zero_count_is_zero(small_counts):
    lines, d, c = small_counts
    cfg = distmat.DistConfig.lco(c.dim)
    u, v = 0, 1
    if c.value(u, v) != 0:
        # find a zero pair
        found = False
        for u in range(len(d)):
            for v in range(len(d)):
                if c.value(u, v) == 0 and u != v:
                    found = True
                    break
            if found:
                break
    assert proximity.cos1(u, v, c, cfg) == 0.0 or c.value(u, v) > 0


def test_cos1_matches_formula_oracle(rng):
    lines = random_corpus(rng, n_words=4, n_lines=30)
    d = corpus.build_vocab(lines)
    c = corpus.count_cooc(lines, d, window=3)
    for kind in (distmat.LCO, distmat.SPPMI, distmat.BIAS):
        cfg = config_for(kind, c, rng)
        for u in range(len(d)):
            for v in range(len(d)):
                assert proximity.cos1(u, v, c, cfg) == pytest.approx(
                    cos1_formula_oracle(u, v, c, cfg), abs=1e-12
                )


def test_cos2_identical_rows():
    d = corpus.Dictionary(["a", "b", "x"], np.array([2, 2, 4]))
    lines = ["a x", "b x"]
    c = corpus.count_cooc(lines, d, window=1)
    cfg = distmat.DistConfig.lco(3)
    # both rows have the same single-entry support through x with count 1 ->
    # both M rows are zero (log 1 = 0): degenerate, cosine 0
    assert proximity.cos2(0, 1, c, cfg) == 0.0
    lines = ["a x x a x", "b x x b x"]
    c = corpus.count_cooc(lines, d, window=1)
    assert proximity.cos2(0, 1, c, cfg) == pytest.approx(1.0)


def test_cos2_orthogonal_rows():
    d = corpus.Dictionary(["a", "b", "x", "y"], np.array([4, 4, 4, 4]))
    lines = ["a x a x a x", "b y b y b y"]
    c = corpus.count_cooc(lines, d, window=1)
    cfg = distmat.DistConfig.lco(4)
    assert proximity.cos2(0, 1, c, cfg) == 0.0


def test_cos2_matches_dense_oracle(rng):
    lines = random_corpus(rng, n_words=10, n_lines=50)
    d = corpus.build_vocab(lines)
    c = corpus.count_cooc(lines, d, window=4)
    for kind in (distmat.LCO, distmat.SPPMI, distmat.BIAS):
        cfg = config_for(kind, c, rng)
        for u in range(0, len(d), 2):
            for v in range(1, len(d), 3):
                assert proximity.cos2(u, v, c, cfg) == pytest.approx(
                    dense_cos2_oracle(u, v, c, cfg), abs=1e-12
                )


def test_cos12_is_mean(small_counts):
    _, d, c = small_counts
    cfg = distmat.DistConfig.lco(c.dim)
    for u, v in [(0, 1), (2, 5), (1, 7)]:
        assert proximity.cos12(u, v, c, cfg) == pytest.approx(
            0.5 * proximity.cos1(u, v, c, cfg) + 0.5 * proximity.cos2(u, v, c, cfg)
        )


def test_bounds_property(rng):
    for trial in range(5):
        lines = random_corpus(rng, n_words=8, n_lines=30)
        d = corpus.build_vocab(lines)
        c = corpus.count_cooc(lines, d, window=3)
        cfg = config_for((distmat.LCO, distmat.SPPMI, distmat.BIAS)[trial % 3], c, rng)
        for u in range(len(d)):
            for v in range(len(d)):
                for fn in (proximity.cos1, proximity.cos2, proximity.cos12):
                    val = fn(u, v, c, cfg)
                    assert -1e-12 <= val <= 1.0 + 1e-12


def test_symmetry_in_pair(rng):
    lines = random_corpus(rng, n_words=7, n_lines=40)
    d = corpus.build_vocab(lines)
    c = corpus.count_cooc(lines, d, window=3)
    for kind in (distmat.LCO, distmat.SPPMI):
        cfg = config_for(kind, c, rng)
        for u in range(len(d)):
            for v in range(len(d)):
                assert proximity.cos1(u, v, c, cfg) == pytest.approx(proximity.cos1(v, u, c, cfg))
                assert proximity.cos2(u, v, c, cfg) == pytest.approx(proximity.cos2(v, u, c, cfg))


def test_spec_validation():
    with pytest.raises(SpecError):
        proximity.AttackSpec(source=0, pos=(0,), mode="proximity", max_size=1.0)
    with pytest.raises(SpecError):
        proximity.AttackSpec(source=0, pos=(1,), neg=(1,), mode="proximity", max_size=1.0)
    with pytest.raises(SpecError):
        proximity.AttackSpec(source=0, pos=(), neg=(), mode="proximity", max_size=1.0)
    with pytest.raises(SpecError):
        proximity.AttackSpec(source=0, pos=(1, 2), mode="rank", rank=1)
    with pytest.raises(SpecError):
        proximity.AttackSpec(source=0, pos=(1,), mode="proximity")


def test_objective_single_target(small_counts):
    _, d, c = small_counts
    cfg = distmat.DistConfig.lco(c.dim)
    spec = proximity.AttackSpec(source=0, pos=(1,), expr=proximity.COS12,
                                mode="proximity", max_size=1.0)
    assert proximity.objective(spec, {}, c, cfg) == pytest.approx(
        proximity.cos12(0, 1, c, cfg)
    )


def test_objective_pos_neg_cancellation(rng):
    lines = ["a b c"] * 10 + ["a c b"] * 10
    d = corpus.build_vocab(lines)
    c = corpus.count_cooc(lines, d, window=1)
    cfg = distmat.DistConfig.lco(c.dim)
    a = d.id_of("a")
    spec = proximity.AttackSpec(source=d.id_of("b"), pos=(a,), neg=(d.id_of("c"),),
                                expr=proximity.COS1, mode="proximity", max_size=1.0)
    p1 = proximity.cos1(d.id_of("b"), a, c, cfg)
    p2 = proximity.cos1(d.id_of("b"), d.id_of("c"), c, cfg)
    assert proximity.objective(spec, {}, c, cfg) == pytest.approx((p1 - p2) / 2)


def test_objective_zero_delta_fixed_point(small_counts, rng):
    _, d, c = small_counts
    for kind in (distmat.LCO, distmat.SPPMI, distmat.BIAS):
        cfg = config_for(kind, c, rng)
        spec = proximity.AttackSpec(source=3, pos=(1, 4), neg=(2,),
                                    expr=proximity.COS12, mode="proximity", max_size=9.0)
        base = proximity.objective(spec, {}, c, cfg)
        # adding then removing mass returns the original value
        assert proximity.objective(spec, {5: 0.0}, c, cfg) == pytest.approx(base, abs=1e-9)
        assert base == pytest.approx(
            (proximity.cos12(3, 1, c, cfg) + proximity.cos12(3, 4, c, cfg)
             - proximity.cos12(3, 2, c, cfg)) / 3
        )


def test_objective_monotone_in_target_mass(small_counts):
    _, d, c = small_counts
    cfg = distmat.DistConfig.lco(c.dim)
    spec = proximity.AttackSpec(source=0, pos=(1,), expr=proximity.COS1,
                                mode="proximity", max_size=99.0)
    vals = [proximity.objective(spec, {1: x}, c, cfg) for x in (0.0, 0.4, 1.0, 3.0, 8.0)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_objective_rejects_source_entry(small_counts):
    _, d, c = small_counts
    cfg = distmat.DistConfig.lco(c.dim)
    spec = proximity.AttackSpec(source=0, pos=(1,), mode="proximity", max_size=1.0)
    with pytest.raises(SpecError):
        proximity.objective(spec, {0: 1.0}, c, cfg)


def test_degenerate_empty_row_scores_zero():
    d = corpus.Dictionary(["a", "b", "z"], np.array([2, 2, 0]))
    c = corpus.count_cooc(["a b a b"], d, window=2)
    cfg = distmat.DistConfig.lco(3)
    z = d.id_of("z")
    assert proximity.cos1(z, 0, c, cfg) == 0.0
    assert proximity.cos2(z, 0, c, cfg) == 0.0
    val, degenerate = proximity.first_order(z, 0, c, cfg)
    assert val == 0.0 and degenerate
