"""Perplexity-aware attack sequences and the perplexity-filter defense.

Three evasion strategies: "and" interleaving at odd (strict) or even
(lenient) distances from the source, and lambda-gram construction where each
half of a sequence must be a verbatim corpus n-gram. The defense drops corpus
lines whose perplexity under a language model exceeds a quantile threshold;
the built-in model is an additively smoothed bigram LM so the mechanism can
be exercised without an external scorer.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import tokenize, weight_values
from .errors import ConfigError, ScoringError
from .placement import _Packer, place_second_order

AND_WORD = "and"
STRICT = "strict"
LENIENT = "lenient"


def and_payload_distances(lam: int, variant: str) -> list[int]:
    """Distances from the source that carry payload words; the rest carry
    "and". Strict puts "and" at odd distances, lenient at even ones."""
    if variant == STRICT:
        return [d for d in range(1, lam + 1) if d % 2 == 0]
    if variant == LENIENT:
        return [d for d in range(1, lam + 1) if d % 2 == 1]
    raise ConfigError(f"unknown and-variant: {variant!r}")


def place_and_variant(
    entries: dict[int, float],
    s_word: str,
    words: Sequence[str],
    lam: int,
    variant: str,
    weighting: str = "harmonic",
    rng: np.random.Generator | None = None,
) -> tuple[list[list[str]], dict[str, float]]:
    """Second-order packing with "and" occupying the non-payload offsets."""
    return place_second_order(
        entries,
        s_word,
        words,
        lam,
        weighting,
        rng=rng,
        payload_dists=and_payload_distances(lam, variant),
        connector=AND_WORD,
    )


@dataclass
class NgramIndex:
    """Corpus lambda-grams grouped by their first word. Only grams whose
    first word is in ``restrict_to`` are kept when a restriction is given
    (the packer only ever looks up change-vector words)."""

    lam: int
    grams: dict[str, list[tuple[str, ...]]] = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        lines: Iterable[str],
        lam: int,
        restrict_to: set[str] | None = None,
        lowercase: bool = True,
    ) -> "NgramIndex":
        grams: dict[str, list[tuple[str, ...]]] = {}
        seen: set[tuple[str, ...]] = set()
        for line in lines:
            toks = tokenize(line, lowercase)
            for k in range(len(toks) - lam + 1):
                head = toks[k]
                if restrict_to is not None and head not in restrict_to:
                    continue
                gram = tuple(toks[k : k + lam])
                if gram in seen:
                    continue
                seen.add(gram)
                grams.setdefault(head, []).append(gram)
        return cls(lam, grams)

    def __contains__(self, gram: tuple[str, ...]) -> bool:
        return gram in set(self.grams.get(gram[0], ()))


def score_gram(gram: Sequence[str], values: dict[str, float], gamma: np.ndarray, penalty: float) -> float:
    """sum over positions i of gamma(i) * value(word_i); words without a
    change-vector value score the fixed penalty."""
    return float(sum(g * values.get(w, penalty) for w, g in zip(gram, gamma)))


@dataclass
class LambdaGramResult:
    gram_sequences: list[list[str]]
    fallback_sequences: list[list[str]]
    warning: str | None = None

    @property
    def sequences(self) -> list[list[str]]:
        return self.gram_sequences + self.fallback_sequences


def place_lambda_gram(
    entries: dict[int, float],
    s_word: str,
    words: Sequence[str],
    index: NgramIndex,
    lam: int,
    weighting: str = "harmonic",
    penalty: float = -1.0,
) -> LambdaGramResult:
    """Build sequences whose halves are verbatim corpus lambda-grams.

    Greedily takes the remaining word with the highest value as the head of
    the post-source gram and the one with the lowest (positive) value as the
    head of the pre-source gram; the pre-source gram is reversed so its head
    lands adjacent to the source. Residual mass with no usable grams falls
    back to plain packing."""
    if index.lam != lam:
        raise ConfigError("n-gram index was built with a different lambda")
    gamma = weight_values(weighting, lam)
    residual = {words[i]: m for i, m in sorted(entries.items()) if m > 0}
    if not index.grams:
        seqs, _ = place_second_order(entries, s_word, words, lam, weighting, fill="none")
        return LambdaGramResult([], seqs, warning="empty n-gram index; plain placement used")

    no_grams: set[str] = set()
    gram_seqs: list[list[str]] = []

    def eligible():
        return [w for w, r in residual.items() if r > 0 and w not in no_grams]

    def best_gram(head: str) -> tuple[str, ...] | None:
        cands = index.grams.get(head)
        if not cands:
            return None
        best, best_score = None, -math.inf
        for g in cands:
            sc = score_gram(g, residual, gamma, penalty)
            if sc > best_score:
                best, best_score = g, sc
        return best

    while True:
        live = eligible()
        if not live:
            break
        hi = max(live, key=lambda w: (residual[w], w))
        post = best_gram(hi)
        if post is None:
            no_grams.add(hi)
            continue
        lo = min(live, key=lambda w: (residual[w], w))
        pre = best_gram(lo)
        if pre is None:
            no_grams.add(lo)
            continue
        gram_seqs.append(list(reversed(pre)) + [s_word] + list(post))
        for side in (post, pre):
            for d, w in enumerate(side, start=1):
                if w in residual:
                    residual[w] -= float(gamma[d - 1])

    leftovers = {i: residual[words[i]] for i in entries if residual.get(words[i], 0.0) > 0}
    fallback: list[list[str]] = []
    if leftovers:
        fallback, _ = place_second_order(leftovers, s_word, words, lam, weighting, fill="none")
    return LambdaGramResult(gram_seqs, fallback)


# ---------------------------------------------------------------------------
# perplexity scoring and the filtering defense


class BigramScorer:
    """Additively smoothed bigram language model. The first token of a line
    is scored by the unigram model, later tokens by the bigram conditional;
    perplexity is exp of the mean negative log probability."""

    def __init__(self, smoothing: float = 0.1, lowercase: bool = True):
        if smoothing <= 0:
            raise ConfigError("additive smoothing must be positive")
        self.smoothing = smoothing
        self.lowercase = lowercase
        self.unigrams: Counter = Counter()
        self.bigrams: Counter = Counter()
        self.total = 0
        self.vsize = 1

    def fit(self, lines: Iterable[str]) -> "BigramScorer":
        for line in lines:
            toks = tokenize(line, self.lowercase)
            self.unigrams.update(toks)
            self.bigrams.update(zip(toks, toks[1:]))
        self.total = sum(self.unigrams.values())
        self.vsize = len(self.unigrams) + 1
        return self

    def log_prob(self, tokens: Sequence[str]) -> float:
        if self.total == 0:
            raise ConfigError("scorer has not been fitted")
        d = self.smoothing
        dv = d * self.vsize
        lp = math.log((self.unigrams.get(tokens[0], 0) + d) / (self.total + dv))
        for prev, cur in zip(tokens, tokens[1:]):
            lp += math.log(
                (self.bigrams.get((prev, cur), 0) + d) / (self.unigrams.get(prev, 0) + dv)
            )
        return lp

    def perplexity(self, line: str) -> float:
        tokens = tokenize(line, self.lowercase)
        if not tokens:
            return math.inf
        return math.exp(-self.log_prob(tokens) / len(tokens))

    def score_lines(self, lines: Sequence[str]) -> np.ndarray:
        return np.array([self.perplexity(line) for line in lines])


class ExternalScorer:
    """Per-line perplexities provided by an outside model, one
    "line-index<space>perplexity" per line."""

    def __init__(self, scores: dict[int, float]):
        self.scores = scores

    @classmethod
    def from_file(cls, path: str) -> "ExternalScorer":
        scores: dict[int, float] = {}
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                idx, val = line.split()
                scores[int(idx)] = float(val)
        return cls(scores)

    def score_lines(self, lines: Sequence[str]) -> np.ndarray:
        missing = [k for k in range(len(lines)) if k not in self.scores]
        if missing:
            raise ScoringError(f"external score file is missing {len(missing)} lines (first: {missing[0]})")
        return np.array([self.scores[k] for k in range(len(lines))])


def score_perplexity(lines: Sequence[str], scorer) -> np.ndarray:
    return scorer.score_lines(lines)


@dataclass
class FilterReport:
    threshold: float
    n_total: int
    n_kept: int
    attack_total: int = 0
    attack_kept: int = 0

    @property
    def attack_retention(self) -> float:
        return self.attack_kept / self.attack_total if self.attack_total else float("nan")

    @property
    def clean_loss(self) -> float:
        clean = self.n_total - self.attack_total
        dropped = clean - (self.n_kept - self.attack_kept)
        return dropped / clean if clean else float("nan")


def filter_defense(
    lines: Sequence[str],
    scorer,
    quantile: float = 0.5,
    attack_indices: set[int] | None = None,
) -> tuple[list[str], FilterReport]:
    """Keep lines whose perplexity is at or below the corpus-wide quantile
    (ties kept). Reports attack-sequence retention and clean-line loss when
    the attack line indices are known."""
    if not 0 < quantile < 1:
        raise ConfigError("quantile must be in (0, 1)")
    scores = np.asarray(score_perplexity(lines, scorer))
    k = max(int(math.ceil(quantile * len(lines))), 1)
    threshold = float(np.partition(scores, k - 1)[k - 1])
    keep = scores <= threshold
    kept = [line for line, k_ in zip(lines, keep) if k_]
    attack_indices = attack_indices or set()
    report = FilterReport(
        threshold=threshold,
        n_total=len(lines),
        n_kept=int(keep.sum()),
        attack_total=len(attack_indices),
        attack_kept=int(sum(1 for i in attack_indices if keep[i])),
    )
    return kept, report
