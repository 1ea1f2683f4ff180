"""Deterministic synthetic natural-text corpus.

Sentences are drawn from a topic mixture: every line picks a topic with
Zipfian popularity, then mixes topic-specific content words (Zipf within the
topic), common function words, and a small cross-topic leak. The result has
the statistics the toolkit cares about: heavy-tailed unigram frequencies,
block-structured cooccurrences (words of one topic share contexts), and
plenty of verbatim n-grams, at tens of megabytes of line-delimited text.
"""

from __future__ import annotations

import numpy as np

FUNCTION_WORDS = (
    "the of and to in a is that it was for on are as with his they at be this "
    "from had by not word but what some we can out other were all there when "
    "up use your how said an each she which do their time if will way about "
    "many then them would like so these her long make thing see him two has "
    "look more day could go come did my no most who over know than call first "
    "people may down side been now find any new part"
).split()

_CONSONANTS = "bcdfglmnprstvz"
_VOWELS = "aeiou"


def _content_words(n: int) -> list[str]:
    """Pronounceable three-syllable pseudo-words, collision-checked against
    the function words."""
    syllables = [c + v for c in _CONSONANTS for v in _VOWELS]
    base = len(syllables)
    banned = set(FUNCTION_WORDS)
    out: list[str] = []
    i = 0
    while len(out) < n:
        w = syllables[i % base] + syllables[(i // base) % base] + syllables[(i // base**2) % base]
        if w not in banned:
            out.append(w)
        i += 1
    return out


def _zipf_pmf(n: int, exponent: float = 1.05, shift: float = 2.7) -> np.ndarray:
    w = 1.0 / np.power(np.arange(1, n + 1) + shift, exponent)
    return w / w.sum()


def generate_corpus(
    n_tokens: int = 2_000_000,
    n_topics: int = 40,
    words_per_topic: int = 450,
    function_fraction: float = 0.28,
    leak_fraction: float = 0.03,
    seed: int = 12345,
) -> list[str]:
    """Line-delimited sentences totalling roughly n_tokens tokens."""
    rng = np.random.default_rng(seed)
    content = _content_words(n_topics * words_per_topic)
    vocab = np.array(FUNCTION_WORDS + content)
    n_func = len(FUNCTION_WORDS)

    mean_len = 15
    n_lines = int(n_tokens / mean_len) + 1
    lengths = rng.poisson(mean_len - 4, n_lines) + 4
    total = int(lengths.sum())

    line_topics = rng.choice(n_topics, size=n_lines, p=_zipf_pmf(n_topics, 1.0, 1.0))
    token_topics = np.repeat(line_topics, lengths)

    roles = rng.random(total)
    is_func = roles < function_fraction
    is_leak = (~is_func) & (roles < function_fraction + leak_fraction)
    leak_idx = np.nonzero(is_leak)[0]
    token_topics[leak_idx] = rng.choice(n_topics, size=leak_idx.size)

    ids = np.empty(total, dtype=np.int64)
    func_idx = np.nonzero(is_func)[0]
    ids[func_idx] = rng.choice(n_func, size=func_idx.size, p=_zipf_pmf(n_func, 1.05, 1.5))
    cont_idx = np.nonzero(~is_func)[0]
    ranks = rng.choice(words_per_topic, size=cont_idx.size, p=_zipf_pmf(words_per_topic))
    ids[cont_idx] = n_func + token_topics[cont_idx] * words_per_topic + ranks

    tokens = vocab[ids]
    lines = []
    start = 0
    for ln in lengths:
        lines.append(" ".join(tokens[start : start + ln]))
        start += ln
    return lines


def corpus_bytes(lines: list[str]) -> int:
    return sum(len(line.encode("utf-8")) + 1 for line in lines)
