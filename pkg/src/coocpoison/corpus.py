"""Corpus ingestion, vocabulary construction, and weighted cooccurrence counting.

Counting follows the sliding-window convention of the standard GloVe
``cooccur`` tool: one document per line, every in-vocabulary pair at
positional distance d <= window accumulates weight gamma(d) into both
C[u,v] and C[v,u], and out-of-vocabulary tokens still occupy positions.
"""

from __future__ import annotations

import struct
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, ParseError, QueryError

HARMONIC = "harmonic"
LINEAR = "linear"

# binary cooccurrence record: two 1-based little-endian int32 ids + float64 weight
_REC = struct.Struct("<iid")


def weight_values(kind: str, window: int) -> np.ndarray:
    """gamma(1..window) for the given weighting kind."""
    d = np.arange(1, window + 1, dtype=np.float64)
    if kind == HARMONIC:
        return 1.0 / d
    if kind == LINEAR:
        return np.maximum(1.0 - (d - 1.0) / window, 0.0)
    raise ConfigError(f"unknown weighting kind: {kind!r}")


def tokenize(line: str, lowercase: bool = True) -> list[str]:
    """Whitespace split, optionally lowercased. No further normalization."""
    if lowercase:
        line = line.lower()
    return line.split()


@dataclass
class Dictionary:
    """Word <-> dense-id mapping with raw frequency counts.

    Ids run 0..len-1 in descending count order, ties broken by first
    appearance in the corpus.
    """

    words: list[str]
    counts: np.ndarray
    index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ConfigError("duplicate words in dictionary")

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def id_of(self, word: str) -> int:
        try:
            return self.index[word]
        except KeyError:
            raise QueryError(f"word not in vocabulary: {word!r}") from None

    def word_of(self, idx: int) -> str:
        return self.words[idx]

    def extended(self, new_words: Sequence[str]) -> "Dictionary":
        """Copy with extra (made-up) words appended at zero count."""
        for w in new_words:
            if w in self.index:
                raise ConfigError(f"word already in vocabulary: {w!r}")
        return Dictionary(
            list(self.words) + list(new_words),
            np.concatenate([self.counts, np.zeros(len(new_words), dtype=np.int64)]),
        )

    def ids_to_array(self, tokens: Sequence[str]) -> np.ndarray:
        """Token list -> id array with -1 for out-of-vocabulary tokens."""
        idx = self.index
        return np.fromiter((idx.get(t, -1) for t in tokens), dtype=np.int64, count=len(tokens))


def build_vocab(
    lines: Iterable[str],
    max_vocab: int | None = None,
    min_count: int = 0,
    lowercase: bool = True,
) -> Dictionary:
    """Count tokens and keep the max_vocab most frequent with count >= min_count."""
    if max_vocab is not None and max_vocab < 1:
        raise ConfigError("max_vocab must be >= 1")
    counts: Counter = Counter()
    for line in lines:
        counts.update(tokenize(line, lowercase))
    # sorted() is stable, so equal counts keep first-appearance (insertion) order
    items = sorted(counts.items(), key=lambda kv: -kv[1])
    items = [(w, c) for w, c in items if c >= min_count]
    if max_vocab is not None:
        items = items[:max_vocab]
    return Dictionary([w for w, _ in items], np.array([c for _, c in items], dtype=np.int64))


@dataclass
class CoocMatrix:
    """Sparse symmetric matrix of gamma-weighted cooccurrence counts.

    Immutable after construction; attack-time updates are modelled as
    change vectors on top of it, never in place.
    """

    mat: sp.csr_matrix
    window: int
    weighting: str
    skipped_tokens: int = 0
    _rowsums: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def value(self, u: int, v: int) -> float:
        return float(self.mat[u, v])

    def row(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        """(column ids, weights) of the stored row u."""
        start, end = self.mat.indptr[u], self.mat.indptr[u + 1]
        return self.mat.indices[start:end], self.mat.data[start:end]

    def row_dense(self, u: int) -> np.ndarray:
        ids, vals = self.row(u)
        out = np.zeros(self.dim)
        out[ids] = vals
        return out

    def rowsums(self) -> np.ndarray:
        if self._rowsums is None:
            self._rowsums = np.asarray(self.mat.sum(axis=1)).ravel()
        return self._rowsums

    def total(self) -> float:
        """Z: sum of all stored weights (each event counted in both directions)."""
        return float(self.rowsums().sum())

    def triples(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        coo = self.mat.tocoo()
        return coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data

    def gamma(self) -> np.ndarray:
        return weight_values(self.weighting, self.window)


def count_cooc(
    lines: Iterable[str],
    dictionary: Dictionary,
    window: int,
    weighting: str = HARMONIC,
    lowercase: bool = True,
) -> CoocMatrix:
    """Count weighted cooccurrences over line-delimited text.

    Lines never span cooccurrences. OOV tokens occupy window positions
    (distances count them) but contribute no pairs; they are tallied in
    ``skipped_tokens``.
    """
    if window < 1:
        raise ConfigError("window must be >= 1")
    if len(dictionary) == 0:
        raise ConfigError("dictionary is empty")
    gamma = weight_values(weighting, window)

    # Flatten to a single id stream with `window` sentinel (-2) separators so
    # no in-window pair crosses a line boundary; OOV tokens become -1.
    chunks: list[np.ndarray] = []
    sep = np.full(window, -2, dtype=np.int64)
    skipped = 0
    for line in lines:
        toks = tokenize(line, lowercase)
        if not toks:
            continue
        ids = dictionary.ids_to_array(toks)
        skipped += int(np.count_nonzero(ids == -1))
        chunks.append(ids)
        chunks.append(sep)
    dim = len(dictionary)
    if not chunks:
        return CoocMatrix(sp.csr_matrix((dim, dim)), window, weighting, 0)
    stream = np.concatenate(chunks)

    # accumulate each event once under a canonical (min, max) key, then
    # mirror: C[u,v] and C[v,u] come out bit-identical
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for d in range(1, window + 1):
        left = stream[:-d]
        right = stream[d:]
        ok = (left >= 0) & (right >= 0)
        lu, rv = left[ok], right[ok]
        if lu.size == 0:
            continue
        rows.append(np.minimum(lu, rv))
        cols.append(np.maximum(lu, rv))
        vals.append(np.full(lu.size, gamma[d - 1]))
    if not rows:
        return CoocMatrix(sp.csr_matrix((dim, dim)), window, weighting, skipped)
    tri = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    tri.sum_duplicates()
    mat = (tri + tri.T).tocsr()
    return CoocMatrix(mat, window, weighting, skipped)


def merge(parts: Sequence[CoocMatrix]) -> CoocMatrix:
    """Entrywise sum of shard counts; equals single-pass counting of the
    concatenated corpus."""
    if not parts:
        raise ConfigError("nothing to merge")
    first = parts[0]
    for p in parts[1:]:
        if (p.dim, p.window, p.weighting) != (first.dim, first.window, first.weighting):
            raise ConfigError("cooccurrence shards have mismatched configurations")
    mat = first.mat.copy()
    for p in parts[1:]:
        mat = mat + p.mat
    return CoocMatrix(mat.tocsr(), first.window, first.weighting, sum(p.skipped_tokens for p in parts))


# ---------------------------------------------------------------------------
# interchange formats


def save_vocab(dictionary: Dictionary, path: str) -> None:
    """UTF-8 text, one "word<space>count" per line, descending count."""
    with open(path, "w", encoding="utf-8") as f:
        for w, c in zip(dictionary.words, dictionary.counts):
            f.write(f"{w} {int(c)}\n")


def load_vocab(path: str) -> Dictionary:
    words: list[str] = []
    counts: list[int] = []
    offset = 0
    with open(path, "rb") as f:
        for raw in f:
            line = raw.decode("utf-8").rstrip("\n")
            if line:
                parts = line.rsplit(" ", 1)
                if len(parts) != 2:
                    raise ParseError(f"bad vocab line: {line!r}", offset)
                try:
                    counts.append(int(parts[1]))
                except ValueError:
                    raise ParseError(f"bad count in vocab line: {line!r}", offset) from None
                words.append(parts[0])
            offset += len(raw)
    return Dictionary(words, np.array(counts, dtype=np.int64))


def save_cooc(cooc: CoocMatrix, path: str) -> None:
    """Binary records (word1, word2: little-endian int32 1-based ids,
    weight: little-endian float64), bit-compatible with GloVe's cooccur output."""
    rows, cols, vals = cooc.triples()
    arr = np.empty(rows.size, dtype=np.dtype([("w1", "<i4"), ("w2", "<i4"), ("val", "<f8")]))
    arr["w1"] = rows + 1
    arr["w2"] = cols + 1
    arr["val"] = vals
    with open(path, "wb") as f:
        arr.tofile(f)


def load_cooc(path: str, dim: int, window: int, weighting: str = HARMONIC) -> CoocMatrix:
    dtype = np.dtype([("w1", "<i4"), ("w2", "<i4"), ("val", "<f8")])
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) % dtype.itemsize != 0:
        raise ParseError("truncated cooccurrence record", len(raw) - len(raw) % dtype.itemsize)
    arr = np.frombuffer(raw, dtype=dtype)
    rows = arr["w1"].astype(np.int64) - 1
    cols = arr["w2"].astype(np.int64) - 1
    if arr.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= dim or cols.max() >= dim):
        bad = int(np.argmax((rows < 0) | (cols < 0) | (rows >= dim) | (cols >= dim)))
        raise ParseError("cooccurrence id out of range", bad * dtype.itemsize)
    mat = sp.coo_matrix((arr["val"], (rows, cols)), shape=(dim, dim)).tocsr()
    return CoocMatrix(mat, window, weighting)


def read_lines(path: str) -> Iterator[str]:
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            yield line.rstrip("\n")
