"""First-order distributional matrices (SPPMI, BIAS, LCO) and word bias terms.

Every matrix entry has the form max{log(C[u,v]) - B_u - B_v, 0}; the three
kinds differ only in the per-word downweighting terms B_u:

  * sppmi: B_u = log(#u) - log(Z/k)/2, #u the row marginal, Z the total weight
  * bias:  B_u taken from a trained embedding's bias terms (b_u = b'_u
    simplification); made-up words get a bucket-averaged estimate
  * zero:  B_u = 0 (clipped log-cooccurrence, LCO)

The matrix is never materialized densely; consumers pull rows on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import CoocMatrix
from .errors import ConfigError

SPPMI = "sppmi"
BIAS = "bias"
LCO = "lco"

EPSILON_FLOOR = math.exp(-60.0)

# geometric bucket ratio for new-word bias estimation (bucket by total row mass)
_BUCKET_RATIO = 1.25


def f_value(c: float, b_u: float, b_v: float, eps: float) -> float:
    """max{log(c) - B_u - B_v, eps}; c = 0 maps to eps (log 0 treated as -inf)."""
    if c <= 0.0:
        return eps
    return max(math.log(c) - b_u - b_v, eps)


def f_values(c: np.ndarray, b_u: float, b_v: np.ndarray, eps: float) -> np.ndarray:
    """Vectorized f over an array of counts with per-entry B_v."""
    out = np.full(np.shape(c), eps, dtype=np.float64)
    pos = np.asarray(c) > 0
    with np.errstate(invalid="ignore"):
        out[pos] = np.maximum(np.log(np.asarray(c)[pos]) - b_u - np.asarray(b_v)[pos], eps)
    return out


class NewWordBiasEstimator:
    """Bias estimate for a word absent from training: the mean trained bias of
    existing words whose total cooccurrence mass falls in the same geometric
    bucket (ratio 1.25). Empty buckets and zero mass fall back to the global
    mean."""

    def __init__(self, rowsums: np.ndarray, bias_values: np.ndarray):
        rowsums = np.asarray(rowsums, dtype=np.float64)
        bias_values = np.asarray(bias_values, dtype=np.float64)
        if rowsums.size == 0:
            raise ConfigError("cannot estimate biases over an empty vocabulary")
        pos = rowsums > 0
        self.global_mean = float(bias_values.mean())
        self._means: dict[int, float] = {}
        if np.any(pos):
            buckets = np.floor(np.log(rowsums[pos]) / math.log(_BUCKET_RATIO)).astype(np.int64)
            vals = bias_values[pos]
            for b in np.unique(buckets):
                self._means[int(b)] = float(vals[buckets == b].mean())

    def __call__(self, mass: float) -> float:
        if mass <= 0:
            return self.global_mean
        bucket = int(math.floor(math.log(mass) / math.log(_BUCKET_RATIO)))
        return self._means.get(bucket, self.global_mean)


@dataclass
class BiasTerms:
    """Per-word downweighting terms B_u, with enough context to recompute them
    when row marginals change during an attack."""

    kind: str
    values: np.ndarray
    half_log_zk: float | None = None            # sppmi: log(Z/k)/2, fixed per corpus
    estimator: NewWordBiasEstimator | None = None
    estimated_ids: frozenset = field(default_factory=frozenset)  # bias-kind made-up words

    @classmethod
    def sppmi(cls, cooc: CoocMatrix, k: int = 5) -> "BiasTerms":
        if k < 1:
            raise ConfigError("negative-sampling constant k must be >= 1")
        z = cooc.total()
        if z <= 0:
            raise ConfigError("empty cooccurrence matrix")
        half = math.log(z / k) / 2.0
        with np.errstate(divide="ignore"):
            vals = np.log(cooc.rowsums()) - half
        return cls(SPPMI, vals, half_log_zk=half)

    @classmethod
    def from_trained(
        cls,
        values: np.ndarray,
        cooc: CoocMatrix | None = None,
        estimated_ids=(),
    ) -> "BiasTerms":
        values = np.asarray(values, dtype=np.float64)
        estimated_ids = frozenset(estimated_ids)
        estimator = None
        if estimated_ids:
            if cooc is None:
                raise ConfigError("estimating new-word biases requires the cooccurrence matrix")
            known = np.setdiff1d(np.arange(values.size), np.fromiter(estimated_ids, dtype=np.int64))
            if known.size == 0:
                raise ConfigError("cannot estimate biases over an empty vocabulary")
            estimator = NewWordBiasEstimator(cooc.rowsums()[known], values[known])
        return cls(BIAS, values, estimator=estimator, estimated_ids=estimated_ids)

    @classmethod
    def zero(cls, dim: int) -> "BiasTerms":
        return cls(LCO, np.zeros(dim))

    def value_of(self, u: int, rowsum_u: float) -> float:
        """B_u given the word's current row marginal."""
        if self.kind == SPPMI:
            return (math.log(rowsum_u) if rowsum_u > 0 else -math.inf) - self.half_log_zk
        if u in self.estimated_ids:
            return self.estimator(rowsum_u)
        return float(self.values[u])

    def values_for(self, ids: np.ndarray, rowsums: np.ndarray) -> np.ndarray:
        """Vectorized B over ids with their current row marginals."""
        ids = np.asarray(ids, dtype=np.int64)
        if self.kind == SPPMI:
            rs = np.asarray(rowsums, dtype=np.float64)[ids]
            with np.errstate(divide="ignore"):
                return np.log(rs) - self.half_log_zk
        out = self.values[ids].astype(np.float64, copy=True)
        if self.estimated_ids:
            special = np.isin(ids, np.fromiter(self.estimated_ids, dtype=np.int64))
            rs = np.asarray(rowsums)
            for pos in np.nonzero(special)[0]:
                out[pos] = self.estimator(float(rs[ids[pos]]))
        return out


@dataclass(frozen=True)
class DistConfig:
    """Choice of first-order matrix plus its bias terms."""

    matrix_kind: str
    bias: BiasTerms
    epsilon_floor: float = EPSILON_FLOOR

    def __post_init__(self):
        if self.matrix_kind not in (SPPMI, BIAS, LCO):
            raise ConfigError(f"unknown matrix kind: {self.matrix_kind!r}")
        if self.epsilon_floor <= 0:
            raise ConfigError("epsilon_floor must be positive")

    @classmethod
    def sppmi(cls, cooc: CoocMatrix, k: int = 5) -> "DistConfig":
        return cls(SPPMI, BiasTerms.sppmi(cooc, k))

    @classmethod
    def bias(cls, values: np.ndarray, cooc: CoocMatrix | None = None, estimated_ids=()) -> "DistConfig":
        return cls(BIAS, BiasTerms.from_trained(values, cooc, estimated_ids))

    @classmethod
    def lco(cls, dim: int) -> "DistConfig":
        return cls(LCO, BiasTerms.zero(dim))


def m_entry(u: int, v: int, cooc: CoocMatrix, cfg: DistConfig) -> float:
    """M[u,v] = f_{u,v}(C[u,v], 0) under the configured bias terms."""
    rowsums = cooc.rowsums()
    b_u = cfg.bias.value_of(u, rowsums[u])
    b_v = cfg.bias.value_of(v, rowsums[v])
    return f_value(cooc.value(u, v), b_u, b_v, 0.0)


def m_row(u: int, cooc: CoocMatrix, cfg: DistConfig) -> tuple[np.ndarray, np.ndarray]:
    """Sparse row of M: (column ids, values) over the support of C's row u."""
    ids, counts = cooc.row(u)
    rowsums = cooc.rowsums()
    b_u = cfg.bias.value_of(u, rowsums[u])
    b_cols = cfg.bias.values_for(ids, rowsums)
    vals = f_values(counts, b_u, b_cols, 0.0)
    return ids, vals


def estimate_bias_new_word(row, trained_bias: BiasTerms, cooc: CoocMatrix) -> float:
    """Estimated GloVe bias for a word not present at training time, bucketed
    by the total cooccurrence mass of its (hypothetical) row."""
    if trained_bias.kind != BIAS:
        raise ConfigError("new-word bias estimation requires trained (glove) bias terms")
    mass = float(np.asarray(row, dtype=np.float64).sum()) if not np.isscalar(row) else float(row)
    estimator = NewWordBiasEstimator(cooc.rowsums(), trained_bias.values)
    return estimator(mass)


def save_bias(words, values: np.ndarray, path: str) -> None:
    """Text, one "word<space>bias" per line."""
    with open(path, "w", encoding="utf-8") as f:
        for w, b in zip(words, values):
            f.write(f"{w} {float(b):.17g}\n")


def load_bias(path: str, dictionary) -> np.ndarray:
    """Bias values aligned to the dictionary's ids. Missing words are an error."""
    seen: dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            word, val = line.rsplit(" ", 1)
            seen[word] = float(val)
    out = np.empty(len(dictionary))
    for i, w in enumerate(dictionary.words):
        if w not in seen:
            raise ConfigError(f"bias file is missing word: {w!r}")
        out[i] = seen[w]
    return out
