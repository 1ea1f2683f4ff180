"""Desk-scale GloVe trainer over a cooccurrence matrix.

Minimizes sum over nonzero counts of g(c) * (w_u . c_v + b_u + b'_v - log c)^2
with g(c) = c^(3/4) capped at c_max, using per-parameter adaptive learning
rates. Deterministic under a fixed seed in single-threaded mode; an optional
hogwild mode trades determinism for speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .corpus import CoocMatrix, Dictionary
from .distmat import save_bias
from .errors import ConfigError, QueryError, TrainingError


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 50
    c_max: float = 10.0
    epochs: int = 15
    lr: float = 0.05
    seed: int = 0
    deterministic: bool = True

    def __post_init__(self):
        if self.dim < 1 or self.epochs < 0 or self.lr <= 0 or self.c_max <= 0:
            raise ConfigError("invalid training configuration")

    @classmethod
    def paper(cls, seed: int = 0) -> "TrainConfig":
        """Large-corpus preset: dim 100, c_max 100, 50 epochs."""
        return cls(dim=100, c_max=100.0, epochs=50, lr=0.05, seed=seed)

    @classmethod
    def tutorial(cls, seed: int = 0) -> "TrainConfig":
        """Small-corpus preset: dim 50, c_max 10, 15 epochs."""
        return cls(dim=50, c_max=10.0, epochs=15, lr=0.05, seed=seed)


def loss_weight(c, c_max: float):
    """g(c): c^(3/4) below the cap, the cap value itself above it."""
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= c_max, np.power(np.maximum(c, 0.0), 0.75), c_max)


@numba.njit(cache=True)
def _adagrad_pass(order, us, vs, logc, g, W, Ctx, b, bp, hw, hc, hb, hbp, lr, gscale):
    # gscale normalizes the working gradient to reference-style magnitudes
    # (adaptive accumulation makes the optimum scale-invariant); the reported
    # loss keeps the unnormalized weights.
    dim = W.shape[1]
    total = 0.0
    for nn in range(order.shape[0]):
        n = order[nn]
        i = us[n]
        j = vs[n]
        r = b[i] + bp[j] - logc[n]
        for k in range(dim):
            r += W[i, k] * Ctx[j, k]
        gn = g[n]
        total += gn * r * r
        fdiff = lr * gn * gscale * r
        for k in range(dim):
            gw = fdiff * Ctx[j, k]
            gc = fdiff * W[i, k]
            W[i, k] -= gw / math.sqrt(hw[i, k])
            hw[i, k] += gw * gw
            Ctx[j, k] -= gc / math.sqrt(hc[j, k])
            hc[j, k] += gc * gc
        b[i] -= fdiff / math.sqrt(hb[i])
        hb[i] += fdiff * fdiff
        bp[j] -= fdiff / math.sqrt(hbp[j])
        hbp[j] += fdiff * fdiff
    return total


@numba.njit(cache=True, parallel=True)
def _adagrad_pass_hogwild(order, us, vs, logc, g, W, Ctx, b, bp, hw, hc, hb, hbp, lr, gscale):
    dim = W.shape[1]
    total = 0.0
    for nn in numba.prange(order.shape[0]):
        n = order[nn]
        i = us[n]
        j = vs[n]
        r = b[i] + bp[j] - logc[n]
        for k in range(dim):
            r += W[i, k] * Ctx[j, k]
        gn = g[n]
        total += gn * r * r
        fdiff = lr * gn * gscale * r
        for k in range(dim):
            gw = fdiff * Ctx[j, k]
            gc = fdiff * W[i, k]
            W[i, k] -= gw / math.sqrt(hw[i, k])
            hw[i, k] += gw * gw
            Ctx[j, k] -= gc / math.sqrt(hc[j, k])
            hc[j, k] += gc * gc
        b[i] -= fdiff / math.sqrt(hb[i])
        hb[i] += fdiff * fdiff
        bp[j] -= fdiff / math.sqrt(hbp[j])
        hbp[j] += fdiff * fdiff
    return total


@dataclass
class Embedding:
    W: np.ndarray
    Ctx: np.ndarray
    b: np.ndarray
    bp: np.ndarray
    words: list[str]
    config: TrainConfig
    losses: list[float] = field(default_factory=list)
    _norm_e: np.ndarray | None = field(default=None, repr=False)

    @property
    def E(self) -> np.ndarray:
        """Combined vectors e_u = w_u + c_u."""
        return self.W + self.Ctx

    @property
    def dim(self) -> int:
        return self.W.shape[1]

    def __len__(self) -> int:
        return self.W.shape[0]

    def biases(self) -> np.ndarray:
        """(b_u + b'_u) / 2, the symmetric bias used by the BIAS matrix."""
        return 0.5 * (self.b + self.bp)

    def _normalized(self) -> np.ndarray:
        if self._norm_e is None:
            e = self.E
            norms = np.linalg.norm(e, axis=1, keepdims=True)
            norms[norms == 0] = 1.0
            self._norm_e = e / norms
        return self._norm_e

    def cosine(self, u: int, v: int) -> float:
        en = self._normalized()
        return float(np.dot(en[u], en[v]))

    def neighbors(self, u: int, k: int) -> list[tuple[int, float]]:
        """Top-k ids by cosine of combined vectors, u excluded, ties by id."""
        if u < 0 or u >= len(self):
            raise QueryError(f"word id out of range: {u}")
        en = self._normalized()
        cos = en @ en[u]
        cos[u] = -np.inf
        order = np.lexsort((np.arange(len(cos)), -cos))
        top = order[: min(k, len(cos) - 1)]
        return [(int(i), float(cos[i])) for i in top]

    def rank_of(self, t: int, s: int) -> int:
        """1-based rank of s in t's neighbor list."""
        en = self._normalized()
        cos = en @ en[t]
        cos[t] = -np.inf
        order = np.lexsort((np.arange(len(cos)), -cos))
        return int(np.nonzero(order == s)[0][0]) + 1

    def sim_first_order(self, u: int, v: int) -> float:
        return float(self.W[u] @ self.Ctx[v] + self.Ctx[u] @ self.W[v])

    def sim_second_order(self, u: int, v: int) -> float:
        return float(self.W[u] @ self.W[v] + self.Ctx[u] @ self.Ctx[v])


def train_glove(cooc: CoocMatrix, cfg: TrainConfig, words: list[str] | None = None) -> Embedding:
    """Adaptive-rate SGD over all stored cooccurrence records (both
    directions of each pair are stored, so each trains once per epoch)."""
    us, vs, vals = cooc.triples()
    if us.size == 0:
        raise ConfigError("cannot train on an empty cooccurrence matrix")
    n = cooc.dim
    rng = np.random.default_rng(cfg.seed)
    logc = np.log(vals)
    g = loss_weight(vals, cfg.c_max)

    scale = 0.5 / cfg.dim
    W = rng.uniform(-scale, scale, (n, cfg.dim))
    Ctx = rng.uniform(-scale, scale, (n, cfg.dim))
    b = rng.uniform(-scale, scale, n)
    bp = rng.uniform(-scale, scale, n)
    hw = np.ones((n, cfg.dim))
    hc = np.ones((n, cfg.dim))
    hb = np.ones(n)
    hbp = np.ones(n)

    order = rng.permutation(us.size)
    kernel = _adagrad_pass if cfg.deterministic else _adagrad_pass_hogwild
    losses = []
    gscale = 1.0 / cfg.c_max
    for epoch in range(cfg.epochs):
        total = kernel(order, us.astype(np.int64), vs.astype(np.int64), logc, g,
                       W, Ctx, b, bp, hw, hc, hb, hbp, cfg.lr, gscale)
        if not np.isfinite(total):
            raise TrainingError(f"training diverged at epoch {epoch}", epoch=epoch)
        losses.append(float(total))
    if words is None:
        words = [str(i) for i in range(n)]
    return Embedding(W, Ctx, b, bp, list(words), cfg, losses)


# ---------------------------------------------------------------------------
# verification helpers


def full_loss_and_grads(cooc: CoocMatrix, params, c_max: float):
    """Loss and analytic gradients of the training objective, vectorized for
    small instances."""
    W, Ctx, b, bp = params
    us, vs, vals = cooc.triples()
    g = loss_weight(vals, c_max)
    r = np.einsum("nd,nd->n", W[us], Ctx[vs]) + b[us] + bp[vs] - np.log(vals)
    loss = float(np.sum(g * r * r))
    coef = 2.0 * g * r
    gw = np.zeros_like(W)
    gc = np.zeros_like(Ctx)
    gb = np.zeros_like(b)
    gbp = np.zeros_like(bp)
    np.add.at(gw, us, coef[:, None] * Ctx[vs])
    np.add.at(gc, vs, coef[:, None] * W[us])
    np.add.at(gb, us, coef)
    np.add.at(gbp, vs, coef)
    return loss, (gw, gc, gb, gbp)


def gradient_check(
    cooc: CoocMatrix,
    dim: int = 5,
    c_max: float = 10.0,
    samples: int = 50,
    h: float = 1e-5,
    seed: int = 0,
) -> float:
    """Max relative error between analytic gradients and central finite
    differences over randomly sampled coordinates."""
    n = cooc.dim
    rng = np.random.default_rng(seed)
    params = [
        rng.normal(0, 0.3, (n, dim)),
        rng.normal(0, 0.3, (n, dim)),
        rng.normal(0, 0.3, n),
        rng.normal(0, 0.3, n),
    ]
    _, grads = full_loss_and_grads(cooc, params, c_max)

    flat = np.concatenate([p.ravel() for p in params])
    gflat = np.concatenate([gr.ravel() for gr in grads])

    def loss_at(x):
        out = []
        k = 0
        for p in params:
            out.append(x[k : k + p.size].reshape(p.shape))
            k += p.size
        return full_loss_and_grads(cooc, out, c_max)[0]

    worst = 0.0
    for idx in rng.choice(flat.size, size=min(samples, flat.size), replace=False):
        xp = flat.copy()
        xm = flat.copy()
        xp[idx] += h
        xm[idx] -= h
        num = (loss_at(xp) - loss_at(xm)) / (2 * h)
        denom = max(abs(num), abs(gflat[idx]), 1e-8)
        worst = max(worst, abs(num - gflat[idx]) / denom)
    return worst


# ---------------------------------------------------------------------------
# interchange


def save_vectors(emb: Embedding, path: str, which: str = "combined") -> None:
    """Text, "word v1 ... vd" per line."""
    mat = {"combined": emb.E, "word": emb.W, "context": emb.Ctx}[which]
    with open(path, "w", encoding="utf-8") as f:
        for w, vec in zip(emb.words, mat):
            f.write(w + " " + " ".join(f"{x:.8g}" for x in vec) + "\n")


def export_biases(emb: Embedding, path: str) -> None:
    save_bias(emb.words, emb.biases(), path)


class VectorsIndex:
    """Neighbor queries over a bare vectors file (no word/context split)."""

    def __init__(self, words: list[str], vectors: np.ndarray):
        self.words = words
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        self._en = vectors / norms

    def neighbors(self, u: int, k: int) -> list[tuple[int, float]]:
        cos = self._en @ self._en[u]
        cos[u] = -np.inf
        order = np.lexsort((np.arange(len(cos)), -cos))
        return [(int(i), float(cos[i])) for i in order[: min(k, len(cos) - 1)]]


def load_vectors(path: str) -> tuple[list[str], np.ndarray]:
    words = []
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            parts = line.rstrip("\n").split(" ")
            if len(parts) < 2:
                continue
            words.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    return words, np.array(rows)
