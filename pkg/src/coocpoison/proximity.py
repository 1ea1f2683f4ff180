"""Distributional proximity expressions and the attack objective.

cos1 is first-order proximity (normalized matrix entry), cos2 is second-order
(cosine of matrix rows), cos12 their mean. ``objective`` evaluates the signed
mean of proximities between a source word and positive/negative target sets
over cooccurrence counts updated by a candidate change vector; it is the
from-scratch reference the incremental solver is checked against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .corpus import CoocMatrix
from .distmat import DistConfig, f_value, f_values
from .errors import SpecError

COS1 = "cos1"
COS2 = "cos2"
COS12 = "cos12"
EXPRESSIONS = (COS1, COS2, COS12)

PROXIMITY = "proximity"
RANK = "rank"


@dataclass(frozen=True)
class AttackSpec:
    """Source word, target sets, and the objective to optimize.

    Proximity mode maximizes the signed proximity mean within a size budget;
    rank mode minimizes size until the source clears a proximity threshold
    derived from the target's r-th embedding neighbor.
    """

    source: int
    pos: tuple[int, ...]
    neg: tuple[int, ...] = ()
    expr: str = COS12
    mode: str = PROXIMITY
    max_size: float | None = None
    rank: int | None = None
    alpha: float = 0.0
    rank_window: int = 5      # half-window m over embedding ranks
    beta: float = 1.0         # deletion cost weight

    def __post_init__(self):
        object.__setattr__(self, "pos", tuple(self.pos))
        object.__setattr__(self, "neg", tuple(self.neg))
        if self.expr not in EXPRESSIONS:
            raise SpecError(f"unknown expression: {self.expr!r}")
        if self.mode not in (PROXIMITY, RANK):
            raise SpecError(f"unknown mode: {self.mode!r}")
        if not self.pos and not self.neg:
            raise SpecError("at least one target word is required")
        if self.source in self.pos or self.source in self.neg:
            raise SpecError("source word cannot be its own target")
        if set(self.pos) & set(self.neg):
            raise SpecError("positive and negative target sets overlap")
        if self.mode == RANK:
            if len(self.pos) != 1 or self.neg:
                raise SpecError("rank mode requires POS={t} and empty NEG")
            if self.rank is None or self.rank < 1:
                raise SpecError("rank mode requires a target rank >= 1")
        if self.mode == PROXIMITY:
            if self.max_size is None or self.max_size < 0:
                raise SpecError("proximity mode requires a nonnegative size budget")
        if self.alpha < 0:
            raise SpecError("safety margin must be nonnegative")
        if self.beta <= 0:
            raise SpecError("deletion cost weight must be positive")

    @property
    def targets(self) -> tuple[int, ...]:
        return self.pos + self.neg


def first_order(u: int, v: int, cooc: CoocMatrix, cfg: DistConfig) -> tuple[float, bool]:
    """cos1 value and a degenerate-input flag (zero row / floored normalizer)."""
    rowsums = cooc.rowsums()
    b_u = cfg.bias.value_of(u, rowsums[u])
    b_v = cfg.bias.value_of(v, rowsums[v])
    return _first_order_scalar(
        cooc.value(u, v), rowsums[u], rowsums[v], b_u, b_v, cfg.epsilon_floor
    )


def _first_order_scalar(c_uv, rs_u, rs_v, b_u, b_v, eps) -> tuple[float, bool]:
    num = f_value(c_uv, b_u, b_v, 0.0)
    fu = f_value(rs_u, b_u, b_v, eps)
    fv = f_value(rs_v, b_u, b_v, eps)
    degenerate = rs_u <= 0 or rs_v <= 0 or fu <= eps or fv <= eps
    if num <= 0.0:
        return 0.0, degenerate
    return num / np.sqrt(fu * fv), degenerate


def cos1(u: int, v: int, cooc: CoocMatrix, cfg: DistConfig) -> float:
    return first_order(u, v, cooc, cfg)[0]


def cos2(u: int, v: int, cooc: CoocMatrix, cfg: DistConfig) -> float:
    """Cosine similarity of the sparse matrix rows of u and v; 0 if either
    row is all zero."""
    rowsums = cooc.rowsums()
    ids_u, c_u = cooc.row(u)
    ids_v, c_v = cooc.row(v)
    b_u = cfg.bias.value_of(u, rowsums[u])
    b_v = cfg.bias.value_of(v, rowsums[v])
    m_u = f_values(c_u, b_u, cfg.bias.values_for(ids_u, rowsums), 0.0)
    m_v = f_values(c_v, b_v, cfg.bias.values_for(ids_v, rowsums), 0.0)
    nu = np.dot(m_u, m_u)
    nv = np.dot(m_v, m_v)
    if nu <= 0.0 or nv <= 0.0:
        return 0.0
    # dot over the (sorted) intersection of supports
    common, iu, iv = np.intersect1d(ids_u, ids_v, assume_unique=True, return_indices=True)
    dot = float(np.dot(m_u[iu], m_v[iv])) if common.size else 0.0
    return dot / float(np.sqrt(nu * nv))


def cos12(u: int, v: int, cooc: CoocMatrix, cfg: DistConfig) -> float:
    return 0.5 * cos1(u, v, cooc, cfg) + 0.5 * cos2(u, v, cooc, cfg)


def expression(name: str):
    try:
        return {COS1: cos1, COS2: cos2, COS12: cos12}[name]
    except KeyError:
        raise SpecError(f"unknown expression: {name!r}") from None


def objective(spec: AttackSpec, delta, cooc: CoocMatrix, cfg: DistConfig) -> float:
    """Distributional objective over counts updated by the change vector:
    signed mean of the chosen expression between source and targets.

    The change applies to the source's row and, symmetrically, its column.
    Bias terms of affected words are recomputed from the updated marginals
    (SPPMI, and bucket-estimated made-up words); trained biases of existing
    words stay fixed.
    """
    entries: Mapping[int, float] = getattr(delta, "entries", delta)
    s = spec.source
    if any(i == s for i in entries):
        raise SpecError("change vector cannot modify the source's own index")

    dim = cooc.dim
    rowsums = cooc.rowsums().copy()
    total_delta = 0.0
    for i, d in entries.items():
        rowsums[i] += d
        total_delta += d
    rowsums[s] += total_delta

    row_s = cooc.row_dense(s)
    for i, d in entries.items():
        row_s[i] += d
        if row_s[i] < -1e-12:
            raise SpecError("change vector deletes more mass than exists")

    b_s = cfg.bias.value_of(s, rowsums[s])
    all_ids = np.arange(dim)
    b_all = cfg.bias.values_for(all_ids, rowsums)
    m_s = f_values(row_s, b_s, b_all, 0.0)
    norm_s = float(np.dot(m_s, m_s))

    acc = 0.0
    for t in spec.targets:
        sign = 1.0 if t in spec.pos else -1.0
        b_t = cfg.bias.value_of(t, rowsums[t])
        val = 0.0
        if spec.expr in (COS1, COS12):
            c1, _ = _first_order_scalar(
                row_s[t], rowsums[s], rowsums[t], b_s, b_t, cfg.epsilon_floor
            )
            val += c1 if spec.expr == COS1 else 0.5 * c1
        if spec.expr in (COS2, COS12):
            row_t = cooc.row_dense(t)
            if t in entries:
                row_t[s] += entries[t]
            m_t = f_values(row_t, b_t, b_all, 0.0)
            norm_t = float(np.dot(m_t, m_t))
            if norm_s > 0.0 and norm_t > 0.0:
                c2 = float(np.dot(m_s, m_t)) / float(np.sqrt(norm_s * norm_t))
            else:
                c2 = 0.0
            val += c2 if spec.expr == COS2 else 0.5 * c2
        acc += sign * val
    return acc / len(spec.targets)
