"""Greedy optimization over the source word's cooccurrence change vector.

Each step picks the (word, increment) pair maximizing the gain in the
distributional objective per unit of corpus-change size. Scoring never
re-reads the corpus: the state caches row marginals, log-count rows over a
truncated index set, bias terms, and the norms/dots behind the second-order
proximity, and updates them exactly when a step is accepted. Bias terms that
depend on row marginals (SPPMI, bucket-estimated made-up words) are
re-derived from the updated marginals inside every evaluation, so incremental
scores agree with from-scratch recomputation to float precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import CoocMatrix, weight_values
from .distmat import BIAS, LCO, SPPMI, DistConfig
from .errors import ConfigError, SpecError
from .proximity import COS1, COS12, COS2, PROXIMITY, RANK, AttackSpec, expression

QUANTUM = 0.2  # all step sizes are multiples of 1/5

# rank-mode termination guard: 10x the largest benchmark budget
DEFAULT_HARD_CAP = 25000.0

STATUS_OK = "ok"
STATUS_BUDGET = "budget-exhausted"
STATUS_STALLED = "no-positive-step"
STATUS_PARTIAL = "partial"  # rank threshold unreachable before the hard cap


@dataclass(frozen=True)
class StepSet:
    """Allowed per-step increments; deletions use negative values with a
    separate cost weight."""

    values: tuple[float, ...]
    beta: float = 1.0

    def __post_init__(self):
        if any(abs(v) < 1e-12 for v in self.values):
            raise ConfigError("step set cannot contain 0")
        if self.beta <= 0:
            raise ConfigError("deletion cost weight beta must be positive")

    @classmethod
    def additions(cls, max_steps: int = 30) -> "StepSet":
        return cls(tuple(j / 5.0 for j in range(1, max_steps + 1)))

    @classmethod
    def with_deletions(cls, beta: float = 1.0) -> "StepSet":
        vals = [i / 5.0 for i in range(-25, 21) if i != 0]
        return cls(tuple(vals), beta=beta)


@dataclass
class ChangeVector:
    """Sparse signed additions to the source word's cooccurrence row,
    quantized to multiples of 1/5."""

    source: int
    entries: dict[int, float] = field(default_factory=dict)

    def is_quantized(self, tol: float = 1e-9) -> bool:
        return all(abs(v / QUANTUM - round(v / QUANTUM)) < tol for v in self.entries.values())

    def total_mass(self) -> float:
        return float(sum(self.entries.values()))


@dataclass(frozen=True)
class RankThreshold:
    """Distributional-proximity threshold standing in for the embedding
    proximity of the target's r-th neighbor. ``value`` includes the safety
    margin."""

    target: int
    rank: int
    half_window: int
    alpha: float
    neighbor_max: float
    value: float


def step_cost(delta: float, omega_i: float, beta: float = 1.0) -> float:
    """Contribution of one step to the corpus-change size estimate."""
    if omega_i <= 0:
        raise ConfigError("omega must be positive")
    cost = abs(delta) / omega_i
    return beta * cost if delta < 0 else cost


def omega_vector(spec: AttackSpec, ids: np.ndarray, weighting: str, lam: int = 5) -> np.ndarray:
    """Per-word size weight: first-order mass for positive targets under
    cos1/cos12 (one sequence per gamma(1) of mass), second-order mass
    otherwise (one sequence per 2*sum(gamma(1..lam)))."""
    gamma = weight_values(weighting, lam)
    second = 2.0 * float(gamma.sum())
    out = np.full(len(ids), second)
    if spec.expr in (COS1, COS12):
        pos = np.isin(ids, np.array(spec.pos, dtype=np.int64))
        out[pos] = gamma[0]
    return out


def truncate_indices(spec: AttackSpec, cooc: CoocMatrix, cfg: DistConfig | None = None) -> np.ndarray:
    """Candidate ids the optimizer may step on: union of the nonzero supports
    of the source and target rows, plus the target ids, plus (only when NEG
    is nonempty) the top-10%-frequency words."""
    parts = [np.array(spec.targets, dtype=np.int64)]
    for u in (spec.source,) + spec.targets:
        parts.append(cooc.row(u)[0].astype(np.int64))
    if spec.neg:
        top = math.ceil(0.1 * cooc.dim)
        parts.append(np.arange(top, dtype=np.int64))
    return np.unique(np.concatenate(parts))


def _masked_row(logc: np.ndarray, mask: np.ndarray, b_row: float, b_cols: np.ndarray) -> np.ndarray:
    """M row from cached log counts: max{log c - B_row - B_col, 0}, zero off
    the support regardless of bias values."""
    out = np.zeros(logc.shape[0])
    if b_row == -math.inf:
        return out
    out[mask] = np.maximum(logc[mask] - b_row - b_cols[mask], 0.0)
    return out


def _f_scalar(log_x: float, b_sum: float, floor: float) -> float:
    if log_x == -math.inf:
        return floor
    return max(log_x - b_sum, floor)


class SolverState:
    """All intermediate values needed to score and apply steps.

    Rows are held densely over the truncated index universe (candidate ids
    plus source and targets); marginals are held for the full vocabulary.
    """

    def __init__(
        self,
        spec: AttackSpec,
        cooc: CoocMatrix,
        cfg: DistConfig,
        steps: StepSet | None = None,
        candidates: np.ndarray | None = None,
        lam: int = 5,
    ):
        self.spec = spec
        self.cooc = cooc
        self.cfg = cfg
        self.steps = steps or StepSet.additions()
        self.lam = lam

        if candidates is None:
            candidates = truncate_indices(spec, cooc, cfg)
        candidates = np.setdiff1d(candidates, [spec.source])
        self.ids = np.union1d(
            np.union1d(candidates, np.array([spec.source], dtype=np.int64)),
            np.array(spec.targets, dtype=np.int64),
        ).astype(np.int64)
        self.pos_of = {int(u): p for p, u in enumerate(self.ids)}
        self.cand_pos = np.array([self.pos_of[int(u)] for u in candidates], dtype=np.int64)
        self.s_pos = self.pos_of[spec.source]
        self.t_pos = [self.pos_of[t] for t in spec.targets]
        self.signs = [1.0 if t in spec.pos else -1.0 for t in spec.targets]

        self.omega = omega_vector(spec, self.ids, cooc.weighting, lam)
        self.rowsums = cooc.rowsums().copy()
        self.delta = ChangeVector(spec.source)
        self.size = 0.0
        self.iterations = 0

        k = self.ids.shape[0]
        self._c_s = np.zeros(k)
        ids_r, vals_r = cooc.row(spec.source)
        self._c_s[np.searchsorted(self.ids, ids_r)] = vals_r
        self._c_t = []
        for t in spec.targets:
            row = np.zeros(k)
            ids_r, vals_r = cooc.row(t)
            row[np.searchsorted(self.ids, ids_r)] = vals_r
            self._c_t.append(row)
        self._refresh_bias()
        self._refresh_scalars()

    # -- state maintenance ---------------------------------------------------

    def _bias_of(self, u: int, rowsum: float) -> float:
        return self.cfg.bias.value_of(u, rowsum)

    def _refresh_bias(self):
        self.b_ids = self.cfg.bias.values_for(self.ids, self.rowsums)
        self.b_s = float(self.b_ids[self.s_pos])
        self.b_t = [float(self.b_ids[p]) for p in self.t_pos]

    def _refresh_scalars(self):
        with np.errstate(divide="ignore"):
            self._logc_s = np.where(self._c_s > 0, np.log(np.maximum(self._c_s, 1e-300)), -np.inf)
            self._logc_t = [
                np.where(c > 0, np.log(np.maximum(c, 1e-300)), -np.inf) for c in self._c_t
            ]
        self._mask_s = self._c_s > 0
        self._mask_t = [c > 0 for c in self._c_t]
        self.m_s = _masked_row(self._logc_s, self._mask_s, self.b_s, self.b_ids)
        self.normsq_s = float(np.dot(self.m_s, self.m_s))
        self.m_t = []
        self.dot_t = []
        self.normsq_t = []
        for bt, logc, mask in zip(self.b_t, self._logc_t, self._mask_t):
            m_t = _masked_row(logc, mask, bt, self.b_ids)
            self.m_t.append(m_t)
            self.dot_t.append(float(np.dot(self.m_s, m_t)))
            self.normsq_t.append(float(np.dot(m_t, m_t)))
        self.J = self._j_from_scalars(
            self.rowsums[self.spec.source],
            self.b_s,
            [self.rowsums[t] for t in self.spec.targets],
            self.b_t,
            [self._logc_s[p] for p in self.t_pos],
            self.normsq_s,
            self.dot_t,
            self.normsq_t,
        )

    def _j_from_scalars(self, rs_s, b_s, rs_t, b_t, logc_st, normsq_s, dot_t, normsq_t) -> float:
        eps = self.cfg.epsilon_floor
        expr = self.spec.expr
        log_rs_s = math.log(rs_s) if rs_s > 0 else -math.inf
        acc = 0.0
        for n, sign in enumerate(self.signs):
            val = 0.0
            if expr in (COS1, COS12):
                b_sum = b_s + b_t[n]
                num = max(logc_st[n] - b_sum, 0.0) if logc_st[n] != -math.inf else 0.0
                log_rs = math.log(rs_t[n]) if rs_t[n] > 0 else -math.inf
                denom = math.sqrt(_f_scalar(log_rs_s, b_sum, eps) * _f_scalar(log_rs, b_sum, eps))
                c1 = num / denom if num > 0 else 0.0
                val += c1 if expr == COS1 else 0.5 * c1
            if expr in (COS2, COS12):
                if normsq_s > 0 and normsq_t[n] > 0:
                    c2 = dot_t[n] / math.sqrt(normsq_s * normsq_t[n])
                else:
                    c2 = 0.0
                val += c2 if expr == COS2 else 0.5 * c2
            acc += sign * val
        return acc / len(self.signs)

    # -- scoring ---------------------------------------------------------------

    def _new_bias_cand(self, delta: float) -> np.ndarray:
        """Hypothetical B of each index word after its marginal grows by delta."""
        if self.cfg.bias.kind == SPPMI:
            rs = self.rowsums[self.ids] + delta
            with np.errstate(divide="ignore"):
                return np.where(rs > 0, np.log(np.maximum(rs, 1e-300)), -np.inf) - self.cfg.bias.half_log_zk
        return self.b_ids.copy()

    def score_single(self, i: int, delta: float):
        """Exact objective after hypothetically setting delta on word i,
        computed from the cached state. Returns (new J, scalar effects)."""
        if i == self.spec.source:
            raise SpecError("cannot step on the source word itself")
        pi = self.pos_of.get(int(i))
        if pi is None:
            raise SpecError(f"word {i} is outside the candidate index set")
        new_c_i = self._c_s[pi] + delta
        if new_c_i < -1e-12:
            return -math.inf, {}

        s = self.spec.source
        rs_s = self.rowsums[s] + delta
        rs_i = self.rowsums[i] + delta
        b_s = self._bias_of(s, rs_s)
        b_i = self._bias_of(i, rs_i)

        b_ids = self.b_ids.copy()
        b_ids[self.s_pos] = b_s
        b_ids[pi] = b_i

        c_s = self._c_s.copy()
        c_s[pi] = max(new_c_i, 0.0)
        with np.errstate(divide="ignore"):
            logc_s = np.where(c_s > 0, np.log(np.maximum(c_s, 1e-300)), -np.inf)
        mask_s = c_s > 0
        m_s = _masked_row(logc_s, mask_s, b_s, b_ids)
        normsq_s = float(np.dot(m_s, m_s))

        rs_t, b_t, logc_st, dot_t, normsq_t = [], [], [], [], []
        for n, t in enumerate(self.spec.targets):
            rst = self.rowsums[t] + (delta if t == i else 0.0)
            bt = b_i if t == i else self._bias_of(t, rst)
            c_t = self._c_t[n]
            if t == i:
                c_t = c_t.copy()
                c_t[self.s_pos] = max(c_t[self.s_pos] + delta, 0.0)
            with np.errstate(divide="ignore"):
                logc_t = np.where(c_t > 0, np.log(np.maximum(c_t, 1e-300)), -np.inf)
            m_t = _masked_row(logc_t, c_t > 0, bt, b_ids)
            rs_t.append(rst)
            b_t.append(bt)
            logc_st.append(logc_s[self.t_pos[n]])
            dot_t.append(float(np.dot(m_s, m_t)))
            normsq_t.append(float(np.dot(m_t, m_t)))

        new_j = self._j_from_scalars(rs_s, b_s, rs_t, b_t, logc_st, normsq_s, dot_t, normsq_t)
        effects = {
            "J": new_j,
            "size": self.size + step_cost(delta, self.omega[pi], self.steps.beta),
            "rowsum_s": rs_s,
            "rowsum_i": rs_i,
            "b_s": b_s,
            "b_i": b_i,
            "normsq_s": normsq_s,
            "dot_t": dot_t,
            "normsq_t": normsq_t,
        }
        return new_j, effects

    def score_for_delta(self, delta: float) -> np.ndarray:
        """Objective gain for stepping each candidate by delta (vectorized).
        Infeasible steps score -inf."""
        cand = self.cand_pos
        eps = self.cfg.epsilon_floor
        expr = self.spec.expr
        s = self.spec.source

        new_c = self._c_s[cand] + delta
        feasible = new_c > -1e-12
        new_c = np.maximum(new_c, 0.0)

        rs_s = self.rowsums[s] + delta
        b_s = self._bias_of(s, rs_s)
        log_rs_s = math.log(rs_s) if rs_s > 0 else -math.inf
        nb_all = self._new_bias_cand(delta)
        nb_cand = nb_all[cand]
        bias_shift = (b_s != self.b_s) or bool(np.any(nb_cand != self.b_ids[cand]))

        # hypothetical row of s restricted to the stepped entry
        with np.errstate(divide="ignore", invalid="ignore"):
            log_new_c = np.where(new_c > 0, np.log(np.maximum(new_c, 1e-300)), -np.inf)
        new_ms_i = np.where(
            new_c > 0, np.maximum(log_new_c - b_s - nb_cand, 0.0), 0.0
        )

        if bias_shift:
            b_ids_adj = self.b_ids.copy()
            b_ids_adj[self.s_pos] = b_s
            ms_base = _masked_row(self._logc_s, self._mask_s, b_s, b_ids_adj)
            s2 = float(np.dot(ms_base, ms_base))
        else:
            b_ids_adj = self.b_ids
            ms_base = self.m_s
            s2 = self.normsq_s

        n_t = len(self.spec.targets)
        cos2_new = np.zeros((n_t, cand.shape[0]))
        cos1_new = np.zeros(n_t)
        for n, t in enumerate(self.spec.targets):
            bt = self.b_t[n]
            if bias_shift:
                mt_base = _masked_row(self._logc_t[n], self._mask_t[n], bt, b_ids_adj)
                s1 = float(np.dot(ms_base, mt_base))
                t2 = float(np.dot(mt_base, mt_base))
            else:
                mt_base = self.m_t[n]
                s1 = self.dot_t[n]
                t2 = self.normsq_t[n]
            if expr in (COS2, COS12):
                logc_t_cand = self._logc_t[n][cand]
                new_mt_i = np.where(
                    self._mask_t[n][cand],
                    np.maximum(logc_t_cand - bt - nb_cand, 0.0),
                    0.0,
                )
                dot = s1 - ms_base[cand] * mt_base[cand] + new_ms_i * new_mt_i
                nss = s2 - ms_base[cand] ** 2 + new_ms_i**2
                nst = t2 - mt_base[cand] ** 2 + new_mt_i**2
                with np.errstate(invalid="ignore", divide="ignore"):
                    c2 = np.where((nss > 0) & (nst > 0), dot / np.sqrt(nss * nst), 0.0)
                cos2_new[n] = c2
            if expr in (COS1, COS12):
                b_sum = b_s + bt
                logc_st = self._logc_s[self.t_pos[n]]
                num = max(logc_st - b_sum, 0.0) if logc_st != -math.inf else 0.0
                log_rs_t = (
                    math.log(self.rowsums[t]) if self.rowsums[t] > 0 else -math.inf
                )
                denom = math.sqrt(
                    _f_scalar(log_rs_s, b_sum, eps) * _f_scalar(log_rs_t, b_sum, eps)
                )
                cos1_new[n] = num / denom if num > 0 else 0.0

        new_j = np.zeros(cand.shape[0])
        for n, sign in enumerate(self.signs):
            if expr == COS1:
                new_j += sign * cos1_new[n]
            elif expr == COS2:
                new_j += sign * cos2_new[n]
            else:
                new_j += sign * (0.5 * cos1_new[n] + 0.5 * cos2_new[n])
        new_j /= n_t

        # targets stepped directly touch both rows; score them exactly
        for n, t in enumerate(self.spec.targets):
            where = np.nonzero(self.ids[cand] == t)[0]
            if where.size:
                val, _ = self.score_single(t, delta)
                new_j[where[0]] = val if val != -math.inf else self.J

        d_j = new_j - self.J
        d_j[~feasible] = -math.inf
        return d_j

    def costs(self, delta: float) -> np.ndarray:
        base = abs(delta) / self.omega[self.cand_pos]
        return self.steps.beta * base if delta < 0 else base

    # -- applying a step ---------------------------------------------------------

    def apply_step(self, i: int, delta: float) -> None:
        pi = self.pos_of[int(i)]
        if self._c_s[pi] + delta < -1e-12:
            raise SpecError("step deletes more mass than exists")
        s = self.spec.source
        self.delta.entries[int(i)] = self.delta.entries.get(int(i), 0.0) + delta
        if abs(self.delta.entries[int(i)]) < 1e-12:
            del self.delta.entries[int(i)]
        self.size += step_cost(delta, self.omega[pi], self.steps.beta)
        self.rowsums[s] += delta
        self.rowsums[i] += delta
        self._c_s[pi] = max(self._c_s[pi] + delta, 0.0)
        for n, t in enumerate(self.spec.targets):
            if t == i:
                self._c_t[n][self.s_pos] = max(self._c_t[n][self.s_pos] + delta, 0.0)
        self._refresh_bias()
        self._refresh_scalars()
        self.iterations += 1


def comp_diff(state: SolverState, i: int, delta: float):
    """Objective change for hypothetically adding delta at word i, plus the
    state scalars that would result. Does not mutate the state; infeasible
    steps score -inf."""
    new_j, effects = state.score_single(i, delta)
    if new_j == -math.inf:
        return -math.inf, effects
    return new_j - state.J, effects


@dataclass
class SolveResult:
    change: ChangeVector
    objective: float
    size: float
    iterations: int
    status: str
    spec: AttackSpec
    threshold: RankThreshold | None = None
    trace: list | None = None
    start_objective: float = 0.0

    def report(self) -> dict:
        return {
            "status": self.status,
            "iterations": self.iterations,
            "objective": self.objective,
            "start_objective": self.start_objective,
            "size": self.size,
            "entries": len(self.change.entries),
            "mode": self.spec.mode,
            "expr": self.spec.expr,
            "threshold": self.threshold.value if self.threshold else None,
        }


def solve_greedy(
    spec: AttackSpec,
    cooc: CoocMatrix,
    cfg: DistConfig,
    steps: StepSet | None = None,
    threshold: RankThreshold | None = None,
    candidates: np.ndarray | None = None,
    hard_cap: float = DEFAULT_HARD_CAP,
    lam: int = 5,
    trace: bool = False,
) -> SolveResult:
    """Iterate argmax of (objective gain / size cost) until the budget or the
    rank threshold is crossed, or no step improves the objective."""
    if spec.mode == RANK and threshold is None:
        raise SpecError("rank mode requires an estimated proximity threshold")
    state = SolverState(spec, cooc, cfg, steps=steps, candidates=candidates, lam=lam)
    limit = spec.max_size if spec.mode == PROXIMITY else hard_cap
    target_j = threshold.value if threshold is not None else None
    start_j = state.J
    traces: list[np.ndarray] | None = [] if trace else None

    # Rank mode runs until the threshold or the hard cap and may accept
    # non-improving steps (the objective is not submodular, so shallow dips
    # can precede further gains); we remember the best prefix seen. Proximity
    # mode stops at the first non-improving step, keeping the objective
    # nondecreasing within the budget.
    best_seen = (state.J, dict(state.delta.entries), state.size, state.iterations)
    status = STATUS_BUDGET
    while True:
        if target_j is not None and state.J >= target_j:
            status = STATUS_OK
            break
        if state.size >= limit:
            status = STATUS_PARTIAL if spec.mode == RANK else STATUS_BUDGET
            break
        best = None  # (ratio, id, delta, d_j)
        gains = []
        for delta in state.steps.values:
            d_j = state.score_for_delta(delta)
            if traces is not None:
                gains.append(d_j)
            with np.errstate(invalid="ignore"):
                ratios = d_j / state.costs(delta)
            k = int(np.argmax(ratios))
            r = float(ratios[k])
            if r == -math.inf:
                continue
            cand_id = int(state.ids[state.cand_pos[k]])
            if (
                best is None
                or r > best[0]
                or (r == best[0] and cand_id < best[1])
                or (r == best[0] and cand_id == best[1] and delta < best[2])
            ):
                best = (r, cand_id, delta, float(d_j[k]))
        if traces is not None and gains:
            traces.append(np.concatenate(gains))
        if best is None or (best[3] <= 0.0 and spec.mode == PROXIMITY):
            status = STATUS_STALLED
            break
        state.apply_step(best[1], best[2])
        if state.J > best_seen[0]:
            best_seen = (state.J, dict(state.delta.entries), state.size, state.iterations)

    if spec.mode == RANK and status == STATUS_PARTIAL and best_seen[0] > state.J:
        # threshold unreachable: report the best prefix found
        return SolveResult(
            change=ChangeVector(spec.source, best_seen[1]),
            objective=best_seen[0],
            size=best_seen[2],
            iterations=state.iterations,
            status=status,
            spec=spec,
            threshold=threshold,
            trace=traces,
            start_objective=start_j,
        )
    return SolveResult(
        change=state.delta,
        objective=state.J,
        size=state.size,
        iterations=state.iterations,
        status=status,
        spec=spec,
        threshold=threshold,
        trace=traces,
        start_objective=start_j,
    )


def estimate_rank_threshold(
    t: int,
    r: int,
    m: int,
    alpha: float,
    embedding,
    cooc: CoocMatrix,
    cfg: DistConfig,
    expr: str = COS12,
) -> RankThreshold:
    """Maximum distributional proximity among the target's embedding
    neighbors at ranks r-m..r+m (the 2m nearest when r <= m), plus the
    safety margin."""
    if t < 0 or t >= cooc.dim:
        raise SpecError(f"target id out of range: {t}")
    if r <= m:
        lo, hi = 1, 2 * m
    else:
        lo, hi = r - m, r + m
    ranked = embedding.neighbors(t, hi)
    if not ranked:
        raise SpecError("embedding has no neighbors to rank against")
    fn = expression(expr)
    best = max(fn(t, int(w), cooc, cfg) for w, _ in ranked[lo - 1 : hi])
    return RankThreshold(t, r, m, alpha, float(best), float(best) + alpha)


def diminishing_returns_report(trace: list) -> np.ndarray:
    """Per iteration, the fraction of candidate gains that were positive in
    the previous iteration and did not increase in the current one."""
    out = []
    for prev, cur in zip(trace, trace[1:]):
        pos = prev > 0
        if not np.any(pos):
            out.append(float("nan"))
            continue
        out.append(float(np.mean(cur[pos] <= prev[pos])))
    return np.array(out)


# ---------------------------------------------------------------------------
# external formats


def parse_spec_file(path: str, dictionary) -> AttackSpec:
    """key=value attack description; word fields hold tokens, not ids."""
    kv: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise SpecError(f"bad spec line: {line!r}")
            key, val = line.split("=", 1)
            kv[key.strip()] = val.strip()

    def words(key):
        raw = kv.get(key, "")
        return tuple(dictionary.id_of(w) for w in raw.split(",") if w)

    mode = kv.get("mode", PROXIMITY)
    return AttackSpec(
        source=dictionary.id_of(kv["s"]),
        pos=words("pos"),
        neg=words("neg"),
        expr=kv.get("expr", COS12),
        mode=mode,
        max_size=float(kv["budget"]) if "budget" in kv else None,
        rank=int(kv["rank"]) if "rank" in kv else None,
        alpha=float(kv.get("alpha", 0.0)),
        rank_window=int(kv.get("m", 5)),
        beta=float(kv.get("beta", 1.0)),
    )


def write_spec_file(spec: AttackSpec, dictionary, path: str) -> None:
    lines = [f"s={dictionary.word_of(spec.source)}"]
    if spec.pos:
        lines.append("pos=" + ",".join(dictionary.word_of(t) for t in spec.pos))
    if spec.neg:
        lines.append("neg=" + ",".join(dictionary.word_of(t) for t in spec.neg))
    lines.append(f"mode={spec.mode}")
    lines.append(f"expr={spec.expr}")
    if spec.max_size is not None:
        lines.append(f"budget={spec.max_size}")
    if spec.rank is not None:
        lines.append(f"rank={spec.rank}")
    lines.append(f"alpha={spec.alpha}")
    lines.append(f"m={spec.rank_window}")
    lines.append(f"beta={spec.beta}")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def save_changevec(change: ChangeVector, dictionary, path: str) -> None:
    """Text lines "word<space>signed-delta", descending magnitude."""
    items = sorted(change.entries.items(), key=lambda kv: (-abs(kv[1]), kv[0]))
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# source {dictionary.word_of(change.source)}\n")
        for i, v in items:
            f.write(f"{dictionary.word_of(i)} {v:.17g}\n")


def load_changevec(path: str, dictionary) -> ChangeVector:
    source = None
    entries: dict[int, float] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# source "):
                source = dictionary.id_of(line[len("# source "):])
                continue
            word, val = line.rsplit(" ", 1)
            entries[dictionary.id_of(word)] = float(val)
    if source is None:
        raise SpecError("change-vector file is missing its source header")
    return ChangeVector(source, entries)


def save_report(result: SolveResult, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(result.report(), f, indent=2)
        f.write("\n")
