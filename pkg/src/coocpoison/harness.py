"""End-to-end orchestration: benchmark attacks, correlation studies, and
proxy-preservation diagnostics at desk scale.

The protocol mirrors the attack pipeline: count cooccurrences, pretrain an
embedding, solve for change vectors, place them, inject all attack sequences
at once (each on its own line, then shuffle), retrain as the victim would,
and measure neighbor ranks and cosines. All randomness flows from one seed
per run.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import placement
from .corpus import CoocMatrix, Dictionary, build_vocab, count_cooc
from .distmat import BIAS, LCO, SPPMI, DistConfig
from .embedding import Embedding, TrainConfig, train_glove
from .errors import ConfigError, StatError
from .proximity import COS1, COS12, COS2, RANK, AttackSpec, cos1, expression, objective
from .solver import (
    SolveResult,
    StepSet,
    estimate_rank_threshold,
    solve_greedy,
)


@dataclass(frozen=True)
class PipelineConfig:
    """Shared knobs of the count -> train -> attack -> retrain pipeline."""

    window: int = 5
    weighting: str = "harmonic"
    lam: int = 5
    max_vocab: int | None = 400_000
    min_count: int = 5
    matrix_kind: str = BIAS
    k: int = 5
    expr: str = COS12
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0


@dataclass
class BaseModel:
    """Pre-attack artifacts shared by every attack on one corpus."""

    dictionary: Dictionary
    cooc: CoocMatrix
    emb: Embedding


def build_base(lines, cfg: PipelineConfig, extra_words=()) -> BaseModel:
    """Vocabulary, cooccurrences, and a pretrained embedding. Extra (made-up)
    words are appended to the vocabulary with empty rows; the embedding is
    trained on the same counts, so their vectors stay at initialization."""
    d = build_vocab(lines, cfg.max_vocab, cfg.min_count)
    if extra_words:
        d = d.extended(extra_words)
    cooc = count_cooc(lines, d, cfg.window, cfg.weighting)
    emb = train_glove(cooc, cfg.train, words=d.words)
    return BaseModel(d, cooc, emb)


def real_word_view(base: BaseModel, n_real: int) -> Embedding:
    """Embedding restricted to the first n_real ids (made-up words appended
    after them never enter neighbor queries)."""
    e = base.emb
    return Embedding(e.W[:n_real], e.Ctx[:n_real], e.b[:n_real], e.bp[:n_real],
                     e.words[:n_real], e.config)


def dist_config(base: BaseModel, cfg: PipelineConfig, estimated_ids=()) -> DistConfig:
    if cfg.matrix_kind == SPPMI:
        return DistConfig.sppmi(base.cooc, cfg.k)
    if cfg.matrix_kind == LCO:
        return DistConfig.lco(base.cooc.dim)
    values = base.emb.biases()
    return DistConfig.bias(values, base.cooc, estimated_ids)


@dataclass
class AttackRecord:
    source: str
    target: str
    status: str
    iterations: int = 0
    size_estimate: float = 0.0
    changeset_size: float = 0.0
    n_sequences: int = 0
    j_start: float = 0.0
    j_final: float = 0.0
    threshold: float | None = None
    j_postplace: float | None = None
    j_postretrain: float | None = None
    pre_rank: int | None = None
    post_rank: int | None = None
    pre_cos: float | None = None
    post_cos: float | None = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def summarize(records: list[AttackRecord]) -> dict:
    """Aggregates recomputable from the records."""
    ranks = [r.post_rank for r in records if r.post_rank is not None]
    gains = [
        r.post_cos - (r.pre_cos or 0.0) for r in records if r.post_cos is not None
    ]
    return {
        "pairs": len(records),
        "median_rank": float(np.median(ranks)) if ranks else None,
        "mean_cos_increase": float(np.mean(gains)) if gains else None,
        "rank_below_10": int(sum(1 for r in ranks if r < 10)),
        "rank_at_most_10": int(sum(1 for r in ranks if r <= 10)),
    }


def realized_change(changeset: placement.ChangeSet, dictionary: Dictionary,
                    cfg: PipelineConfig) -> dict[int, float]:
    """Recount the change set's added sequences and read off the realized
    additions to the source row (the placement-fidelity view of the attack)."""
    added = [" ".join(seq) for seq in changeset.additions]
    if not added:
        return {}
    cadd = count_cooc(added, dictionary, cfg.window, cfg.weighting)
    ids, vals = cadd.row(dictionary.id_of(changeset.source_word))
    return {int(i): float(v) for i, v in zip(ids, vals)}


def inject_and_retrain(lines, changesets, cfg: PipelineConfig, retrain_cfg: TrainConfig | None = None):
    """Apply all change sets (flips in place, additions each on their own
    line), shuffle once, then rebuild the victim's vocabulary, counts, and
    embedding from the poisoned corpus."""
    merged = placement.ChangeSet(
        additions=[seq for cs in changesets for seq in cs.additions],
        flips=[f for cs in changesets for f in cs.flips],
    )
    poisoned = placement.apply(lines, merged, seed=cfg.seed)
    dv = build_vocab(poisoned, cfg.max_vocab, cfg.min_count)
    cv = count_cooc(poisoned, dv, cfg.window, cfg.weighting)
    ev = train_glove(cv, retrain_cfg or cfg.train, words=dv.words)
    return poisoned, BaseModel(dv, cv, ev)


def _post_metrics(record: AttackRecord, victim: BaseModel, cfg: PipelineConfig):
    dv = victim.dictionary
    if record.source not in dv.index or record.target not in dv.index:
        record.status += "+missing-after-retrain"
        return
    sv, tv = dv.id_of(record.source), dv.id_of(record.target)
    record.post_rank = victim.emb.rank_of(tv, sv)
    record.post_cos = victim.emb.cosine(sv, tv)
    vdist = dist_config(victim, cfg)
    record.j_postretrain = expression(cfg.expr)(sv, tv, victim.cooc, vdist)


def run_rank_attacks(
    lines,
    targets: list[str],
    cfg: PipelineConfig,
    r: int = 1,
    alpha: float = 0.2,
    m: int = 5,
    hard_cap: float = 25000.0,
    sources: list[str] | None = None,
    retrain: bool = True,
    retrain_cfg: TrainConfig | None = None,
    min_sequences: int | None = None,
):
    """Rank attack with made-up source words on each target; all change sets
    are injected together and measured after one retraining.

    min_sequences (default: the pipeline's min_count) pads trivially small
    change sets by repeating sequences so the made-up source survives the
    victim's vocabulary threshold."""
    if sources is None:
        sources = [f"qzx{i}qzx" for i in range(len(targets))]
    if len(sources) != len(targets):
        raise ConfigError("need one source per target")
    if min_sequences is None:
        min_sequences = cfg.min_count
    base = build_base(lines, cfg, extra_words=sources)
    n_real = len(base.dictionary) - len(sources)
    emb_real = real_word_view(base, n_real)
    made_ids = [base.dictionary.id_of(w) for w in sources]
    dist = dist_config(base, cfg, estimated_ids=made_ids if cfg.matrix_kind == BIAS else ())

    records, changesets = [], []
    for s_word, t_word in zip(sources, targets):
        s, t = base.dictionary.id_of(s_word), base.dictionary.id_of(t_word)
        spec = AttackSpec(source=s, pos=(t,), expr=cfg.expr, mode=RANK, rank=r,
                          alpha=alpha, rank_window=m)
        thr = estimate_rank_threshold(t, r, m, alpha, emb_real, base.cooc, dist, cfg.expr)
        res = solve_greedy(spec, base.cooc, dist, threshold=thr, hard_cap=hard_cap, lam=cfg.lam)
        cs = placement.place(res.change, spec, base.dictionary, cfg.lam, cfg.weighting,
                             seed=cfg.seed)
        while cs.additions and len(cs.additions) < min_sequences:
            cs.additions.append(list(cs.additions[len(cs.additions) % max(len(cs.additions), 1)]))
        rec = AttackRecord(
            source=s_word, target=t_word, status=res.status,
            iterations=res.iterations, size_estimate=res.size,
            changeset_size=cs.size(), n_sequences=len(cs.additions),
            j_start=res.start_objective, j_final=res.objective,
            threshold=thr.value,
        )
        realized = realized_change(cs, base.dictionary, cfg)
        rec.j_postplace = (
            objective(spec, realized, base.cooc, dist) if realized else res.start_objective
        )
        records.append(rec)
        changesets.append(cs)

    victim = None
    if retrain:
        _, victim = inject_and_retrain(lines, changesets, cfg, retrain_cfg)
        for rec in records:
            _post_metrics(rec, victim, cfg)
    return records, changesets, base, victim


def run_proximity_benchmark(
    lines,
    pairs: list[tuple[str, str]],
    budget: float,
    cfg: PipelineConfig,
    retrain: bool = True,
    steps: StepSet | None = None,
):
    """Proximity attack (NEG empty, POS={t}) over existing word pairs, as in
    the benchmark protocol; returns per-pair records plus artifacts."""
    base = build_base(lines, cfg)
    dist = dist_config(base, cfg)
    records, changesets, results = [], [], []
    for s_word, t_word in pairs:
        s, t = base.dictionary.id_of(s_word), base.dictionary.id_of(t_word)
        spec = AttackSpec(source=s, pos=(t,), expr=cfg.expr, mode="proximity",
                          max_size=budget)
        res = solve_greedy(spec, base.cooc, dist, steps=steps, lam=cfg.lam)
        cs = placement.place(res.change, spec, base.dictionary, cfg.lam, cfg.weighting,
                             seed=cfg.seed, lines=lines, window=cfg.window)
        realized = realized_change(cs, base.dictionary, cfg)
        rec = AttackRecord(
            source=s_word, target=t_word, status=res.status,
            iterations=res.iterations, size_estimate=res.size,
            changeset_size=cs.size(), n_sequences=len(cs.additions),
            j_start=res.start_objective, j_final=res.objective,
            j_postplace=objective(spec, realized, base.cooc, dist) if realized else res.start_objective,
            pre_rank=base.emb.rank_of(t, s), pre_cos=base.emb.cosine(s, t),
        )
        records.append(rec)
        changesets.append(cs)
        results.append(res)

    victim = None
    if retrain:
        _, victim = inject_and_retrain(lines, changesets, cfg)
        for rec in records:
            _post_metrics(rec, victim, cfg)
    return records, changesets, base, victim, results


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size < 2:
        raise StatError("need at least two points for a correlation")
    if np.std(x) == 0 or np.std(y) == 0:
        raise StatError("degenerate (constant) sample in correlation")
    return float(np.corrcoef(x, y)[0, 1])


def proxy_preservation(records: list[AttackRecord]) -> dict:
    """Scatter data and Pearson coefficients linking the solver's objective
    to post-placement counts, post-retraining counts, and the final
    embedding proximity."""
    js = [r.j_final for r in records]
    out = {"j": js}
    out["postplace"] = [r.j_postplace for r in records]
    out["pearson_postplace"] = pearson(js, out["postplace"])
    if all(r.j_postretrain is not None for r in records):
        out["postretrain"] = [r.j_postretrain for r in records]
        out["pearson_postretrain"] = pearson(js, out["postretrain"])
    if all(r.post_cos is not None for r in records):
        out["embedding"] = [r.post_cos for r in records]
        out["pearson_embedding"] = pearson(js, out["embedding"])
    return out


def correlation_study(
    cooc: CoocMatrix,
    emb: Embedding,
    n_src: int = 100,
    n_tgt: int = 100,
    top: int = 2000,
    seed: int = 0,
    kinds=(BIAS, SPPMI, LCO),
    exprs=(COS1, COS2, COS12),
    k: int = 5,
) -> dict:
    """Pearson correlations of each (matrix kind, expression) against
    embedding cosines, plus word-context and word-word cosines."""
    rng = np.random.default_rng(seed)
    top = min(top, cooc.dim)
    if n_src + n_tgt > top:
        raise StatError("not enough common words to sample disjoint sets")
    sample = rng.choice(top, size=n_src + n_tgt, replace=False)
    srcs, tgts = sample[:n_src], sample[n_src:]

    e = emb.E
    en = e / np.maximum(np.linalg.norm(e, axis=1, keepdims=True), 1e-12)
    wn = emb.W / np.maximum(np.linalg.norm(emb.W, axis=1, keepdims=True), 1e-12)
    cn = emb.Ctx / np.maximum(np.linalg.norm(emb.Ctx, axis=1, keepdims=True), 1e-12)
    emb_cos = (en[srcs] @ en[tgts].T).ravel()
    wc_cos = (wn[srcs] @ cn[tgts].T).ravel()
    ww_cos = (wn[srcs] @ wn[tgts].T).ravel()

    table: dict = {"n_pairs": int(n_src * n_tgt)}
    for kind in kinds:
        if kind == SPPMI:
            dist = DistConfig.sppmi(cooc, k)
        elif kind == LCO:
            dist = DistConfig.lco(cooc.dim)
        else:
            dist = DistConfig.bias(emb.biases())
        cache: dict[int, tuple] = {}

        def mrow(u):
            if u not in cache:
                from .distmat import m_row

                ids, vals = m_row(int(u), cooc, dist)
                cache[u] = (ids, vals, float(np.dot(vals, vals)))
            return cache[u]

        c1 = np.empty(n_src * n_tgt)
        c2 = np.empty(n_src * n_tgt)
        kk = 0
        for u in srcs:
            ids_u, vals_u, nu = mrow(u)
            for v in tgts:
                c1[kk] = cos1(int(u), int(v), cooc, dist)
                ids_v, vals_v, nv = mrow(v)
                if nu > 0 and nv > 0:
                    common, iu, iv = np.intersect1d(ids_u, ids_v, assume_unique=True,
                                                    return_indices=True)
                    dot = float(np.dot(vals_u[iu], vals_v[iv])) if common.size else 0.0
                    c2[kk] = dot / np.sqrt(nu * nv)
                else:
                    c2[kk] = 0.0
                kk += 1
        values = {COS1: c1, COS2: c2, COS12: 0.5 * c1 + 0.5 * c2}
        for expr in exprs:
            table[(kind, expr)] = {
                "embedding": pearson(values[expr], emb_cos),
                "word_context": pearson(values[expr], wc_cos),
                "word_word": pearson(values[expr], ww_cos),
            }
    return table


def save_run(outdir: str, records: list[AttackRecord], summary: dict, extra: dict | None = None):
    """Persist records and a manifest under the run directory."""
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "records.json"), "w", encoding="utf-8") as f:
        json.dump([r.to_dict() for r in records], f, indent=2)
    manifest = {"summary": summary, "records": "records.json"}
    if extra:
        manifest.update(extra)
    with open(os.path.join(outdir, "manifest.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
