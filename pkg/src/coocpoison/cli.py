"""Command-line surface: one subcommand per pipeline stage."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import corpus as corpus_mod
from . import distmat, evasion, harness, placement, proximity, solver
from . import embedding as embedding_mod
from .errors import ConfigError


def _read_corpus(path: str) -> list[str]:
    return list(corpus_mod.read_lines(path))


def _dist_config(args, cooc, dictionary, estimated_ids=()):
    kind = args.kind
    if kind == distmat.SPPMI:
        return distmat.DistConfig.sppmi(cooc, args.k)
    if kind == distmat.LCO:
        return distmat.DistConfig.lco(cooc.dim)
    if not args.bias_file:
        raise ConfigError("--kind bias requires --bias-file")
    values = distmat.load_bias(args.bias_file, dictionary)
    return distmat.DistConfig.bias(values, cooc, estimated_ids)


def _load_cooc(args, dictionary):
    return corpus_mod.load_cooc(args.cooc, len(dictionary), args.window, args.weighting)


def _add_cooc_args(p):
    p.add_argument("--cooc", required=True, help="binary cooccurrence file")
    p.add_argument("--vocab", required=True, help="vocabulary file")
    p.add_argument("--window", type=int, default=5, help="window the counts were made with")
    p.add_argument("--weighting", choices=[corpus_mod.HARMONIC, corpus_mod.LINEAR],
                   default=corpus_mod.HARMONIC)


def _add_kind_args(p):
    p.add_argument("--kind", choices=[distmat.SPPMI, distmat.BIAS, distmat.LCO],
                   default=distmat.LCO)
    p.add_argument("--k", type=int, default=5, help="negative-sampling constant for sppmi")
    p.add_argument("--bias-file", help="trained bias file for --kind bias")


def cmd_vocab(args):
    lines = _read_corpus(args.corpus)
    d = corpus_mod.build_vocab(lines, args.max_vocab, args.min_count,
                               lowercase=not args.no_lowercase)
    corpus_mod.save_vocab(d, args.out)
    print(f"{len(d)} words -> {args.out}")


def cmd_cooc(args):
    d = corpus_mod.load_vocab(args.vocab)
    lines = _read_corpus(args.corpus)
    c = corpus_mod.count_cooc(lines, d, args.window, args.weighting)
    corpus_mod.save_cooc(c, args.out)
    print(f"{c.mat.nnz} entries (skipped {c.skipped_tokens} OOV tokens) -> {args.out}")


def cmd_distmat(args):
    d = corpus_mod.load_vocab(args.vocab)
    c = _load_cooc(args, d)
    cfg = _dist_config(args, c, d)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        if args.pairs:
            for line in corpus_mod.read_lines(args.pairs):
                if not line.strip():
                    continue
                u, v = line.split()
                val = distmat.m_entry(d.id_of(u), d.id_of(v), c, cfg)
                out.write(f"{u},{v},{val:.10g}\n")
        else:
            rowsums = c.rowsums()
            for i, w in enumerate(d.words):
                out.write(f"{w} {cfg.bias.value_of(i, rowsums[i]):.10g}\n")
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_proximity(args):
    d = corpus_mod.load_vocab(args.vocab)
    c = _load_cooc(args, d)
    cfg = _dist_config(args, c, d)
    fn = proximity.expression(args.expr)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        out.write("u,v,value\n")
        for line in corpus_mod.read_lines(args.pairs):
            if not line.strip():
                continue
            u, v = line.split()
            out.write(f"{u},{v},{fn(d.id_of(u), d.id_of(v), c, cfg):.10g}\n")
    finally:
        if out is not sys.stdout:
            out.close()


def cmd_attack(args):
    d = corpus_mod.load_vocab(args.vocab)
    c = _load_cooc(args, d)
    spec = solver.parse_spec_file(args.spec, d)
    estimated = (spec.source,) if args.new_word else ()
    cfg = _dist_config(args, c, d, estimated)
    steps = solver.StepSet.with_deletions(spec.beta) if args.deletions else solver.StepSet.additions()
    threshold = None
    if spec.mode == proximity.RANK:
        if not args.vectors:
            raise ConfigError("rank mode requires --vectors for threshold estimation")
        words, vecs = embedding_mod.load_vectors(args.vectors)
        index = embedding_mod.VectorsIndex(words, vecs)
        threshold = solver.estimate_rank_threshold(
            spec.pos[0], spec.rank, spec.rank_window, spec.alpha, index, c, cfg, spec.expr
        )
    res = solver.solve_greedy(spec, c, cfg, steps=steps, threshold=threshold,
                              lam=args.lam, hard_cap=args.hard_cap)
    solver.save_changevec(res.change, d, args.out + ".changevec")
    solver.save_report(res, args.out + ".report.json")
    print(f"{res.status}: J={res.objective:.4f} size={res.size:.1f} "
          f"iterations={res.iterations} -> {args.out}.changevec")


def cmd_place(args):
    d = corpus_mod.load_vocab(args.vocab)
    spec = solver.parse_spec_file(args.spec, d)
    change = solver.load_changevec(args.changevec, d)
    lines = _read_corpus(args.corpus) if args.corpus else None
    cs = placement.place(change, spec, d, args.lam, args.weighting, seed=args.seed,
                         lines=lines, window=args.window)
    placement.save_changeset(cs, args.out)
    print(f"{len(cs.additions)} sequences, {len(cs.flips)} flips, |D|={cs.size():.1f} -> {args.out}")


def cmd_inject(args):
    lines = _read_corpus(args.corpus)
    cs = placement.load_changeset(args.changeset)
    d = corpus_mod.load_vocab(args.vocab) if args.vocab else None
    out = placement.apply(lines, cs, seed=args.seed, dictionary=d)
    with open(args.out, "w", encoding="utf-8") as f:
        for line in out:
            f.write(line + "\n")
    print(f"{len(out)} lines -> {args.out}")


def cmd_train(args):
    d = corpus_mod.load_vocab(args.vocab)
    c = _load_cooc(args, d)
    cfg = embedding_mod.TrainConfig(dim=args.dim, c_max=args.xmax, epochs=args.epochs,
                                    lr=args.lr, seed=args.seed,
                                    deterministic=not args.hogwild)
    emb = embedding_mod.train_glove(c, cfg, words=d.words)
    embedding_mod.save_vectors(emb, args.out)
    if args.bias_out:
        embedding_mod.export_biases(emb, args.bias_out)
    print(f"loss {emb.losses[0]:.4g} -> {emb.losses[-1]:.4g}; vectors -> {args.out}")


def cmd_evade(args):
    d = corpus_mod.load_vocab(args.vocab)
    spec = solver.parse_spec_file(args.spec, d)
    change = solver.load_changevec(args.changevec, d)
    s_word = d.word_of(change.source)
    gamma1 = float(corpus_mod.weight_values(args.weighting, args.lam)[0])
    first_ids = set(spec.pos) if spec.expr in (proximity.COS1, proximity.COS12) else set()
    additions: list[list[str]] = []
    second: dict[int, float] = {}
    for i, m in sorted(change.entries.items()):
        if m <= 0:
            raise ConfigError("evasion strategies support additions only")
        if i in first_ids:
            additions.extend(placement.place_first_order(s_word, d.word_of(i), m, gamma1))
        else:
            second[i] = m
    uncounted: frozenset = frozenset()
    if args.strategy == "plain":
        seqs, _ = placement.place_second_order(second, s_word, d.words, args.lam,
                                               args.weighting,
                                               rng=np.random.default_rng(args.seed))
    elif args.strategy in ("and-strict", "and-lenient"):
        variant = evasion.STRICT if args.strategy == "and-strict" else evasion.LENIENT
        seqs, _ = evasion.place_and_variant(second, s_word, d.words, args.lam, variant,
                                            args.weighting,
                                            rng=np.random.default_rng(args.seed))
        if variant == evasion.LENIENT:
            uncounted = frozenset([evasion.AND_WORD])
    else:
        lines = _read_corpus(args.corpus)
        needed = {d.word_of(i) for i in second}
        index = evasion.NgramIndex.build(lines, args.lam, restrict_to=needed)
        result = evasion.place_lambda_gram(second, s_word, d.words, index, args.lam,
                                           args.weighting, penalty=args.penalty)
        if result.warning:
            print("warning:", result.warning, file=sys.stderr)
        seqs = result.sequences
    cs = placement.ChangeSet(additions + seqs, [], s_word,
                             tuple(d.word_of(t) for t in spec.targets), uncounted)
    placement.save_changeset(cs, args.out)
    print(f"{len(cs.additions)} sequences ({args.strategy}), |D|={cs.size():.1f} -> {args.out}")


def cmd_defend(args):
    lines = _read_corpus(args.corpus)
    if args.scorer == "builtin":
        reference = _read_corpus(args.reference) if args.reference else lines
        scorer = evasion.BigramScorer(args.smoothing).fit(reference)
    elif args.scorer.startswith("file:"):
        scorer = evasion.ExternalScorer.from_file(args.scorer[len("file:"):])
    else:
        raise ConfigError("--scorer must be 'builtin' or 'file:PATH'")
    attack_idx = None
    if args.attack_lines:
        with open(args.attack_lines, "r", encoding="utf-8") as f:
            attack_idx = {int(x) for x in f.read().split()}
    kept, report = evasion.filter_defense(lines, scorer, args.quantile, attack_idx)
    with open(args.out, "w", encoding="utf-8") as f:
        for line in kept:
            f.write(line + "\n")
    summary = {
        "threshold": report.threshold,
        "kept": report.n_kept,
        "total": report.n_total,
        "attack_retention": report.attack_retention if report.attack_total else None,
        "clean_loss": report.clean_loss if report.attack_total else None,
    }
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            json.dump(summary, f, indent=2)
    print(json.dumps(summary))


def cmd_bench(args):
    lines = _read_corpus(args.corpus)
    pairs = []
    for line in corpus_mod.read_lines(args.pairs):
        if line.strip():
            s, t = line.split()
            pairs.append((s, t))
    cfg = harness.PipelineConfig(
        window=args.window,
        lam=args.lam,
        max_vocab=args.max_vocab,
        min_count=args.min_count,
        matrix_kind=args.kind,
        expr=args.expr,
        train=embedding_mod.TrainConfig(dim=args.dim, c_max=args.xmax,
                                        epochs=args.epochs, lr=args.lr, seed=args.seed),
        seed=args.seed,
    )
    all_summaries = []
    records = changesets = base = None
    for trial in range(args.trials):
        trial_cfg = harness.PipelineConfig(
            **{**cfg.__dict__,
               "seed": args.seed + trial,
               "train": embedding_mod.TrainConfig(dim=args.dim, c_max=args.xmax,
                                                  epochs=args.epochs, lr=args.lr,
                                                  seed=args.seed + trial)})
        records, changesets, base, victim, _ = harness.run_proximity_benchmark(
            lines, pairs, args.budget, trial_cfg)
        all_summaries.append(harness.summarize(records))
    harness.save_run(args.out, records, all_summaries[-1],
                     extra={"trials": all_summaries,
                            "proxy": harness.proxy_preservation(records)})
    print(json.dumps(all_summaries[-1]))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coocpoison",
                                 description="word-embedding corpus-poisoning toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vocab", help="build a vocabulary from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-count", type=int, default=0)
    p.add_argument("--max-vocab", type=int, default=None)
    p.add_argument("--no-lowercase", action="store_true")
    p.set_defaults(func=cmd_vocab)

    p = sub.add_parser("cooc", help="count weighted cooccurrences")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--weighting", choices=[corpus_mod.HARMONIC, corpus_mod.LINEAR],
                   default=corpus_mod.HARMONIC)
    p.set_defaults(func=cmd_cooc)

    p = sub.add_parser("distmat", help="bias terms or matrix entries")
    _add_cooc_args(p)
    _add_kind_args(p)
    p.add_argument("--pairs", help="optional 'u v' pairs to evaluate entries for")
    p.add_argument("--out")
    p.set_defaults(func=cmd_distmat)

    p = sub.add_parser("proximity", help="distributional proximity of word pairs")
    _add_cooc_args(p)
    _add_kind_args(p)
    p.add_argument("--expr", choices=proximity.EXPRESSIONS, required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_proximity)

    p = sub.add_parser("attack", help="solve for a cooccurrence change vector")
    _add_cooc_args(p)
    _add_kind_args(p)
    p.add_argument("--spec", required=True, help="attack spec file (key=value)")
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--vectors", help="pretrained vectors (rank mode)")
    p.add_argument("--deletions", action="store_true")
    p.add_argument("--new-word", action="store_true",
                   help="source word is made up; estimate its bias")
    p.add_argument("--lam", type=int, default=5)
    p.add_argument("--hard-cap", type=float, default=solver.DEFAULT_HARD_CAP)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("place", help="turn a change vector into corpus edits")
    p.add_argument("--changevec", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--lambda", dest="lam", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weighting", choices=[corpus_mod.HARMONIC, corpus_mod.LINEAR],
                   default=corpus_mod.HARMONIC)
    p.add_argument("--window", type=int, default=5, help="for locating deletion events")
    p.add_argument("--corpus", help="needed when the change vector has deletions")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("inject", help="apply a change set to a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--changeset", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vocab", help="for sampling flip replacements")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("train", help="train the compact embedding")
    _add_cooc_args(p)
    p.add_argument("--dim", type=int, default=50)
    p.add_argument("--xmax", type=float, default=10.0)
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hogwild", action="store_true",
                   help="parallel nondeterministic updates")
    p.add_argument("--out", required=True)
    p.add_argument("--bias-out")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evade", help="perplexity-aware sequence construction")
    p.add_argument("--changevec", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--strategy", choices=["plain", "and-strict", "and-lenient", "lambda-gram"],
                   required=True)
    p.add_argument("--penalty", type=float, default=-1.0)
    p.add_argument("--lambda", dest="lam", type=int, default=5)
    p.add_argument("--weighting", choices=[corpus_mod.HARMONIC, corpus_mod.LINEAR],
                   default=corpus_mod.HARMONIC)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corpus", help="needed for lambda-gram")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evade)

    p = sub.add_parser("defend", help="perplexity filtering defense")
    p.add_argument("--corpus", required=True)
    p.add_argument("--quantile", type=float, default=0.5)
    p.add_argument("--scorer", default="builtin", help="'builtin' or 'file:PATH'")
    p.add_argument("--reference", help="reference corpus for the builtin scorer")
    p.add_argument("--smoothing", type=float, default=0.1)
    p.add_argument("--attack-lines", help="file of attack line indices for the report")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_defend)

    p = sub.add_parser("bench", help="benchmark attacks end to end")
    p.add_argument("--corpus", required=True)
    p.add_argument("--pairs", required=True, help="one 's t' pair per line")
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--lam", type=int, default=5)
    p.add_argument("--max-vocab", type=int, default=400_000)
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--kind", choices=[distmat.SPPMI, distmat.BIAS, distmat.LCO],
                   default=distmat.BIAS)
    p.add_argument("--expr", choices=proximity.EXPRESSIONS, default=proximity.COS12)
    p.add_argument("--dim", type=int, default=50)
    p.add_argument("--xmax", type=float, default=10.0)
    p.add_argument("--epochs", type=int, default=15)
    p.add_argument("--lr", type=float, default=0.05)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
