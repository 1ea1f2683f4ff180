"""Turning a cooccurrence change vector into concrete corpus edits.

Additions come in two shapes: first-order sequences ("s t" pairs, one per
gamma(1) of mass toward a positive target) and second-order sequences of up
to 2*lam+1 tokens with the source word central. Second-order packing places
each word at the open slot whose weight most tightly fits the remaining mass;
slots open contiguously outward from the source so that emitted sequences
realize exactly the distances they were packed for. Deletions are realized as
word flips at recorded corpus locations.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Dictionary, tokenize, weight_values
from .errors import ApplicationError, ConfigError
from .proximity import COS1, COS12, AttackSpec
from .solver import ChangeVector

PLAIN_SLOTS = None  # payload at every distance 1..lam


@dataclass
class Flip:
    """Replace the token at (line, offset) to erase its cooccurrence events
    with the source word; gamma_mass is the weight of the erased events."""

    line: int
    offset: int
    replacement: str | None = None
    gamma_mass: float = 0.0


@dataclass
class ChangeSet:
    """Concrete corpus edits realizing a change vector."""

    additions: list[list[str]]
    flips: list[Flip] = field(default_factory=list)
    source_word: str = ""
    excluded_words: tuple[str, ...] = ()
    uncounted_words: frozenset = frozenset()
    beta: float = 1.0

    def addition_size(self) -> int:
        """max(number of added sequences, peak added count of a single word),
        words in ``uncounted_words`` not counted."""
        counts: dict[str, int] = {}
        for seq in self.additions:
            for tok in seq:
                if tok not in self.uncounted_words:
                    counts[tok] = counts.get(tok, 0) + 1
        peak = max(counts.values()) if counts else 0
        return max(len(self.additions), peak)

    def flip_mass(self) -> float:
        return float(sum(f.gamma_mass for f in self.flips))

    def size(self) -> float:
        return self.addition_size() + self.beta * self.flip_mass()


def min_sequences_required(total_mass: float, lam: int, weighting: str) -> int:
    """Second-order sequence count to instantiate for a given total mass."""
    side = float(weight_values(weighting, lam).sum())
    return int(math.ceil(total_mass / side)) if total_mass > 0 else 0


def place_first_order(s_word: str, t_word: str, mass: float, gamma1: float = 1.0) -> list[list[str]]:
    """ceil(mass / gamma(1)) two-token sequences "s t"."""
    if mass <= 0:
        return []
    return [[s_word, t_word] for _ in range(int(math.ceil(mass / gamma1)))]


class _Side:
    """One half of a second-order sequence; slots open outward from the
    source, so slot k carries payload distance payload_dists[k]."""

    __slots__ = ("words",)

    def __init__(self):
        self.words: list[str] = []


class _Packer:
    """Tightest-fit packing of word masses into sequence slots.

    payload_dists are the distances (1-based offsets from the source) that
    carry payload words; other positions up to the outermost used payload
    distance are filled with the connector token at emission.
    """

    def __init__(self, lam: int, weighting: str, payload_dists: Sequence[int] | None, connector: str | None):
        self.lam = lam
        gamma_all = weight_values(weighting, lam)
        self.payload_dists = list(payload_dists) if payload_dists is not None else list(range(1, lam + 1))
        self.gammas = [float(gamma_all[d - 1]) for d in self.payload_dists]
        self.connector = connector
        self.side_capacity = float(sum(self.gammas))
        self.sequences: list[tuple[_Side, _Side]] = []
        # avail[k]: sides whose next open payload slot is index k (FIFO)
        self.avail: list[deque] = [deque() for _ in self.payload_dists]

    def spawn(self, n: int) -> None:
        for _ in range(n):
            pair = (_Side(), _Side())
            self.sequences.append(pair)
            self.avail[0].append(pair[0])
            self.avail[0].append(pair[1])

    def place_word(self, word: str, remaining: float) -> float:
        """Put one occurrence of the word at the best open slot; returns the
        gamma mass it contributes. 0.0 means leaving the remainder uncovered
        fits more tightly than any open slot."""
        best_k = None
        best_err = None
        for k, g in enumerate(self.gammas):
            if not self.avail[k]:
                continue
            err = abs(g - remaining)
            if best_err is None or err < best_err:
                best_err = err
                best_k = k
        if best_k is None:
            self.spawn(1)
            best_k = 0
            best_err = abs(self.gammas[0] - remaining)
        if best_err >= remaining:
            return 0.0
        side = self.avail[best_k].popleft()
        side.words.append(word)
        if best_k + 1 < len(self.gammas):
            self.avail[best_k + 1].append(side)
        return self.gammas[best_k]

    def pack(self, entries: Iterable[tuple[str, float]]) -> dict[str, float]:
        """Pack all (word, mass) entries, largest first; returns contributed
        gamma mass per word."""
        order = sorted(entries, key=lambda kv: (-kv[1], kv[0]))
        total = sum(m for _, m in order if m > 0)
        self.spawn(int(math.ceil(total / self.side_capacity)) if total > 0 else 0)
        contributed: dict[str, float] = {}
        for word, mass in order:
            if mass <= 0:
                raise ConfigError("second-order masses must be positive")
            rem = mass
            got = 0.0
            while rem > 0:
                g = self.place_word(word, rem)
                if g == 0.0:
                    break
                got += g
                rem -= g
            contributed[word] = got
        return contributed

    def _emit_side(self, side: _Side) -> list[str]:
        out: list[str] = []
        for k, word in enumerate(side.words):
            target = self.payload_dists[k]
            while len(out) + 1 < target:
                out.append(self.connector)
            out.append(word)
        return out

    def emit(self, s_word: str) -> list[list[str]]:
        """Token sequences, source central, empty sequences dropped."""
        out = []
        for left, right in self.sequences:
            if not left.words and not right.words:
                continue
            lt = self._emit_side(left)
            rt = self._emit_side(right)
            out.append(list(reversed(lt)) + [s_word] + rt)
        return out


def place_second_order(
    entries: dict[int, float],
    s_word: str,
    words: Sequence[str],
    lam: int,
    weighting: str,
    rng: np.random.Generator | None = None,
    fill: str = "residual",
    payload_dists: Sequence[int] | None = None,
    connector: str | None = None,
) -> tuple[list[list[str]], dict[str, float]]:
    """Pack positive second-order masses into sequences around the source.

    Returns (sequences, contributed mass per word). ``fill`` controls what
    happens to open slots after packing: "residual" fills proportionally to
    any uncovered mass (normally nothing), "uniform" mimics filling with
    uniformly chosen change-vector words, "none" leaves them open.
    """
    packer = _Packer(lam, weighting, payload_dists, connector)
    named = [(words[i], m) for i, m in sorted(entries.items())]
    contributed = packer.pack(named)
    if fill != "none" and named:
        residual = {w: m - contributed.get(w, 0.0) for w, m in named}
        pool = [w for w, r in residual.items() if r > 0] if fill == "residual" else [w for w, _ in named]
        weights = np.array([max(residual[w], 0.0) for w in pool]) if fill == "residual" else None
        if pool and (weights is None or weights.sum() > 0):
            if rng is None:
                rng = np.random.default_rng(0)
            p = weights / weights.sum() if weights is not None else None
            while any(packer.avail[k] for k in range(len(packer.gammas))):
                w = str(rng.choice(pool, p=p))
                got = packer.place_word(w, residual.get(w, 0.0) if fill == "residual" else packer.gammas[0])
                if got == 0.0:
                    break
                contributed[w] = contributed.get(w, 0.0) + got
                if fill == "residual":
                    residual[w] -= got
                    pool = [w2 for w2, r in residual.items() if r > 0]
                    if not pool:
                        break
                    weights = np.array([residual[w2] for w2 in pool])
                    p = weights / weights.sum()
    return packer.emit(s_word), contributed


def place(
    change: ChangeVector,
    spec: AttackSpec,
    dictionary: Dictionary,
    lam: int = 5,
    weighting: str = "harmonic",
    seed: int = 0,
    lines: Sequence[str] | None = None,
    window: int | None = None,
    fill: str = "residual",
) -> ChangeSet:
    """Realize a change vector as corpus edits.

    Positive-target entries become first-order sequences when the objective
    has a first-order component; everything else is packed into second-order
    sequences. Negative entries require the corpus lines and become word
    flips."""
    rng = np.random.default_rng(seed)
    gamma = weight_values(weighting, lam)
    s_word = dictionary.word_of(change.source)
    first_order_ids = set(spec.pos) if spec.expr in (COS1, COS12) else set()

    additions: list[list[str]] = []
    second: dict[int, float] = {}
    negatives: dict[str, float] = {}
    for i, mass in sorted(change.entries.items()):
        if mass < 0:
            negatives[dictionary.word_of(i)] = -mass
        elif i in first_order_ids:
            additions.extend(place_first_order(s_word, dictionary.word_of(i), mass, float(gamma[0])))
        elif mass > 0:
            second[i] = mass
    seqs, _ = place_second_order(
        second, s_word, dictionary.words, lam, weighting, rng=rng, fill=fill
    )
    additions.extend(seqs)

    excluded = tuple(dictionary.word_of(t) for t in spec.targets)
    flips: list[Flip] = []
    if negatives:
        if lines is None:
            raise ConfigError("deletion entries require the corpus lines to locate events")
        flips, _ = find_deletion_events(
            lines, s_word, negatives, window or lam, weighting
        )
        pool = [w for w in dictionary.words if w != s_word and w not in excluded]
        for f in flips:
            f.replacement = pool[int(rng.integers(len(pool)))]
    return ChangeSet(
        additions=additions,
        flips=flips,
        source_word=s_word,
        excluded_words=excluded,
        beta=spec.beta,
    )


def find_deletion_events(
    lines: Iterable[str],
    s_word: str,
    negatives: dict[str, float],
    window: int,
    weighting: str,
    lowercase: bool = True,
) -> tuple[list[Flip], dict[str, float]]:
    """Greedy corpus scan collecting cooccurrence events between the source
    and flip-marked words until each negative entry's magnitude is covered.
    Returns the flips and any uncovered residual mass."""
    gamma = weight_values(weighting, window)
    residual = dict(negatives)
    flips: list[Flip] = []
    for ln, line in enumerate(lines):
        if not any(r > 0 for r in residual.values()):
            break
        toks = tokenize(line, lowercase)
        if s_word not in toks:
            continue
        s_positions = [k for k, t in enumerate(toks) if t == s_word]
        for j, tok in enumerate(toks):
            if tok == s_word:
                continue
            need = residual.get(tok, 0.0)
            if need <= 0:
                continue
            mass = 0.0
            for i in s_positions:
                d = abs(i - j)
                if 1 <= d <= window:
                    mass += float(gamma[d - 1])
            if mass > 0:
                flips.append(Flip(ln, j, None, mass))
                residual[tok] = need - mass
    return flips, {w: r for w, r in residual.items() if r > 0}


def apply(
    lines: Sequence[str],
    changeset: ChangeSet,
    seed: int = 0,
    dictionary: Dictionary | None = None,
) -> list[str]:
    """Apply flips, add each addition on its own line, and shuffle all lines
    deterministically under the seed. Flips without a preset replacement draw
    a uniformly random vocabulary word excluding the source and targets."""
    rng = np.random.default_rng(seed)
    out = list(lines)
    pool: list[str] | None = None
    for f in changeset.flips:
        if f.line < 0 or f.line >= len(out):
            raise ApplicationError(f"flip line {f.line} out of range")
        toks = out[f.line].split()
        if f.offset < 0 or f.offset >= len(toks):
            raise ApplicationError(f"flip offset {f.line}:{f.offset} out of range")
        repl = f.replacement
        if repl is None:
            if dictionary is None:
                raise ApplicationError("flip has no replacement and no vocabulary to draw from")
            if pool is None:
                banned = {changeset.source_word, *changeset.excluded_words}
                pool = [w for w in dictionary.words if w not in banned]
            repl = pool[int(rng.integers(len(pool)))]
        toks[f.offset] = repl
        out[f.line] = " ".join(toks)
    out.extend(" ".join(seq) for seq in changeset.additions)
    perm = rng.permutation(len(out))
    return [out[k] for k in perm]


# ---------------------------------------------------------------------------
# changeset file format


def save_changeset(changeset: ChangeSet, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# source {changeset.source_word}\n")
        if changeset.excluded_words:
            f.write("# exclude " + ",".join(changeset.excluded_words) + "\n")
        if changeset.uncounted_words:
            f.write("# uncount " + ",".join(sorted(changeset.uncounted_words)) + "\n")
        f.write(f"# beta {changeset.beta}\n")
        for seq in changeset.additions:
            f.write("+ " + " ".join(seq) + "\n")
        for fl in changeset.flips:
            repl = fl.replacement if fl.replacement is not None else "?"
            f.write(f"~ {fl.line}:{fl.offset}:{repl}:{fl.gamma_mass:.17g}\n")


def load_changeset(path: str) -> ChangeSet:
    additions: list[list[str]] = []
    flips: list[Flip] = []
    source = ""
    excluded: tuple[str, ...] = ()
    uncounted: frozenset = frozenset()
    beta = 1.0
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if line.startswith("# source "):
                source = line[len("# source "):]
            elif line.startswith("# exclude "):
                excluded = tuple(line[len("# exclude "):].split(","))
            elif line.startswith("# uncount "):
                uncounted = frozenset(line[len("# uncount "):].split(","))
            elif line.startswith("# beta "):
                beta = float(line[len("# beta "):])
            elif line.startswith("+ "):
                additions.append(line[2:].split())
            elif line.startswith("~ "):
                ln, off, repl, mass = line[2:].split(":")
                flips.append(
                    Flip(int(ln), int(off), None if repl == "?" else repl, float(mass))
                )
    return ChangeSet(additions, flips, source, excluded, uncounted, beta)
