"""Word-overlap metrics: BLEU (corpus and sentence level), METEOR and ROUGE-L.

Every function takes already-tokenized sequences (see :func:`nlgm.text.tokenize`).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .text import SynonymLexicon, lcs_length, ngrams, stem, synonym_match

SMOOTHING_NONE = "none"
SMOOTHING_ADD_ONE = "add-one"


@dataclass(frozen=True)
class BleuConfig:
    max_n: int = 4
    weights: tuple[float, ...] | None = None
    smoothing: str = SMOOTHING_NONE

    def __post_init__(self):
        if not 1 <= self.max_n <= 4:
            raise ValueError(f"max_n must be in [1, 4], got {self.max_n}")
        if self.weights is None:
            object.__setattr__(self, "weights", (1.0 / self.max_n,) * self.max_n)
        if len(self.weights) != self.max_n:
            raise ValueError("need exactly one weight per n-gram order")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError("BLEU weights must be non-negative and sum to 1")
        if self.smoothing not in (SMOOTHING_NONE, SMOOTHING_ADD_ONE):
            raise ValueError(f"unknown smoothing {self.smoothing!r}")


@dataclass(frozen=True)
class MeteorConfig:
    recall_weight: float = 9.0
    penalty_gamma: float = 0.5
    penalty_theta: float = 3.0
    stages: tuple[str, ...] = ("exact", "stem", "synonym")
    lexicon: SynonymLexicon | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.recall_weight <= 0:
            raise ValueError("recall_weight must be positive")
        if not 0 <= self.penalty_gamma <= 1:
            raise ValueError("penalty_gamma must lie in [0, 1]")
        if self.penalty_theta <= 0:
            raise ValueError("penalty_theta must be positive")
        unknown = set(self.stages) - {"exact", "stem", "synonym"}
        if unknown:
            raise ValueError(f"unknown METEOR stages {sorted(unknown)}")

    @property
    def alpha(self) -> float:
        return self.recall_weight / (self.recall_weight + 1.0)


@dataclass(frozen=True)
class RougeConfig:
    beta: float = 1.2

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")


# -- BLEU -----------------------------------------------------------------------

def _closest_ref_length(hyp_len: int, refs: Sequence[Sequence[str]]) -> int:
    # ties go to the shorter reference
    return min((len(r) for r in refs), key=lambda n: (abs(n - hyp_len), n))


def _clipped_counts(hyp: Sequence[str], refs: Sequence[Sequence[str]], max_n: int):
    """Per-order (matches, total) with clipping at the max count over references."""
    stats = []
    for n in range(1, max_n + 1):
        hyp_counts = ngrams(hyp, n)
        if len(refs) == 1:
            max_ref = ngrams(refs[0], n)
        else:
            max_ref = Counter()
            for ref in refs:
                max_ref |= ngrams(ref, n)
        matches = sum(min(c, max_ref[g]) for g, c in hyp_counts.items())
        stats.append((matches, max(len(hyp) - n + 1, 0)))
    return stats


def _bleu_from_stats(stats, hyp_len: int, ref_len: int, cfg: BleuConfig) -> float:
    log_sum = 0.0
    for n, ((matches, total), w) in enumerate(zip(stats, cfg.weights), start=1):
        if cfg.smoothing == SMOOTHING_ADD_ONE and n >= 2:
            matches, total = matches + 1, total + 1
        if total == 0:
            # no hypothesis n-grams of this order: neutral factor
            continue
        if matches == 0:
            return 0.0
        if w > 0:
            log_sum += w * math.log(matches / total)
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return min(1.0, bp * math.exp(log_sum))


def corpus_bleu(hyps: Sequence[Sequence[str]], refs: Sequence[Sequence[Sequence[str]]],
                cfg: BleuConfig = BleuConfig()) -> float:
    """Corpus BLEU with n-gram statistics pooled over all instances.

    ``refs[i]`` holds every reference of instance ``i``; clipping uses the
    maximum count over those references and the effective reference length
    is the closest one (ties: shorter).
    """
    if len(hyps) == 0:
        raise ValueError("empty corpus")
    if len(hyps) != len(refs):
        raise ValueError("hypotheses and reference lists differ in length")
    pooled = [[0, 0] for _ in range(cfg.max_n)]
    c = r = 0
    for hyp, inst_refs in zip(hyps, refs):
        if not inst_refs:
            raise ValueError("instance without references")
        for acc, (m, t) in zip(pooled, _clipped_counts(hyp, inst_refs, cfg.max_n)):
            acc[0] += m
            acc[1] += t
        c += len(hyp)
        r += _closest_ref_length(len(hyp), inst_refs)
    if c == 0:
        raise ValueError("all hypotheses are empty")
    return _bleu_from_stats(pooled, c, r, cfg)


def _single_ref_bleu(hyp: Sequence[str], ref: Sequence[str], cfg: BleuConfig) -> float:
    return _bleu_from_stats(_clipped_counts(hyp, [ref], cfg.max_n), len(hyp), len(ref), cfg)


def sentence_bleu(hyp: Sequence[str], refs: Sequence[Sequence[str]],
                  cfg: BleuConfig = BleuConfig()) -> float:
    """Sentence BLEU, scored against each reference separately; the max is kept.

    An empty hypothesis scores 0.0 (see :func:`sentence_bleu_flagged`).
    """
    return sentence_bleu_flagged(hyp, refs, cfg)[0]


def sentence_bleu_flagged(hyp, refs, cfg: BleuConfig = BleuConfig()) -> tuple[float, bool]:
    """Like :func:`sentence_bleu` but also returns False when the hypothesis was empty."""
    if not refs:
        raise ValueError("at least one reference is required")
    if not hyp:
        return 0.0, False
    return max(_single_ref_bleu(hyp, ref, cfg) for ref in refs), True


# -- METEOR ---------------------------------------------------------------------

def _stage_match(stage: str, a: str, b: str, lex: SynonymLexicon | None) -> bool:
    if stage == "exact":
        return a == b
    if stage == "stem":
        return stem(a) == stem(b)
    return synonym_match(a, b, lex)


def meteor_alignment(hyp: Sequence[str], ref: Sequence[str],
                     cfg: MeteorConfig = MeteorConfig()) -> list[tuple[int, int]]:
    """Greedy staged unigram alignment as sorted (hyp index, ref index) pairs.

    Stages run in order; within a stage each unmatched hypothesis token, left
    to right, takes the leftmost unmatched reference token it matches.
    """
    hyp_free = [True] * len(hyp)
    ref_free = [True] * len(ref)
    pairs = []
    for stage in cfg.stages:
        if stage == "synonym" and cfg.lexicon is None:
            continue
        for i, h in enumerate(hyp):
            if not hyp_free[i]:
                continue
            for j, r in enumerate(ref):
                if ref_free[j] and _stage_match(stage, h, r, cfg.lexicon):
                    hyp_free[i] = ref_free[j] = False
                    pairs.append((i, j))
                    break
    return sorted(pairs)


def count_chunks(pairs: Sequence[tuple[int, int]]) -> int:
    """Number of maximal runs adjacent in both hypothesis and reference."""
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def _meteor_single(hyp, ref, cfg: MeteorConfig) -> float:
    pairs = meteor_alignment(hyp, ref, cfg)
    m = len(pairs)
    if m == 0:
        return 0.0
    precision, recall = m / len(hyp), m / len(ref)
    a = cfg.alpha
    f_mean = precision * recall / (a * precision + (1 - a) * recall)
    penalty = cfg.penalty_gamma * (count_chunks(pairs) / m) ** cfg.penalty_theta
    return f_mean * (1.0 - penalty)


def meteor(hyp: Sequence[str], refs: Sequence[Sequence[str]],
           cfg: MeteorConfig = MeteorConfig()) -> float:
    if not refs:
        raise ValueError("at least one reference is required")
    return max(_meteor_single(hyp, ref, cfg) for ref in refs)


# -- ROUGE-L --------------------------------------------------------------------

def _rouge_single(hyp, ref, beta: float) -> float:
    if not hyp or not ref:
        return 0.0
    lcs = lcs_length(hyp, ref)
    if lcs == 0:
        return 0.0
    p, r = lcs / len(hyp), lcs / len(ref)
    b2 = beta * beta
    return (1 + b2) * p * r / (r + b2 * p)


def rouge_l(hyp: Sequence[str], refs: Sequence[Sequence[str]],
            cfg: RougeConfig = RougeConfig()) -> float:
    """LCS-based F-measure, max over references."""
    if not refs:
        raise ValueError("at least one reference is required")
    return max(_rouge_single(hyp, ref, cfg.beta) for ref in refs)
