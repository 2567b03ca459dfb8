"""Embedding-based sentence similarity: average, vector extrema, greedy matching.

Scores carry a ``defined`` flag. A score is undefined (value 0.0) when one
side has no in-vocabulary tokens, so callers can drop such rows instead of
mistaking them for zero similarity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import DataError, EmbeddingTable, SentenceVectorTable

KINDS = ("average", "extrema", "greedy")


@dataclass(frozen=True)
class SimilarityScore:
    value: float
    defined: bool = True

    @classmethod
    def undefined(cls) -> SimilarityScore:
        return cls(0.0, False)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity, 0.0 when either vector has zero norm."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = math.sqrt(float(u @ u)), math.sqrt(float(v @ v))
    if nu == 0 or nv == 0:
        return 0.0
    return max(-1.0, min(1.0, float(u @ v) / (nu * nv)))


def _known_vectors(seq: Sequence[str], table: EmbeddingTable) -> np.ndarray:
    vecs = [table[w] for w in seq if w in table]
    if not vecs:
        return np.zeros((0, table.dim))
    return np.array(vecs)


def embedding_average(seq: Sequence[str], table: EmbeddingTable) -> tuple[np.ndarray, bool]:
    """Sum of word vectors scaled to unit length; OOV words are skipped.

    Returns ``(vector, defined)``; the vector is zero and ``defined`` False
    when nothing is in vocabulary or the sum vanishes.
    """
    vecs = _known_vectors(seq, table)
    total = vecs.sum(axis=0)
    norm = math.sqrt(float(total @ total))
    if len(vecs) == 0 or norm == 0:
        return np.zeros(table.dim), False
    return total / norm, True


def vector_extrema(seq: Sequence[str], table: EmbeddingTable) -> tuple[np.ndarray, bool]:
    """Per dimension, the max if it exceeds |min|, else the min (ties: max)."""
    vecs = _known_vectors(seq, table)
    if len(vecs) == 0:
        return np.zeros(table.dim), False
    hi, lo = vecs.max(axis=0), vecs.min(axis=0)
    return np.where(hi >= np.abs(lo), hi, lo), True


def _directed_greedy(sims: np.ndarray, n_rows: int) -> float:
    # sims: known-row x known-col cosine matrix; OOV rows add 0 but stay in the mean
    return float(sims.max(axis=1).sum() / n_rows)


def greedy_matching(hyp: Sequence[str], ref: Sequence[str],
                    table: EmbeddingTable) -> SimilarityScore:
    h = _known_vectors(hyp, table)
    r = _known_vectors(ref, table)
    if len(h) == 0 or len(r) == 0:
        return SimilarityScore.undefined()
    hn = np.linalg.norm(h, axis=1, keepdims=True)
    rn = np.linalg.norm(r, axis=1, keepdims=True)
    hu = np.divide(h, hn, out=np.zeros_like(h), where=hn > 0)
    ru = np.divide(r, rn, out=np.zeros_like(r), where=rn > 0)
    sims = np.clip(hu @ ru.T, -1.0, 1.0)
    g_hr = _directed_greedy(sims, len(hyp))
    g_rh = _directed_greedy(sims.T, len(ref))
    return SimilarityScore((g_hr + g_rh) / 2.0, True)


_SENTENCE_VECTOR = {"average": embedding_average, "extrema": vector_extrema}


def _pairwise(hyp, ref, table, kind: str) -> SimilarityScore:
    if kind == "greedy":
        return greedy_matching(hyp, ref, table)
    fn = _SENTENCE_VECTOR[kind]
    u, du = fn(hyp, table)
    v, dv = fn(ref, table)
    if not (du and dv):
        return SimilarityScore.undefined()
    return SimilarityScore(cosine(u, v), True)


def best_defined(scores: Sequence[SimilarityScore]) -> SimilarityScore:
    defined = [s.value for s in scores if s.defined]
    if not defined:
        return SimilarityScore.undefined()
    return SimilarityScore(max(defined), True)


def embedding_metric_score(hyp: Sequence[str], refs: Sequence[Sequence[str]],
                           table: EmbeddingTable, kind: str) -> SimilarityScore:
    """Similarity of ``hyp`` against each reference, max over defined ones."""
    if kind not in KINDS:
        raise ValueError(f"unknown embedding metric {kind!r}")
    if not refs:
        raise ValueError("at least one reference is required")
    return best_defined([_pairwise(hyp, ref, table, kind) for ref in refs])


def skip_vector_similarity(hyp_id: str, ref_ids: Sequence[str],
                           table: SentenceVectorTable) -> SimilarityScore:
    """Max cosine between precomputed sentence vectors."""
    if not ref_ids:
        raise ValueError("at least one reference id is required")
    for key in (hyp_id, *ref_ids):
        if key not in table:
            raise DataError(f"missing sentence vector for id {key!r}")
    h = table[hyp_id]
    return SimilarityScore(max(cosine(h, table[r]) for r in ref_ids), True)
