"""Run enabled metrics over a corpus and assemble a :class:`MetricReport`.

Per-sentence metrics score the hypothesis against every reference, keep the
maximum, then average over the corpus. Corpus BLEU pools n-gram counts
instead and is reported in its own section.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .corpus import Corpus, EmbeddingTable, EvalInstance, SentenceVectorTable
from .embeddings import embedding_metric_score, skip_vector_similarity
from .overlap import (SMOOTHING_ADD_ONE, SMOOTHING_NONE, BleuConfig, MeteorConfig,
                      RougeConfig, corpus_bleu, meteor, rouge_l, sentence_bleu_flagged)
from .text import tokenize

SCHEMA_VERSION = 1

FAMILIES = ("bleu", "meteor", "rouge_l", "skipthought", "average", "extrema", "greedy")
EMBEDDING_FAMILIES = ("average", "extrema", "greedy")
BLEU_ORDERS = (1, 2, 3, 4)


class ConfigError(ValueError):
    """The requested metrics cannot run with the supplied inputs."""


def metric_names(families: Iterable[str]) -> list[str]:
    """Expand metric families into per-instance metric names, in canonical order."""
    families = set(families)
    unknown = families - set(FAMILIES)
    if unknown:
        raise ConfigError(f"unknown metrics: {', '.join(sorted(unknown))}")
    names = []
    for fam in FAMILIES:
        if fam not in families:
            continue
        if fam == "bleu":
            names.extend(f"bleu{n}" for n in BLEU_ORDERS)
        else:
            names.append(fam)
    return names


def hyp_vector_id(instance_id: str) -> str:
    return f"{instance_id}:hyp"


def ref_vector_id(instance_id: str, k: int) -> str:
    return f"{instance_id}:ref{k}"


@dataclass(frozen=True)
class EvalConfig:
    metrics: tuple[str, ...] = ("bleu", "meteor", "rouge_l")
    lowercase: bool = True
    sentence_bleu_smoothing: str = SMOOTHING_ADD_ONE
    corpus_bleu_smoothing: str = SMOOTHING_NONE
    meteor: MeteorConfig = MeteorConfig()
    rouge: RougeConfig = RougeConfig()

    def echo(self) -> dict:
        m = self.meteor
        return {
            "metrics": sorted(self.metrics),
            "lowercase": self.lowercase,
            "bleu": {"sentence_smoothing": self.sentence_bleu_smoothing,
                     "corpus_smoothing": self.corpus_bleu_smoothing,
                     "weights": "uniform"},
            "meteor": {"recall_weight": m.recall_weight, "gamma": m.penalty_gamma,
                       "theta": m.penalty_theta, "stages": list(m.stages),
                       "synonym_lexicon": m.lexicon is not None},
            "rouge": {"beta": self.rouge.beta},
        }


@dataclass
class MetricReport:
    metrics: list[str]
    per_instance: list[tuple[str, dict[str, tuple[float, bool]]]]
    corpus_level: dict[str, float | None]
    corpus_bleu: dict[str, float | None]
    undefined: dict[str, int]
    config: dict = field(default_factory=dict)

    def scores(self, metric: str) -> dict[str, float | None]:
        """Per-instance values of one metric, None where undefined."""
        return {iid: (s[metric][0] if s[metric][1] else None) for iid, s in self.per_instance}

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "metrics": self.metrics,
            "corpus_level": self.corpus_level,
            "corpus_bleu": self.corpus_bleu,
            "undefined": self.undefined,
            "per_instance": [
                {"id": iid, "scores": {m: {"score": v, "defined": d}
                                       for m, (v, d) in scores.items()}}
                for iid, scores in self.per_instance],
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=False)

    @classmethod
    def from_dict(cls, data: dict) -> MetricReport:
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema_version {data.get('schema_version')!r}")
        per_instance = [(rec["id"], {m: (v["score"], v["defined"])
                                     for m, v in rec["scores"].items()})
                        for rec in data["per_instance"]]
        return cls(list(data["metrics"]), per_instance, dict(data["corpus_level"]),
                   dict(data.get("corpus_bleu", {})), dict(data.get("undefined", {})),
                   dict(data.get("config", {})))


def _score_instance(inst: EvalInstance, names: Sequence[str], cfg: EvalConfig,
                    embeddings: EmbeddingTable | None,
                    sentvecs: SentenceVectorTable | None) -> dict[str, tuple[float, bool]]:
    hyp = tokenize(inst.hypothesis, cfg.lowercase)
    refs = [tokenize(r, cfg.lowercase) for r in inst.references]
    out: dict[str, tuple[float, bool]] = {}
    for name in names:
        if name.startswith("bleu"):
            bcfg = BleuConfig(max_n=int(name[4:]), smoothing=cfg.sentence_bleu_smoothing)
            out[name] = sentence_bleu_flagged(hyp, refs, bcfg)
        elif name == "meteor":
            out[name] = (meteor(hyp, refs, cfg.meteor), True)
        elif name == "rouge_l":
            out[name] = (rouge_l(hyp, refs, cfg.rouge), True)
        elif name == "skipthought":
            s = skip_vector_similarity(hyp_vector_id(inst.id),
                                       [ref_vector_id(inst.id, k) for k in range(len(refs))],
                                       sentvecs)
            out[name] = (s.value, s.defined)
        else:
            s = embedding_metric_score(hyp, refs, embeddings, name)
            out[name] = (s.value, s.defined)
    return out


def evaluate(corpus: Corpus, cfg: EvalConfig = EvalConfig(),
             embeddings: EmbeddingTable | None = None,
             sentvecs: SentenceVectorTable | None = None,
             threads: int = 1) -> MetricReport:
    """Score every instance with the enabled metrics and aggregate.

    Output does not depend on ``threads``: results are collected in corpus
    order and summed in that order.
    """
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    names = metric_names(cfg.metrics)
    if embeddings is None and any(f in cfg.metrics for f in EMBEDDING_FAMILIES):
        raise ConfigError("embedding metrics require a word embedding table")
    if sentvecs is None and "skipthought" in cfg.metrics:
        raise ConfigError("skipthought requires a sentence vector table")

    def work(inst):
        return _score_instance(inst, names, cfg, embeddings, sentvecs)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, corpus))
    else:
        results = [work(inst) for inst in corpus]

    corpus_level: dict[str, float | None] = {}
    undefined: dict[str, int] = {}
    for name in names:
        vals = [r[name][0] for r in results if r[name][1]]
        undefined[name] = len(results) - len(vals)
        corpus_level[name] = math.fsum(vals) / len(vals) if vals else None

    pooled: dict[str, float | None] = {}
    if "bleu" in cfg.metrics:
        hyps = [tokenize(i.hypothesis, cfg.lowercase) for i in corpus]
        refs = [[tokenize(r, cfg.lowercase) for r in i.references] for i in corpus]
        for n in BLEU_ORDERS:
            try:
                pooled[f"bleu{n}"] = corpus_bleu(
                    hyps, refs, BleuConfig(max_n=n, smoothing=cfg.corpus_bleu_smoothing))
            except ValueError:
                pooled[f"bleu{n}"] = None  # every hypothesis empty

    return MetricReport(names, [(inst.id, r) for inst, r in zip(corpus, results)],
                        corpus_level, pooled, undefined, cfg.echo())
