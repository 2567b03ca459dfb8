"""Command-line entry point: ``nlgm score|correlate|kappa|baseline|scatter``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import zlib
from typing import Sequence

import numpy as np

from . import dialogue, stats
from .aggregation import FAMILIES, ConfigError, EvalConfig, MetricReport, evaluate
from .corpus import (DataError, EvalInstance, instance_to_json, load_corpus_jsonl,
                     load_corpus_parallel, load_embeddings, load_ratings,
                     load_sentence_vectors)
from .overlap import SMOOTHING_ADD_ONE, SMOOTHING_NONE, MeteorConfig, RougeConfig
from .text import SynonymLexicon

log = logging.getLogger("nlgm")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
DEFAULT_BUCKETS = "0.1,0.2,0.3,0.4,0.5,0.6"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def rng_for(seed: int, consumer: str) -> np.random.Generator:
    """Independent generator per consumer, derived from the invocation seed."""
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(consumer.encode())]))


def _read(path: str) -> bytes:
    with open(path, "rb") as f:
        return f.read()


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _load_report(path: str) -> MetricReport:
    try:
        return MetricReport.from_dict(json.loads(_read(path).decode("utf-8")))
    except (json.JSONDecodeError, UnicodeDecodeError, KeyError, TypeError) as e:
        raise DataError(f"{path}: not a valid metric report ({e})") from None
    except ValueError as e:
        raise DataError(f"{path}: {e}") from None


def _threads(arg: int | None) -> int:
    if arg is not None:
        if arg < 1:
            raise UsageError("--threads must be >= 1")
        return arg
    env = os.environ.get("NLGM_THREADS")
    if not env:
        return 1
    try:
        return max(1, int(env))
    except ValueError:
        raise UsageError(f"NLGM_THREADS must be an integer, got {env!r}") from None


# -- score -----------------------------------------------------------------------

def cmd_score(args) -> int:
    families = [m.strip() for m in args.metrics.split(",") if m.strip()]
    if args.jsonl and (args.hyp or args.refs):
        raise UsageError("use either --jsonl or --hyp/--refs, not both")
    if not args.jsonl and not (args.hyp and args.refs):
        raise UsageError("need --jsonl FILE or --hyp FILE --refs FILE...")
    needs_emb = [f for f in families if f in ("average", "extrema", "greedy")]
    if needs_emb and not args.embeddings:
        raise UsageError(f"metrics {', '.join(needs_emb)} need --embeddings")
    if "skipthought" in families and not args.sentvecs:
        raise UsageError("metric skipthought needs --sentvecs")

    if args.jsonl:
        corpus = load_corpus_jsonl(_read(args.jsonl))
    else:
        corpus = load_corpus_parallel(_read(args.hyp), [_read(r) for r in args.refs])
    embeddings = load_embeddings(_read(args.embeddings)) if args.embeddings else None
    sentvecs = load_sentence_vectors(_read(args.sentvecs)) if args.sentvecs else None
    lexicon = SynonymLexicon.load(io.BytesIO(_read(args.synonyms))) if args.synonyms else None

    try:
        cfg = EvalConfig(
            metrics=tuple(families), lowercase=not args.no_lowercase,
            sentence_bleu_smoothing=args.bleu_smoothing,
            corpus_bleu_smoothing=args.corpus_bleu_smoothing,
            meteor=MeteorConfig(recall_weight=args.meteor_recall_weight,
                                penalty_gamma=args.meteor_gamma,
                                penalty_theta=args.meteor_theta, lexicon=lexicon),
            rouge=RougeConfig(beta=args.rouge_beta))
    except ValueError as e:
        raise UsageError(str(e)) from None
    report = evaluate(corpus, cfg, embeddings, sentvecs, threads=_threads(args.threads))
    if args.pretty:
        lines = [f"{'metric':<14}{'mean':>10}{'corpus':>10}{'undef':>7}"]
        for name in report.metrics:
            mean = report.corpus_level[name]
            pooled = report.corpus_bleu.get(name)
            lines.append(f"{name:<14}{_fmt(mean):>10}{_fmt(pooled):>10}"
                         f"{report.undefined[name]:>7}")
        _emit("\n".join(lines) + "\n", args.out)
    else:
        _emit(report.to_json() + "\n", args.out)
    return EXIT_OK


def _fmt(v) -> str:
    return "-" if v is None else f"{v:.4f}"


# -- correlate / scatter ------------------------------------------------------------

def _filtered_ratings(args):
    ratings = load_ratings(_read(args.ratings))
    kappas = stats.pairwise_kappa(ratings)
    agreement = stats.rater_agreement(kappas, args.kappa_rule)
    try:
        kept = stats.filter_raters(ratings, args.kappa_threshold, args.kappa_rule)
    except ValueError as e:
        raise DataError(str(e)) from None
    info = {
        "threshold": args.kappa_threshold,
        "rule": args.kappa_rule,
        "retained": kept,
        "removed": [r for r in ratings.raters if r not in kept],
        "rater_kappa": agreement,
    }
    return ratings.restrict(kept), kept, info


def cmd_correlate(args) -> int:
    report = _load_report(args.report)
    ratings, kept, info = _filtered_ratings(args)
    human = stats.item_means(ratings, kept)
    shared = [i for i, _ in report.per_instance if i in human]
    if not shared:
        raise DataError("report and ratings share no item ids")
    metrics = report.metrics if not args.metrics else args.metrics.split(",")
    unknown = [m for m in metrics if m not in report.metrics]
    if unknown:
        raise UsageError(f"metrics not in report: {', '.join(unknown)}")
    try:
        rows = stats.metric_human_table({m: report.scores(m) for m in metrics}, human)
    except ValueError as e:
        raise DataError(str(e)) from None

    human_row = None
    if len(kept) >= 2:
        try:
            rho, r, (g1, g2) = stats.human_human_correlation(
                ratings, rng_for(args.seed, "rater-split"), kept)
            human_row = stats.MetricCorrelation("human", rho.n, rho, r)
            info["split"] = [g1, g2]
        except ValueError:  # constant means or too few shared items
            human_row = stats.MetricCorrelation("human", len(human), None, None)

    table = ([human_row] if human_row else []) + rows
    if args.pretty:
        _emit(_pretty_correlation(table, info), args.out)
    elif args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = ["metric", "n", "defined", "spearman", "spearman_p", "pearson", "pearson_p"]
        writer.writerow(cols)
        for row in table:
            d = row.to_dict()
            writer.writerow(["" if d[c] is None else d[c] for c in cols])
        _emit(buf.getvalue(), args.out)
    else:
        payload = {"seed": args.seed, "kappa_filter": info,
                   "rows": [row.to_dict() for row in table]}
        _emit(json.dumps(payload) + "\n", args.out)
    return EXIT_OK


def _pretty_correlation(table, info) -> str:
    lines = [f"raters kept: {len(info['retained'])}, removed: "
             f"{', '.join(info['removed']) or 'none'} "
             f"(kappa {info['rule']} < {info['threshold']})",
             f"{'metric':<14}{'spearman':>10}{'p':>9}{'pearson':>10}{'p':>9}{'n':>6}"]
    for row in table:
        d = row.to_dict()
        lines.append(f"{d['metric']:<14}{_fmt(d['spearman']):>10}{_fmt(d['spearman_p']):>9}"
                     f"{_fmt(d['pearson']):>10}{_fmt(d['pearson_p']):>9}{d['n']:>6}")
    return "\n".join(lines) + "\n"


def cmd_scatter(args) -> int:
    report = _load_report(args.report)
    if args.metric not in report.metrics:
        raise UsageError(f"unknown metric {args.metric!r}; report has "
                         f"{', '.join(report.metrics)}")
    ratings, kept, _ = _filtered_ratings(args)
    human = stats.item_means(ratings, kept)
    scores = report.scores(args.metric)
    points = [(i, human[i], scores[i]) for i, _ in report.per_instance
              if i in human and scores[i] is not None]
    rows = stats.scatter_export(points, rng_for(args.seed, "jitter"),
                                args.sigma_human, args.sigma_metric)
    buf = io.StringIO()
    cols = ["item_id", "human", "metric", "human_jit", "metric_jit"]
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# -- kappa -----------------------------------------------------------------------

def cmd_kappa(args) -> int:
    ratings = load_ratings(_read(args.ratings))
    if len(ratings.raters) < 2:
        raise DataError("need at least 2 raters")
    try:
        buckets = [float(b) for b in args.buckets.split(",") if b.strip()]
    except ValueError:
        raise UsageError(f"bad --buckets value {args.buckets!r}") from None
    kappas = stats.pairwise_kappa(ratings)
    table = stats.kappa_buckets(kappas, buckets)
    if args.pretty:
        lines = [f"{'kappa':<8}{'# pairs':>10}{'% pairs':>10}"]
        for b in table:
            lines.append(f"> {b['threshold']:<6}{b['count']:>5}/{b['total']:<4}"
                         f"{b['percent']:>9.1f}%")
        _emit("\n".join(lines) + "\n", args.out)
    else:
        payload = {"raters": list(kappas.raters),
                   "pairs": [{"a": a, "b": b, "kappa": k} for a, b, k in kappas.pairs()],
                   "buckets": table}
        _emit(json.dumps(payload) + "\n", args.out)
    return EXIT_OK


# -- baseline --------------------------------------------------------------------

def cmd_baseline(args) -> int:
    train = load_corpus_jsonl(_read(args.train))
    test = load_corpus_jsonl(_read(args.test))
    index = dialogue.build_baseline_index(train)
    if len(index) == 0:
        raise DataError("training corpus has no instances with dialogue acts")
    rng = rng_for(args.seed, "baseline")
    lines = []
    for inst in test:
        if not inst.acts:
            raise DataError(f"test instance {inst.id!r} has no dialogue acts")
        generated = dialogue.baseline_generate(inst.acts, index, rng)
        out = EvalInstance(inst.id, generated, inst.references, inst.acts)
        lines.append(json.dumps(instance_to_json(out), ensure_ascii=False))
    _emit("".join(line + "\n" for line in lines), args.out)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------

def _add_kappa_flags(p):
    p.add_argument("--kappa-threshold", type=float, default=0.1,
                   help="drop raters whose pairwise kappa (see --kappa-rule) is below this")
    p.add_argument("--kappa-rule", choices=("mean", "max"), default="mean")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nlgm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("score", help="score hypotheses against references")
    p.add_argument("--hyp", help="hypothesis file, one sentence per line")
    p.add_argument("--refs", nargs="+", help="reference files aligned with --hyp")
    p.add_argument("--jsonl", help="corpus in jsonl form (instead of --hyp/--refs)")
    p.add_argument("--embeddings", help="word embeddings, text format")
    p.add_argument("--sentvecs", help="precomputed sentence vectors keyed ID:hyp / ID:refK")
    p.add_argument("--synonyms", help="synonym lexicon for METEOR, one group per line")
    p.add_argument("--metrics", default="bleu,meteor,rouge_l",
                   help=f"comma-separated subset of {','.join(FAMILIES)}")
    p.add_argument("--bleu-smoothing", choices=(SMOOTHING_NONE, SMOOTHING_ADD_ONE),
                   default=SMOOTHING_ADD_ONE, help="sentence-level BLEU smoothing")
    p.add_argument("--corpus-bleu-smoothing", choices=(SMOOTHING_NONE, SMOOTHING_ADD_ONE),
                   default=SMOOTHING_NONE)
    p.add_argument("--meteor-recall-weight", type=float, default=9.0)
    p.add_argument("--meteor-gamma", type=float, default=0.5)
    p.add_argument("--meteor-theta", type=float, default=3.0)
    p.add_argument("--rouge-beta", type=float, default=1.2)
    p.add_argument("--no-lowercase", action="store_true", help="keep case when tokenizing")
    p.add_argument("--threads", type=int, help="worker threads (env NLGM_THREADS)")
    p.add_argument("--pretty", action="store_true", help="print a table instead of JSON")
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("correlate", help="correlate report metrics with human ratings")
    p.add_argument("--report", required=True)
    p.add_argument("--ratings", required=True)
    _add_kappa_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metrics", help="comma-separated metric names (default: all in report)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("kappa", help="pairwise Cohen's kappa between raters")
    p.add_argument("--ratings", required=True)
    p.add_argument("--buckets", default=DEFAULT_BUCKETS)
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("baseline", help="random retrieval baseline generator")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("scatter", help="jittered (human, metric) points for plotting")
    p.add_argument("--report", required=True)
    p.add_argument("--ratings", required=True)
    p.add_argument("--metric", required=True)
    _add_kappa_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma-human", type=float, default=0.1)
    p.add_argument("--sigma-metric", type=float, default=0.02)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scatter)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # usage errors and --help
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as e:
        print(f"nlgm {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as e:
        print(f"nlgm {args.command}: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # noqa: BLE001
        print(f"nlgm {args.command}: internal error: {e!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
