"""Correlation and rater-agreement statistics for the metric/human study."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .corpus import RatingMatrix

PERMUTATION_MAX_N = 10


class UndefinedStatistic(ValueError):
    """The statistic is undefined for this input (e.g. a constant sample)."""


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    p_value: float | None
    n: int

    def to_dict(self) -> dict:
        return {"coefficient": self.coefficient, "p_value": self.p_value, "n": self.n}


def _as_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("x and y must be 1-d sequences of equal length")
    if len(x) < 2:
        raise ValueError("need at least 2 observations")
    return x, y


def _r(x: np.ndarray, y: np.ndarray) -> float:
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = np.dot(dx, dx), np.dot(dy, dy)
    if sxx == 0 or syy == 0:
        raise UndefinedStatistic("correlation undefined for a constant sample")
    return float(np.clip(np.dot(dx, dy) / math.sqrt(sxx * syy), -1.0, 1.0))


def t_test_p_value(r: float, n: int) -> float | None:
    """Two-sided p-value of r under H0 via t = r*sqrt((n-2)/(1-r^2)), df = n-2."""
    if n < 3:
        return None
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return float(min(1.0, 2.0 * sps.t.sf(abs(t), n - 2)))


def _permutation_p_value(x, y, r: float, corr) -> float:
    if len(x) > PERMUTATION_MAX_N:
        raise ValueError(f"exact permutation test limited to n <= {PERMUTATION_MAX_N}")
    hits = total = 0
    for perm in itertools.permutations(y):
        total += 1
        if abs(corr(x, np.asarray(perm))) >= abs(r) - 1e-12:
            hits += 1
    return hits / total


def _correlate(x, y, corr, method: str) -> CorrelationResult:
    r = corr(x, y)
    if method == "t":
        p = t_test_p_value(r, len(x))
    elif method == "permutation":
        p = _permutation_p_value(x, y, r, corr)
    else:
        raise ValueError(f"unknown p-value method {method!r}")
    return CorrelationResult(r, p, len(x))


def pearson(x: Sequence[float], y: Sequence[float], method: str = "t") -> CorrelationResult:
    """Sample Pearson r with a two-sided p-value.

    ``method`` is ``"t"`` (t approximation) or ``"permutation"`` (exact, n <= 10).
    Raises :class:`UndefinedStatistic` on constant input.
    """
    x, y = _as_pair(x, y)
    return _correlate(x, y, _r, method)


def average_ranks(x: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank range."""
    return sps.rankdata(np.asarray(x, dtype=np.float64), method="average")


def _rank_r(x, y) -> float:
    return _r(average_ranks(x), average_ranks(y))


def spearman(x: Sequence[float], y: Sequence[float], method: str = "t") -> CorrelationResult:
    """Spearman rho: Pearson r of tie-averaged ranks, same p-value options."""
    x, y = _as_pair(x, y)
    return _correlate(x, y, _rank_r, method)


# -- agreement --------------------------------------------------------------------

def cohen_kappa(a: Sequence[Hashable], b: Sequence[Hashable]) -> float:
    """Unweighted Cohen's kappa; labels are unordered categories."""
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    n = len(a)
    if n == 0:
        raise ValueError("need at least one rated item")
    p_o = sum(x == y for x, y in zip(a, b)) / n
    ca, cb = Counter(a), Counter(b)
    p_e = sum(ca[k] * cb[k] for k in ca) / (n * n)
    if p_e == 1.0:
        return 1.0  # both raters constant on the same label, so p_o is 1 too
    return (p_o - p_e) / (1.0 - p_e)


@dataclass(frozen=True)
class KappaMatrix:
    raters: tuple[str, ...]
    kappas: Mapping[frozenset[str], float | None]

    def get(self, a: str, b: str) -> float | None:
        return self.kappas[frozenset((a, b))]

    def pairs(self) -> list[tuple[str, str, float | None]]:
        return [(a, b, self.get(a, b)) for a, b in itertools.combinations(self.raters, 2)]

    def per_rater(self, rater: str) -> list[float]:
        return [k for (a, b, k) in self.pairs() if rater in (a, b) and k is not None]


def pairwise_kappa(ratings: RatingMatrix, min_joint: int = 2) -> KappaMatrix:
    """Kappa for every rater pair over their jointly rated items.

    Pairs with fewer than ``min_joint`` shared items get ``None``.
    """
    by_rater = {r: ratings.rater_scores(r) for r in ratings.raters}
    kappas = {}
    for a, b in itertools.combinations(ratings.raters, 2):
        joint = [i for i in ratings.items if i in by_rater[a] and i in by_rater[b]]
        if len(joint) < min_joint:
            kappas[frozenset((a, b))] = None
        else:
            kappas[frozenset((a, b))] = cohen_kappa([by_rater[a][i] for i in joint],
                                                    [by_rater[b][i] for i in joint])
    return KappaMatrix(tuple(ratings.raters), kappas)


def rater_agreement(kappas: KappaMatrix, rule: str = "mean") -> dict[str, float | None]:
    """Mean or max pairwise kappa per rater; None if no pair is defined."""
    agg = {"mean": lambda v: sum(v) / len(v), "max": max}
    if rule not in agg:
        raise ValueError(f"unknown kappa rule {rule!r}")
    out = {}
    for r in kappas.raters:
        vals = kappas.per_rater(r)
        out[r] = agg[rule](vals) if vals else None
    return out


def filter_raters(ratings: RatingMatrix, threshold: float = 0.1,
                  rule: str = "mean") -> list[str]:
    """Single pass: keep raters whose mean (or max) pairwise kappa >= threshold.

    Raters with no defined pairwise kappa are dropped.
    """
    scores = rater_agreement(pairwise_kappa(ratings), rule)
    kept = [r for r in ratings.raters if scores[r] is not None and scores[r] >= threshold]
    if not kept:
        raise ValueError("all raters removed")
    return kept


def item_means(ratings: RatingMatrix, raters: Sequence[str]) -> dict[str, float]:
    """Mean score per item over ``raters``, ignoring missing entries."""
    if not raters:
        raise ValueError("rater subset must be non-empty")
    out = {}
    for item in ratings.items:
        vals = [s for r in raters if (s := ratings.score(item, r)) is not None]
        if not vals:
            raise ValueError(f"item {item!r} has no scores from the selected raters")
        out[item] = sum(vals) / len(vals)
    return out


def _partial_means(ratings: RatingMatrix, raters: Sequence[str]) -> dict[str, float]:
    out = {}
    for item in ratings.items:
        vals = [s for r in raters if (s := ratings.score(item, r)) is not None]
        if vals:
            out[item] = sum(vals) / len(vals)
    return out


def split_raters(raters: Sequence[str], rng: np.random.Generator) -> tuple[list[str], list[str]]:
    """Shuffle, then halve; an odd count puts the extra rater in the first group."""
    order = [raters[i] for i in rng.permutation(len(raters))]
    cut = (len(order) + 1) // 2
    return order[:cut], order[cut:]


def human_human_correlation(ratings: RatingMatrix, rng: np.random.Generator,
                            raters: Sequence[str] | None = None):
    """Correlate per-item means of two random rater halves.

    Returns ``(spearman, pearson, (group_a, group_b))``; items missing from
    either half are left out.
    """
    raters = list(ratings.raters if raters is None else raters)
    if len(raters) < 2:
        raise ValueError("need at least 2 raters to split")
    g1, g2 = split_raters(raters, rng)
    m1, m2 = _partial_means(ratings, g1), _partial_means(ratings, g2)
    shared = [i for i in ratings.items if i in m1 and i in m2]
    x = [m1[i] for i in shared]
    y = [m2[i] for i in shared]
    return spearman(x, y), pearson(x, y), (g1, g2)


@dataclass(frozen=True)
class MetricCorrelation:
    metric: str
    n: int
    spearman: CorrelationResult | None
    pearson: CorrelationResult | None

    @property
    def defined(self) -> bool:
        return self.spearman is not None and self.pearson is not None

    def to_dict(self) -> dict:
        def part(c):
            return (None, None) if c is None else (c.coefficient, c.p_value)
        s, sp = part(self.spearman)
        p, pp = part(self.pearson)
        return {"metric": self.metric, "n": self.n, "defined": self.defined,
                "spearman": s, "spearman_p": sp, "pearson": p, "pearson_p": pp}


def metric_human_table(metric_scores: Mapping[str, Mapping[str, float | None]],
                       human: Mapping[str, float]) -> list[MetricCorrelation]:
    """Spearman and Pearson of each metric against human item means.

    ``None`` metric values (undefined rows) are dropped pairwise. A constant
    metric yields an undefined row; fewer than 3 shared items is an error.
    """
    rows = []
    for name, scores in metric_scores.items():
        shared = [i for i in human if scores.get(i) is not None]
        if len(shared) < 3:
            raise ValueError(f"metric {name!r}: fewer than 3 items shared with human ratings")
        x = [scores[i] for i in shared]
        y = [human[i] for i in shared]
        try:
            rows.append(MetricCorrelation(name, len(shared), spearman(x, y), pearson(x, y)))
        except UndefinedStatistic:
            rows.append(MetricCorrelation(name, len(shared), None, None))
    return rows


def kappa_buckets(kappas: KappaMatrix, thresholds: Sequence[float]) -> list[dict]:
    """Count and share of rater pairs with kappa strictly above each threshold."""
    values = [k for (_, _, k) in kappas.pairs()]
    total = len(values)
    out = []
    for t in thresholds:
        count = sum(1 for k in values if k is not None and k > t)
        out.append({"threshold": t, "count": count, "total": total,
                    "percent": 100.0 * count / total if total else 0.0})
    return out


# -- scatter data -------------------------------------------------------------------

def scatter_export(points: Sequence[tuple[str, float, float]], rng: np.random.Generator,
                   sigma_human: float = 0.1, sigma_metric: float = 0.02) -> list[dict]:
    """Add gaussian jitter to (item_id, human, metric) points for plotting."""
    n = len(points)
    jh = rng.normal(0.0, sigma_human, n) if sigma_human > 0 else np.zeros(n)
    jm = rng.normal(0.0, sigma_metric, n) if sigma_metric > 0 else np.zeros(n)
    return [{"item_id": item, "human": h, "metric": m,
             "human_jit": h + float(dh), "metric_jit": m + float(dm)}
            for (item, h, m), dh, dm in zip(points, jh, jm)]
