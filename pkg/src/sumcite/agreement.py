"""Inter-annotator agreement and human-vs-automatic correlation statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .metrics import METRIC_KEYS, InstanceReport


@dataclass(frozen=True)
class ScorePair:
    """Two scores for the same item: Likert 1-5 for IAA, metric values for
    correlation studies."""

    item_id: str
    score_a: float
    score_b: float


@dataclass(frozen=True)
class IaaStats:
    exact_match: Fraction
    within_one: Fraction
    mae: Fraction

    def as_json(self) -> dict:
        return {
            "exact_match": float(self.exact_match),
            "within_one": float(self.within_one),
            "mae": float(self.mae),
        }


def iaa_stats(pairs: Sequence[ScorePair]) -> IaaStats:
    """Exact-match accuracy, within-one accuracy and mean absolute error."""
    if not pairs:
        raise ValueError("iaa_stats needs at least one score pair")
    n = len(pairs)
    diffs = [Fraction(p.score_a) - Fraction(p.score_b) for p in pairs]
    exact = sum(1 for d in diffs if d == 0)
    close = sum(1 for d in diffs if abs(d) <= 1)
    mae = sum((abs(d) for d in diffs), Fraction(0)) / n
    return IaaStats(Fraction(exact, n), Fraction(close, n), mae)


def _average_ranks(values: Sequence[float]) -> list[Fraction]:
    """Ranks starting at 1; ties share the average of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks: list[Fraction] = [Fraction(0)] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = Fraction(i + 1 + j + 1, 2)
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def _pearson_exact(xs: Sequence[Fraction], ys: Sequence[Fraction]) -> float | None:
    """Product-moment correlation in exact arithmetic; None on zero variance.

    Exact rationals keep perfectly monotone or affine inputs at exactly
    +/-1.0 instead of 0.9999... after float round-off.
    """
    n = len(xs)
    mean_x = sum(xs, Fraction(0)) / n
    mean_y = sum(ys, Fraction(0)) / n
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    cov = sum((a * b for a, b in zip(dx, dy)), Fraction(0))
    var_x = sum((a * a for a in dx), Fraction(0))
    var_y = sum((b * b for b in dy), Fraction(0))
    if var_x == 0 or var_y == 0:
        return None
    denom_sq = var_x * var_y
    ratio_sq = cov * cov / denom_sq
    if ratio_sq == 1:
        return 1.0 if cov > 0 else -1.0
    magnitude = math.sqrt(float(ratio_sq))
    return magnitude if cov >= 0 else -magnitude


def _check_lengths(xs: Sequence[float], ys: Sequence[float]) -> None:
    if len(xs) != len(ys):
        raise ValueError("input vectors must have equal length")
    if len(xs) < 2:
        raise ValueError("correlation needs at least two points")


def pearson_r(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Pearson product-moment correlation; None when either side has zero
    variance."""
    _check_lengths(xs, ys)
    return _pearson_exact([Fraction(x) for x in xs], [Fraction(y) for y in ys])


def spearman_rho(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Spearman rank correlation with average ranks for ties; None when
    either side has zero rank variance (all values tied)."""
    _check_lengths(xs, ys)
    return _pearson_exact(_average_ranks(xs), _average_ranks(ys))


@dataclass(frozen=True)
class CorrelationSummary:
    """Per-metric correlations between two report sets plus their averages."""

    per_metric: dict[str, tuple[float | None, float | None]]
    mean_rho: float | None
    mean_r: float | None
    paired_instances: int

    def as_json(self) -> dict:
        return {
            "per_metric": {
                key: {"spearman_rho": rho, "pearson_r": r}
                for key, (rho, r) in self.per_metric.items()
            },
            "mean_spearman_rho": self.mean_rho,
            "mean_pearson_r": self.mean_r,
            "paired_instances": self.paired_instances,
        }


def correlate_reports(
    auto_reports: Sequence[InstanceReport], human_reports: Sequence[InstanceReport]
) -> CorrelationSummary:
    """Correlate two evaluations of the same instances, per metric.

    Instances are paired by (pmid, aspect); the headline figure is the mean
    over the four metrics of each coefficient, skipping undefined ones.
    """
    human_by_key = {(r.pmid, r.aspect): r for r in human_reports}
    pairs = [
        (auto, human_by_key[(auto.pmid, auto.aspect)])
        for auto in auto_reports
        if (auto.pmid, auto.aspect) in human_by_key
    ]
    if len(pairs) < 2:
        raise ValueError("correlation needs at least two paired instances")

    per_metric: dict[str, tuple[float | None, float | None]] = {}
    for key in METRIC_KEYS:
        xs = [float(auto.metric(key).value) for auto, _ in pairs]
        ys = [float(human.metric(key).value) for _, human in pairs]
        per_metric[key] = (spearman_rho(xs, ys), pearson_r(xs, ys))

    rhos = [rho for rho, _ in per_metric.values() if rho is not None]
    rs = [r for _, r in per_metric.values() if r is not None]
    return CorrelationSummary(
        per_metric=per_metric,
        mean_rho=sum(rhos) / len(rhos) if rhos else None,
        mean_r=sum(rs) / len(rs) if rs else None,
        paired_instances=len(pairs),
    )
