"""Histogram comparison metrics and their ranking polarity.

All four comparisons take two comparable histograms. Correlation and
intersection are similarities (higher is closer); chi-squared and
Bhattacharyya are distances (lower is closer).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from .exceptions import IncompatibleFeatures, MixedMetrics, ValidationError
from .histogram import HistogramFeature, feature_distance_ready


class Polarity(enum.Enum):
    HIGHER_IS_MORE_SIMILAR = "higher"
    LOWER_IS_MORE_SIMILAR = "lower"


class MetricKind(str, enum.Enum):
    CORRELATION = "correlation"
    CHI_SQUARED = "chi-squared"
    INTERSECTION = "intersection"
    BHATTACHARYYA = "bhattacharyya"

    @property
    def polarity(self) -> Polarity:
        if self in (MetricKind.CORRELATION, MetricKind.INTERSECTION):
            return Polarity.HIGHER_IS_MORE_SIMILAR
        return Polarity.LOWER_IS_MORE_SIMILAR

    @property
    def perfect_value(self) -> float:
        """Score of a histogram compared with itself."""
        return 1.0 if self.polarity is Polarity.HIGHER_IS_MORE_SIMILAR else 0.0

    @classmethod
    def parse(cls, value) -> "MetricKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValidationError(
                f"unknown metric {value!r}; expected one of {[m.value for m in cls]}") from None


@dataclass(frozen=True)
class Score:
    value: float
    metric: MetricKind

    def sort_key(self) -> float:
        """Ascending key: smaller means more similar, for either polarity."""
        if self.metric.polarity is Polarity.HIGHER_IS_MORE_SIMILAR:
            return -self.value
        return self.value


def _pair(p, q):
    if not isinstance(p, HistogramFeature):
        p = HistogramFeature.from_vector(p)
    if not isinstance(q, HistogramFeature):
        q = HistogramFeature.from_vector(q)
    if not feature_distance_ready(p, q):
        raise IncompatibleFeatures(
            f"cannot compare features of shape {p.shape} and {q.shape}")
    return p.values, q.values


def correlation(p, q) -> Score:
    """Pearson correlation between the two bin vectors.

    Constant vectors have no variance: two equal constants score 1, any
    other pairing with a constant scores 0.
    """
    a, b = _pair(p, q)
    a_const = a.size == 0 or a.min() == a.max()
    b_const = b.size == 0 or b.min() == b.max()
    if a_const or b_const:
        value = 1.0 if a_const and b_const and np.array_equal(a, b) else 0.0
        return Score(value, MetricKind.CORRELATION)
    da = a - a.mean()
    db = b - b.mean()
    value = float(np.dot(da, db) / math.sqrt(float(np.dot(da, da)) * float(np.dot(db, db))))
    return Score(min(1.0, max(-1.0, value)), MetricKind.CORRELATION)


def chi_squared(p, q) -> Score:
    """Sum of ``(p - q)^2 / p`` over bins where ``p`` is positive."""
    a, b = _pair(p, q)
    mask = a > 0
    d = a[mask] - b[mask]
    return Score(float(np.sum(d * d / a[mask])), MetricKind.CHI_SQUARED)


def intersection(p, q) -> Score:
    a, b = _pair(p, q)
    return Score(float(np.sum(np.minimum(a, b))), MetricKind.INTERSECTION)


def bhattacharyya(p, q) -> Score:
    """Bhattacharyya distance ``sqrt(1 - sum(sqrt(p*q)))`` of normalized histograms.

    ``1 - sum(sqrt(p*q))`` is evaluated as ``sum((sqrt(p) - sqrt(q))**2) / 2``,
    equal for unit-mass inputs but free of cancellation, so identical
    histograms score exactly 0 even when their sum is a few ulps off 1.
    """
    a, b = _pair(p, q)
    d = np.sqrt(a) - np.sqrt(b)
    gap = 0.5 * float(np.dot(d, d))
    return Score(math.sqrt(min(1.0, max(0.0, gap))), MetricKind.BHATTACHARYYA)


METRICS: Dict[MetricKind, Callable[..., Score]] = {
    MetricKind.CORRELATION: correlation,
    MetricKind.CHI_SQUARED: chi_squared,
    MetricKind.INTERSECTION: intersection,
    MetricKind.BHATTACHARYYA: bhattacharyya,
}


def compare(p, q, metric) -> Score:
    return METRICS[MetricKind.parse(metric)](p, q)


def more_similar(a: Score, b: Score) -> int:
    """Three-way comparison: -1 if ``a`` ranks before ``b``, 1 if after, 0 if tied."""
    if a.metric is not b.metric:
        raise MixedMetrics(f"cannot order a {a.metric.value} score against {b.metric.value}")
    ka, kb = a.sort_key(), b.sort_key()
    return (ka > kb) - (ka < kb)
