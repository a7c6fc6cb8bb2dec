"""Decision-oriented verification scores.

Excess exposure for one day is the measured concentration at the hour the
forecast ranks cleanest, minus the cleanest measured hour. Mean excess
exposure (MEE) averages it over a day set. Undefined results (empty day sets,
zero denominators) are ``None`` here and render as a dash.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from . import kernels
from .core import HOURS_PER_DAY, PERSISTENCE, DaySeries, SeriesError

SeriesLike = Union[DaySeries, Sequence[float]]


def _values(series: SeriesLike) -> tuple[float, ...]:
    if isinstance(series, DaySeries):
        return series.require_complete()
    values = tuple(series)
    if len(values) != HOURS_PER_DAY or any(v is None or not math.isfinite(v) for v in values):
        raise SeriesError(f"expected {HOURS_PER_DAY} finite values")
    return tuple(float(v) for v in values)


def _check_windows(a: SeriesLike, b: SeriesLike) -> None:
    if isinstance(a, DaySeries) and isinstance(b, DaySeries) and a.window != b.window:
        raise SeriesError(f"series windows differ: {a.window.label_date} vs {b.window.label_date}")


def excess_exposure(measured: SeriesLike, forecast: SeriesLike) -> tuple[float, int]:
    """Return ``(ee, chosen_hour)`` for one day.

    ``chosen_hour`` (1..24) is the earliest hour attaining the forecast minimum.
    """
    _check_windows(measured, forecast)
    m, f = _values(measured), _values(forecast)
    best = 0
    for k in range(1, HOURS_PER_DAY):
        if f[k] < f[best]:
            best = k
    return m[best] - min(m), best + 1


def random_hour_excess(measured: SeriesLike) -> float:
    """Expected excess exposure when the hour is drawn uniformly at random."""
    m = _values(measured)
    return math.fsum(m) / HOURS_PER_DAY - min(m)


def mean_excess_exposure(values: Iterable[float]) -> Optional[float]:
    """MEE over a day set; accepts per-day excess values or :class:`DayOutcome` objects."""
    ee = [v.excess_exposure if isinstance(v, DayOutcome) else float(v) for v in values]
    if not ee:
        return None
    return math.fsum(ee) / len(ee)


def persistence_mee(measured_days: Iterable[SeriesLike]) -> Optional[float]:
    """MEE of the persistence baseline: every hour looks alike, so the hour is random."""
    return mean_excess_exposure(random_hour_excess(m) for m in measured_days)


def classify_day(series: SeriesLike, threshold: float, rule: str = "daily_max") -> bool:
    v = _values(series)
    stat = max(v) if rule == "daily_max" else math.fsum(v) / HOURS_PER_DAY
    return stat > threshold


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.tp, self.fp, self.fn, self.tn)


@dataclass(frozen=True)
class SkillScores:
    precision: Optional[float]
    recall: Optional[float]


def skill(counts: ConfusionCounts) -> SkillScores:
    """Precision TP/(TP+FP) and recall TP/(TP+FN); ``None`` where the denominator is 0."""
    p_den, r_den = counts.tp + counts.fp, counts.tp + counts.fn
    return SkillScores(
        counts.tp / p_den if p_den else None,
        counts.tp / r_den if r_den else None,
    )


@dataclass(frozen=True)
class DayOutcome:
    city_id: str
    date: date
    model: str
    predicted_positive: bool
    truth_positive: bool
    excess_exposure: float
    chosen_hour: int
    squared_errors: tuple[float, ...]

    @property
    def squared_error_sum(self) -> float:
        return math.fsum(self.squared_errors)


def confusion(outcomes: Iterable[DayOutcome]) -> ConfusionCounts:
    tp = fp = fn = tn = 0
    for o in outcomes:
        if o.predicted_positive and o.truth_positive:
            tp += 1
        elif o.predicted_positive:
            fp += 1
        elif o.truth_positive:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def rmse(pairs: Iterable, mode: str = "pooled") -> Optional[float]:
    """Root mean squared hourly error over ``(measured, forecast)`` pairs or outcomes.

    ``pooled`` averages all 24·|days| squared errors; ``per_day`` averages the
    per-day RMSE values instead.
    """
    per_day = []
    for item in pairs:
        if isinstance(item, DayOutcome):
            sq = item.squared_errors
        else:
            m, f = item
            _check_windows(m, f)
            sq = [(b - a) ** 2 for a, b in zip(_values(m), _values(f))]
        per_day.append(math.fsum(sq))
    if not per_day:
        return None
    if mode == "pooled":
        return math.sqrt(math.fsum(per_day) / (HOURS_PER_DAY * len(per_day)))
    if mode == "per_day":
        return math.fsum(math.sqrt(s / HOURS_PER_DAY) for s in per_day) / len(per_day)
    raise ValueError(f"unknown rmse mode {mode!r}")


def day_outcomes(bundles, model: str, threshold: float, rule: str = "daily_max") -> list[DayOutcome]:
    """Outcomes for every bundle carrying ``model``, computed in one batch kernel call.

    Persistence outcomes record the random-hour expectation as their excess
    exposure and hour 1 as the nominal chosen hour.
    """
    rows = [(b, b.series_for(model)) for b in bundles]
    rows = [(b, s) for b, s in rows if s is not None]
    if not rows:
        return []
    m = np.array([b.measured.require_complete() for b, _ in rows], dtype=np.float64)
    f = np.array([s.require_complete() for _, s in rows], dtype=np.float64)
    if model == PERSISTENCE:
        ee = kernels.random_hour_excess_batch(m)
        hours = np.ones(len(rows), dtype=np.int64)
    else:
        ee, hours = kernels.excess_exposure_batch(m, f)
    sq = (f - m) ** 2
    out = []
    for i, (b, s) in enumerate(rows):
        out.append(
            DayOutcome(
                b.city_id,
                b.label_date,
                model,
                classify_day(s, threshold, rule),
                b.high_day,
                float(ee[i]),
                int(hours[i]),
                tuple(float(x) for x in sq[i]),
            )
        )
    return out


# -- reports ---------------------------------------------------------------

DAYSETS = ("smoke", "all")


@dataclass(frozen=True)
class MetricValue:
    value: Optional[float]
    days: int


@dataclass(frozen=True)
class ModelScores:
    counts: ConfusionCounts
    mee: Mapping[str, MetricValue]
    rmse: Mapping[str, MetricValue]

    @property
    def evaluated_days(self) -> int:
        return self.counts.total


@dataclass(frozen=True)
class CityReport:
    city_id: str
    models: Mapping[str, ModelScores]
    name: str = ""


@dataclass(frozen=True)
class AggregateReport:
    models: Mapping[str, ModelScores]
    cities: tuple[str, ...] = field(default_factory=tuple)


def model_scores(outcomes: Sequence[DayOutcome], rmse_mode: str = "pooled") -> ModelScores:
    smoke = [o for o in outcomes if o.truth_positive]
    mee = {
        "smoke": MetricValue(mean_excess_exposure(smoke), len(smoke)),
        "all": MetricValue(mean_excess_exposure(outcomes), len(outcomes)),
    }
    err = {
        "smoke": MetricValue(rmse(smoke, rmse_mode), len(smoke)),
        "all": MetricValue(rmse(outcomes, rmse_mode), len(outcomes)),
    }
    return ModelScores(confusion(outcomes), mee, err)


def city_report(city_id: str, outcomes_by_model: Mapping[str, Sequence[DayOutcome]], rmse_mode="pooled", name="") -> CityReport:
    return CityReport(city_id, {m: model_scores(o, rmse_mode) for m, o in outcomes_by_model.items()}, name)


def _pool_mean(values: Sequence[MetricValue]) -> MetricValue:
    live = [v for v in values if v.days and v.value is not None]
    n = sum(v.days for v in live)
    if not n:
        return MetricValue(None, 0)
    lo, hi = min(v.value for v in live), max(v.value for v in live)
    return MetricValue(min(hi, max(lo, math.fsum(v.value * v.days for v in live) / n)), n)


def _pool_rmse(values: Sequence[MetricValue], mode: str) -> MetricValue:
    if mode != "pooled":
        return _pool_mean(values)
    live = [v for v in values if v.days and v.value is not None]
    n = sum(v.days for v in live)
    if not n:
        return MetricValue(None, 0)
    return MetricValue(math.sqrt(math.fsum(v.value ** 2 * v.days for v in live) / n), n)


def aggregate(reports: Sequence[CityReport], rmse_mode: str = "pooled") -> AggregateReport:
    """Pool city reports: counts add, MEE is the day-weighted mean over contributing cities."""
    if not reports:
        raise ValueError("aggregate needs at least one city report")
    models = []
    for r in reports:
        for m in r.models:
            if m not in models:
                models.append(m)
    pooled = {}
    for m in models:
        scores = [r.models[m] for r in reports if m in r.models]
        counts = ConfusionCounts()
        for s in scores:
            counts = counts + s.counts
        pooled[m] = ModelScores(
            counts,
            {ds: _pool_mean([s.mee[ds] for s in scores if ds in s.mee]) for ds in DAYSETS},
            {ds: _pool_rmse([s.rmse[ds] for s in scores if ds in s.rmse], rmse_mode) for ds in DAYSETS},
        )
    return AggregateReport(pooled, tuple(r.city_id for r in reports))
