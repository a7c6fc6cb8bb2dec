"""Per-(city, day) series construction under the 12UTC-run / 13UTC-window convention.

Readings and forecast valid times both label the hour that starts at the
timestamp. Time-averaged products (GEOS-CF) label each hourly mean by its
start, so the 12-13UTC average carries 12UTC and slot ``k`` of a window reads
the sample labelled ``13UTC + k`` for every model alike.
"""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from typing import Mapping, Optional, Sequence, Union

from .core import (
    PERSISTENCE,
    DaySeries,
    DayWindow,
    UrbanArea,
    bounded_mean,
    date_range,
)
from .ingest import ForecastStore, MonitorStation, ReadingStore
from .spatial import CellSelection, MonitorSelection, model_radius_km, select_forecast_cells, select_monitors

log = logging.getLogger(__name__)

ALL_MODELS = "*"
EXCLUSION_COLUMNS = ("city_id", "date", "model", "reason")


@dataclass(frozen=True)
class Excluded:
    reason: str

    def __bool__(self):
        return False


SeriesResult = Union[DaySeries, Excluded]


@dataclass(frozen=True, order=True)
class Exclusion:
    city_id: str
    date: str
    model: str
    reason: str


@dataclass(frozen=True)
class CityDayBundle:
    city_id: str
    window: DayWindow
    measured: DaySeries
    forecasts: Mapping[str, DaySeries]
    persistence: Optional[DaySeries]
    high_day: bool

    @property
    def label_date(self) -> date:
        return self.window.label_date

    def series_for(self, model: str) -> Optional[DaySeries]:
        if model == PERSISTENCE:
            return self.persistence
        return self.forecasts.get(model)


def is_high_day(series: DaySeries, threshold: float) -> bool:
    """Strict exceedance of the daily maximum; equality is not an exceedance."""
    return max(series.require_complete()) > threshold


def measured_series(city: UrbanArea, selection: MonitorSelection, readings: ReadingStore, window: DayWindow) -> SeriesResult:
    """Per-hour mean over the selected monitors that reported at that hour."""
    if selection.empty:
        return Excluded("no monitors selected")
    values = []
    for k, t in enumerate(window.hours):
        present = [v for v in (readings.get(m, t) for m in selection.monitor_ids) if v is not None]
        if not present:
            return Excluded(f"no monitor reporting at hour {k + 1}")
        values.append(bounded_mean(present))
    return DaySeries(window, tuple(values), "measured")


def forecast_series(
    city: UrbanArea, model: str, cells: CellSelection, store: ForecastStore, window: DayWindow
) -> SeriesResult:
    """Unweighted mean over cells of the 12UTC run, one value per window hour."""
    if cells.empty:
        return Excluded(f"no forecast points within {cells.radius_km:g} km")
    run = window.run_time
    if not store.has_run(model, run):
        return Excluded("missing run")
    per_hour = [
        [v for v in (store.value(model, run, t, loc) for loc in cells.locations) if v is not None]
        for t in window.hours
    ]
    if not any(per_hour):
        return Excluded("missing run")  # the run exists elsewhere but not over this city
    for k, present in enumerate(per_hour):
        if not present:
            return Excluded(f"missing hour {k + 1}")
    return DaySeries(window, tuple(bounded_mean(p) for p in per_hour), model)


def persistence_series(
    city: UrbanArea, selection: MonitorSelection, readings: ReadingStore, window: DayWindow
) -> SeriesResult:
    """Constant series at the mean 10UTC reading of the day before the window's label date."""
    if selection.empty:
        return Excluded("no monitors selected")
    t = window.persistence_time
    present = [v for v in (readings.get(m, t) for m in selection.monitor_ids) if v is not None]
    if not present:
        return Excluded("no 10UTC reading on previous day")
    return DaySeries.constant(window, bounded_mean(present), PERSISTENCE)


@dataclass
class Stores:
    stations: Sequence[MonitorStation]
    readings: ReadingStore
    forecasts: ForecastStore = field(default_factory=ForecastStore)


@dataclass
class BundleResult:
    bundles: list
    exclusions: list
    selections: dict

    def skipped_units(self, models: Sequence[str], cities: Sequence[str]) -> list[tuple[str, str]]:
        """(city, model) pairs, persistence included, that ended with no evaluated day."""
        evaluated = {(b.city_id, m) for b in self.bundles for m in (*b.forecasts, PERSISTENCE if b.persistence else None) if m}
        return [(c, m) for c in cities for m in (*models, PERSISTENCE) if (c, m) not in evaluated]


def _city_bundles(city: UrbanArea, config, stores: Stores):
    selection = select_monitors(
        city,
        stores.stations,
        config.date_range,
        radius_km=config.monitor_radius_km,
        fallback_radius_km=config.monitor_fallback_radius_km,
        max_neighbors=config.monitor_max_neighbors,
    )
    days = date_range(*config.date_range)
    bundles, log_rows = [], []
    if selection.empty:
        reason = f"no monitors within {config.monitor_fallback_radius_km:g} km"
        log_rows = [Exclusion(city.id, d.isoformat(), ALL_MODELS, reason) for d in days]
        return selection, bundles, log_rows

    cells = {
        m: select_forecast_cells(
            city, m, stores.forecasts.locations(m), model_radius_km(m, config.forecast_radius_km)
        )
        for m in config.models
    }
    for d in days:
        window = DayWindow(d)
        measured = measured_series(city, selection, stores.readings, window)
        if not measured:
            log_rows.append(Exclusion(city.id, d.isoformat(), ALL_MODELS, measured.reason))
            continue
        forecasts = {}
        for m in config.models:
            fs = forecast_series(city, m, cells[m], stores.forecasts, window)
            if fs:
                forecasts[m] = fs
            else:
                log_rows.append(Exclusion(city.id, d.isoformat(), m, fs.reason))
        persistence = persistence_series(city, selection, stores.readings, window)
        if not persistence:
            log_rows.append(Exclusion(city.id, d.isoformat(), PERSISTENCE, persistence.reason))
            persistence = None
        bundles.append(
            CityDayBundle(
                city.id,
                window,
                measured,
                forecasts,
                persistence,
                is_high_day(measured, config.exceedance_threshold),
            )
        )
    return selection, bundles, log_rows


def build_bundles(config, stores: Stores, jobs: int = 1) -> BundleResult:
    """Bundles for every (city, date) with complete measured data, plus an exclusion log.

    Work fans out per city; output order is (city id, date) regardless of ``jobs``.
    """
    cities = sorted(config.cities, key=lambda c: c.id)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(lambda c: _city_bundles(c, config, stores), cities))
    else:
        parts = [_city_bundles(c, config, stores) for c in cities]
    bundles, exclusions, selections = [], [], {}
    for city, (selection, b, x) in zip(cities, parts):
        selections[city.id] = selection
        bundles.extend(b)
        exclusions.extend(x)
    bundles.sort(key=lambda b: (b.city_id, b.label_date))
    exclusions.sort()
    return BundleResult(bundles, exclusions, selections)


def write_exclusions(exclusions, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EXCLUSION_COLUMNS)
        for x in sorted(exclusions):
            w.writerow([x.city_id, x.date, x.model, x.reason])


def read_exclusions(path) -> list[Exclusion]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [Exclusion(r["city_id"], r["date"], r["model"], r["reason"]) for r in csv.DictReader(fh)]
