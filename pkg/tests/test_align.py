from datetime import date, timedelta

import pytest
from hypothesis import given, settings, strategies as st

from smokebench.align import (
    ALL_MODELS,
    Stores,
    build_bundles,
    forecast_series,
    is_high_day,
    measured_series,
    persistence_series,
    read_exclusions,
    write_exclusions,
)
from smokebench.config import RunConfig
from smokebench.core import DaySeries, DayWindow, GeoPoint, UrbanArea, utc
from smokebench.ingest import ForecastSample, ForecastStore, MonitorReading, MonitorStation, ReadingStore
from smokebench.spatial import CellSelection, MonitorSelection

D = date(2023, 6, 27)
W = DayWindow(D)
CITY = UrbanArea("chi", "Chicago", GeoPoint(41.88, -87.63))
SEL = MonitorSelection("chi", ("a", "b"), (1.0, 2.0), 10.0)
CELL_A, CELL_B = GeoPoint(41.9, -87.6), GeoPoint(41.8, -87.7)


def readings(values_by_monitor, window=W):
    store = ReadingStore()
    for mid, values in values_by_monitor.items():
        for t, v in zip(window.hours, values):
            if v is not None:
                store.add(MonitorReading(mid, t, v))
    return store


def test_measured_mean_of_two():
    s = measured_series(CITY, SEL, readings({"a": [10.0] * 24, "b": [20.0] * 24}), W)
    assert s.values == (15.0,) * 24


def test_measured_uses_reporting_subset():
    b = [20.0] * 24
    b[4] = None
    s = measured_series(CITY, SEL, readings({"a": [10.0] * 24, "b": b}), W)
    assert s.values[4] == 10.0
    assert s.values[5] == 15.0


def test_measured_excluded_when_all_silent():
    a, b = [10.0] * 24, [20.0] * 24
    a[4] = b[4] = None
    res = measured_series(CITY, SEL, readings({"a": a, "b": b}), W)
    assert not res
    assert res.reason == "no monitor reporting at hour 5"


def forecast_store(values_by_cell, run=None, model="hrrr", window=W):
    store = ForecastStore()
    run = run or window.run_time
    for cell, values in values_by_cell.items():
        for t, v in zip(window.hours, values):
            if v is not None:
                store.add(ForecastSample(model, run, t, cell, v))
    return store


def cells(*locs, model="hrrr"):
    return CellSelection("chi", model, tuple(locs), 50.0)


def test_forecast_single_cell_in_window_order():
    vals = [float(h) for h in range(24)]
    s = forecast_series(CITY, "hrrr", cells(CELL_A), forecast_store({CELL_A: vals}), W)
    assert s.values == tuple(vals)


def test_forecast_two_cells_mean():
    v = [float(h) for h in range(24)]
    s = forecast_series(CITY, "hrrr", cells(CELL_A, CELL_B), forecast_store({CELL_A: v, CELL_B: [x + 2 for x in v]}), W)
    assert s.values == tuple(x + 1 for x in v)


def test_forecast_missing_run():
    store = forecast_store({CELL_A: [1.0] * 24}, run=utc(2023, 6, 27, 0))
    res = forecast_series(CITY, "hrrr", cells(CELL_A), store, W)
    assert res.reason == "missing run"


def test_forecast_missing_hour():
    vals = [1.0] * 24
    vals[9] = None
    res = forecast_series(CITY, "hrrr", cells(CELL_A), forecast_store({CELL_A: vals}), W)
    assert res.reason == "missing hour 10"


def test_forecast_reads_samples_labelled_by_hour_start():
    # a time-averaged 12-13UTC value is labelled 12UTC; slot 1 of the window reads the 13UTC label
    store = ForecastStore()
    run = W.run_time
    store.add(ForecastSample("geoscf", run, utc(2023, 6, 27, 12), CELL_A, 99.0))
    for k, t in enumerate(W.hours):
        store.add(ForecastSample("geoscf", run, t, CELL_A, float(k)))
    s = forecast_series(CITY, "geoscf", cells(CELL_A, model="geoscf"), store, W)
    assert s.values[0] == 0.0


@settings(max_examples=50)
@given(st.lists(st.lists(st.floats(0, 500), min_size=24, max_size=24), min_size=1, max_size=6))
def test_forecast_mean_containment(per_cell):
    locs = [GeoPoint(41.0 + 0.01 * i, -87.0) for i in range(len(per_cell))]
    store = forecast_store(dict(zip(locs, per_cell)))
    s = forecast_series(CITY, "hrrr", cells(*locs), store, W)
    for k in range(24):
        col = [vals[k] for vals in per_cell]
        assert min(col) <= s.values[k] <= max(col)


def previous_day_store(values):
    store = ReadingStore()
    for mid, v in values.items():
        store.add(MonitorReading(mid, utc(2023, 6, 26, 10), v))
    return store


def test_persistence_single_monitor():
    s = persistence_series(CITY, SEL, previous_day_store({"a": 12.0}), W)
    assert s.values == (12.0,) * 24


def test_persistence_mean():
    s = persistence_series(CITY, SEL, previous_day_store({"a": 10.0, "b": 14.0}), W)
    assert s.values == (12.0,) * 24
    assert max(s.values) - min(s.values) == 0


def test_persistence_excluded():
    store = ReadingStore()
    store.add(MonitorReading("a", utc(2023, 6, 26, 11), 5.0))
    assert not persistence_series(CITY, SEL, store, W)


def test_high_day_strict():
    w = DayWindow(D)
    at = lambda v: DaySeries.from_values(w, [10.0] * 23 + [v])  # noqa: E731
    assert not is_high_day(at(35.0), 35)
    assert is_high_day(at(35.01), 35)


# -- whole-run bundles ------------------------------------------------------


def small_run(n_cities=3, n_days=2, drop=(), models=("hrrr",)):
    cities, stations = [], []
    start = date(2023, 7, 1)
    end = start + timedelta(days=n_days - 1)
    readings_store, fstore = ReadingStore(), ForecastStore()
    for i in range(n_cities):
        center = GeoPoint(40.0, -100.0 + 3 * i)
        city = UrbanArea(f"c{i}", f"C{i}", center)
        cities.append(city)
        st_ = MonitorStation(f"c{i}-m", GeoPoint(center.lat + 0.01, center.lon))
        stations.append(st_)
        t = utc(2023, 6, 30, 0)
        while t <= DayWindow(end).hours[-1]:
            if (st_.monitor_id, t) not in drop:
                readings_store.add(MonitorReading(st_.monitor_id, t, 10.0 + i + t.hour))
            t += timedelta(hours=1)
        for d in (start + timedelta(days=k) for k in range(n_days)):
            w = DayWindow(d)
            for m in models:
                for h, t in enumerate(w.hours):
                    fstore.add(ForecastSample(m, w.run_time, t, center, float(h)))
    config = RunConfig(tuple(cities), tuple(models), (start, end))
    return config, Stores(stations, readings_store, fstore)


def test_all_present_no_exclusions():
    config, stores = small_run()
    res = build_bundles(config, stores)
    assert len(res.bundles) == 6
    assert res.exclusions == []
    assert [(b.city_id, b.label_date) for b in res.bundles] == sorted((b.city_id, b.label_date) for b in res.bundles)


def test_monitor_gap_excludes_one_city_day():
    gap = ("c1-m", utc(2023, 7, 1, 20))
    config, stores = small_run(drop={gap})
    res = build_bundles(config, stores)
    assert len(res.bundles) == 5
    (x,) = res.exclusions
    assert (x.city_id, x.date, x.model) == ("c1", "2023-07-01", ALL_MODELS)
    assert "hour 8" in x.reason


def test_forecast_gap_drops_only_that_model():
    config, stores = small_run(models=("hrrr", "cams"))
    # remove cams run for c0 on the second day by rebuilding without it
    keep = ForecastStore()
    for s in stores.forecasts.samples():
        if not (s.model == "cams" and s.run_time == DayWindow(date(2023, 7, 2)).run_time and s.location.lon == -100.0):
            keep.add(s)
    stores.forecasts = keep
    res = build_bundles(config, stores)
    assert len(res.bundles) == 6
    day2 = [b for b in res.bundles if b.city_id == "c0" and b.label_date == date(2023, 7, 2)][0]
    assert "cams" not in day2.forecasts and "hrrr" in day2.forecasts
    assert [(x.city_id, x.model, x.reason) for x in res.exclusions] == [("c0", "cams", "missing run")]


def test_city_without_monitors_skipped():
    config, stores = small_run()
    stores.stations = [s for s in stores.stations if s.monitor_id != "c2-m"]
    res = build_bundles(config, stores)
    assert {b.city_id for b in res.bundles} == {"c0", "c1"}
    assert {x.city_id for x in res.exclusions} == {"c2"}
    assert ("c2", "hrrr") in res.skipped_units(config.models, [c.id for c in config.cities])


def test_high_day_rederived():
    config, stores = small_run()
    for b in build_bundles(config, stores).bundles:
        assert b.high_day == (max(b.measured.values) > config.exceedance_threshold)


def test_parallel_matches_serial():
    config, stores = small_run(n_cities=4, drop={("c1-m", utc(2023, 7, 1, 20))})
    a, b = build_bundles(config, stores, jobs=1), build_bundles(config, stores, jobs=3)
    assert a.bundles == b.bundles and a.exclusions == b.exclusions


@settings(max_examples=25, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 2), st.integers(0, 71)), max_size=12), st.sets(st.tuples(st.integers(0, 2), st.integers(0, 71)), max_size=6))
def test_exclusion_monotone(drop1, extra):
    t0 = utc(2023, 6, 30, 0)
    to_key = lambda c, h: (f"c{c}-m", t0 + timedelta(hours=h))  # noqa: E731
    config, s1 = small_run(drop={to_key(*k) for k in drop1})
    _, s2 = small_run(drop={to_key(*k) for k in drop1 | extra})
    kept1 = {(b.city_id, b.label_date) for b in build_bundles(config, s1).bundles}
    kept2 = {(b.city_id, b.label_date) for b in build_bundles(config, s2).bundles}
    assert kept2 <= kept1


def test_exclusion_log_round_trip(tmp_path):
    config, stores = small_run(drop={("c1-m", utc(2023, 7, 1, 20))})
    res = build_bundles(config, stores)
    p = tmp_path / "x.csv"
    write_exclusions(res.exclusions, p)
    assert p.read_text().splitlines()[0] == "city_id,date,model,reason"
    assert read_exclusions(p) == res.exclusions


@pytest.mark.parametrize("hour", [0, 23])
def test_window_edges_are_checked(hour):
    a = [10.0] * 24
    a[hour] = None
    sel = MonitorSelection("chi", ("a",), (1.0,), 10.0)
    assert not measured_series(CITY, sel, readings({"a": a}), W)
