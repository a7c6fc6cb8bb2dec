import dataclasses
import json
from datetime import date, timedelta

import numpy as np
import pytest

from smokebench.align import build_bundles
from smokebench.config import load_config
from smokebench.core import DayWindow, utc
from smokebench.evaluate import load_inputs
from smokebench.fixtures import (
    OutageSpec,
    ScenarioSpec,
    SyntheticForecastSpec,
    build_scenario,
    default_scenario,
    digest_dir,
    generate,
    load_spec,
    regenerate_check,
)
from smokebench.ingest import load_cities

SMALL = ScenarioSpec(seed=7, date_range=(date(2023, 7, 1), date(2023, 7, 3)), n_cities=2, monitors_per_city=2)


def window_values(scenario, model, city_id, d):
    w = DayWindow(d)
    loc = next(c.center for c in scenario.cities if c.id == city_id)
    by_hour = {s.valid_time: s.value for s in scenario.forecasts[model] if s.location == loc and s.run_time == w.run_time}
    return [by_hour[t] for t in w.hours]


def city_mean(scenario, city_id, d):
    ids = [s.monitor_id for s in scenario.stations if s.monitor_id.startswith(city_id + "-")]
    out = []
    for t in DayWindow(d).hours:
        vals = [v for v in (scenario.readings.get(m, t) for m in ids) if v is not None]
        out.append(sum(vals) / len(vals))
    return out


def test_same_seed_same_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    generate(SMALL, a)
    generate(SMALL, b)
    assert digest_dir(a) == digest_dir(b)


def test_regenerate_check(tmp_path):
    generate(SMALL, tmp_path)
    assert regenerate_check(SMALL, tmp_path)
    other = regenerate_check(dataclasses.replace(SMALL, seed=8), tmp_path)
    assert not other and other.first_difference == "monitors.csv"
    noisier = regenerate_check(dataclasses.replace(SMALL, noise_sd=2.0), digest_dir(tmp_path))
    assert not noisier and noisier.first_difference == "readings.csv"


def test_generated_files_load(tmp_path):
    spec = default_scenario(3)
    generate(spec, tmp_path)
    config = load_config(tmp_path / "config.json")
    assert [c.id for c in load_cities(tmp_path / "cities.csv")] == spec.city_ids
    stores = load_inputs(config)
    assert len(stores.stations) == spec.n_cities * spec.monitors_per_city
    assert stores.readings.duplicates == 0 and stores.readings.negatives == 0
    res = build_bundles(config, stores)
    assert len(res.bundles) == spec.n_cities * 30 and res.exclusions == []


def test_spec_json_round_trip(tmp_path):
    spec = dataclasses.replace(
        default_scenario(5), outages=(OutageSpec("c02", utc(2023, 6, 20, 3), ("c02-m1",)),)
    )
    p = tmp_path / "s.json"
    p.write_text(json.dumps(spec.to_json()))
    assert load_spec(p) == spec


@pytest.mark.parametrize(
    "kwargs",
    [
        {"seed": -1},
        {"monitors_per_city": 11},
        {"noise_sd": -1.0},
        {"diurnal_shape": "square"},
        {"date_range": (date(2023, 7, 2), date(2023, 7, 1))},
        {"forecasts": (SyntheticForecastSpec.perfect("a"), SyntheticForecastSpec.noisy(1.0, "a"))},
    ],
)
def test_invalid_spec(kwargs):
    base = dict(seed=1, date_range=(date(2023, 7, 1), date(2023, 7, 2)))
    base.update(kwargs)
    with pytest.raises(ValueError):
        ScenarioSpec(**base)


@pytest.mark.parametrize("args", [("lagged", 2.5), ("lagged", 24), ("scaled", 0.0), ("scaled", -1.0), ("noisy", -1.0), ("biased", None)])
def test_invalid_forecast_spec(args):
    with pytest.raises(ValueError):
        SyntheticForecastSpec("m", *args)


def test_outage_removes_exactly_listed_hours():
    t = utc(2023, 7, 2, 5)
    spec = dataclasses.replace(SMALL, outages=(OutageSpec("c01", t),))
    base, cut = build_scenario(SMALL), build_scenario(spec)
    missing = set(base.readings.values) - set(cut.readings.values)
    assert missing == {("c01-m1", t), ("c01-m2", t)}
    assert all(v == base.readings.values[k] for k, v in cut.readings.values.items())


def test_outage_of_one_monitor():
    t = utc(2023, 7, 2, 5)
    spec = dataclasses.replace(SMALL, outages=(OutageSpec("c02", t, ("c02-m2",)),))
    missing = set(build_scenario(SMALL).readings.values) - set(build_scenario(spec).readings.values)
    assert missing == {("c02-m2", t)}


def test_forecast_families_follow_measured_mean():
    fs = (
        SyntheticForecastSpec.perfect(),
        SyntheticForecastSpec.lagged(3),
        SyntheticForecastSpec.scaled(2.0),
        SyntheticForecastSpec.biased(4.0),
        SyntheticForecastSpec.constant(9.5),
    )
    sc = build_scenario(dataclasses.replace(SMALL, forecasts=fs))
    d = date(2023, 7, 2)
    m = city_mean(sc, "c01", d)
    assert window_values(sc, "perfect", "c01", d) == pytest.approx(m, abs=1e-12)
    lag = window_values(sc, "lag3", "c01", d)
    assert lag[:3] == pytest.approx([m[0]] * 3) and lag[3:] == pytest.approx(m[:-3])
    assert window_values(sc, "scaled", "c01", d) == pytest.approx([2 * v for v in m])
    assert window_values(sc, "biased", "c01", d) == pytest.approx([v + 4 for v in m])
    assert window_values(sc, "constant", "c01", d) == [9.5] * 24


def test_cells_share_values():
    sc = build_scenario(dataclasses.replace(SMALL, forecasts=(SyntheticForecastSpec.perfect(),)))
    samples = sc.forecasts["perfect"]
    w = DayWindow(date(2023, 7, 1))
    per_time = {}
    for s in samples:
        if s.run_time == w.run_time and s.location.lon < -119.0:
            per_time.setdefault(s.valid_time, set()).add(s.value)
    assert all(len(v) == 1 for v in per_time.values())


def test_noisy_zero_is_perfect():
    fs = (SyntheticForecastSpec.perfect(), SyntheticForecastSpec.noisy(0.0))
    sc = build_scenario(dataclasses.replace(SMALL, forecasts=fs))
    assert [s.value for s in sc.forecasts["noisy"]] == [s.value for s in sc.forecasts["perfect"]]


def test_valley_shape_is_exact():
    spec = dataclasses.replace(
        SMALL, diurnal_shape="valley", diurnal_amplitude=12.0, noise_sd=0.0, monitor_noise_sd=0.0, valley_slot=8
    )
    sc = build_scenario(spec)
    m = city_mean(sc, "c01", date(2023, 7, 2))
    assert int(np.argmin(m)) == 8
    assert m == pytest.approx([spec.baseline_level + abs(k - 8) for k in range(24)])


def test_event_raises_levels():
    sc = build_scenario(default_scenario(1))
    idx = {t: i for i, t in enumerate(sc.hours)}
    during = sc.truth["c01"][idx[utc(2023, 6, 27, 12)]]
    before = sc.truth["c01"][idx[utc(2023, 6, 20, 12)]]
    assert during > 35 > before
    assert (sc.truth["c01"] >= 0).all()


def test_hours_cover_persistence_reading():
    sc = build_scenario(SMALL)
    assert sc.hours[0] <= DayWindow(SMALL.date_range[0]).persistence_time
    assert sc.hours[-1] == DayWindow(SMALL.date_range[1]).hours[-1]
    assert all(b - a == timedelta(hours=1) for a, b in zip(sc.hours, sc.hours[1:]))
