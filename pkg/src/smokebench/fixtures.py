"""Seeded synthetic scenarios written in the canonical CSV layout.

Randomness comes from numpy's PCG64 bit generator seeded with the scenario
seed and consumed in a fixed order (monitor offsets, truth noise, monitor
noise, then noisy forecasts), so a spec always regenerates the same bytes.
"""
from __future__ import annotations

import hashlib
import json
import math
import tempfile
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .core import (
    HOURS_PER_DAY,
    MIN_INGEST_CONCENTRATION,
    WINDOW_START_HOUR_UTC,
    DayWindow,
    GeoPoint,
    UrbanArea,
    at_hour,
    bounded_mean,
    date_range,
)
from .ingest import (
    ForecastSample,
    MonitorReading,
    MonitorStation,
    ReadingStore,
    format_time,
    parse_time,
    write_cities,
    write_forecast_samples,
    write_monitors,
    write_readings,
)
from .spatial import select_monitors

FORECAST_KINDS = ("perfect", "lagged", "scaled", "biased", "noisy", "constant")
DIURNAL_SHAPES = ("sine", "valley")

# cities sit on a line of latitude, far enough apart that search radii never overlap
CITY_LAT = 40.0
CITY_LON0 = -120.0
CITY_SPACING_DEG = 3.0
MONITOR_OFFSET_DEG = (0.005, 0.03)  # roughly 0.5 to 3 km
CELL_OFFSETS_DEG = ((0.0, 0.0), (0.1, 0.0), (-0.1, 0.0), (0.0, 0.1), (0.0, -0.1))
DECIMALS = 3


@dataclass(frozen=True)
class EventSpec:
    city: str
    start: date
    duration_days: int
    peak: float
    ramp_hours: int = 12

    def __post_init__(self):
        if self.duration_days < 1:
            raise ValueError("event duration must be at least one day")
        if self.ramp_hours < 0:
            raise ValueError("ramp_hours must be non-negative")


@dataclass(frozen=True)
class OutageSpec:
    """Readings removed at ``timestamp`` for ``monitors`` of ``city`` (all when empty)."""

    city: str
    timestamp: datetime
    monitors: tuple[str, ...] = ()


@dataclass(frozen=True)
class SyntheticForecastSpec:
    model: str
    kind: str
    param: Optional[float] = None

    def __post_init__(self):
        if self.kind not in FORECAST_KINDS:
            raise ValueError(f"unknown forecast kind {self.kind!r}")
        p = self.param
        if self.kind == "perfect":
            return
        if p is None or not math.isfinite(p):
            raise ValueError(f"{self.kind} forecast needs a finite parameter")
        if self.kind == "lagged" and (p != int(p) or not 0 <= p < HOURS_PER_DAY):
            raise ValueError("lag must be an integer number of hours in [0, 24)")
        if self.kind == "scaled" and p <= 0:
            raise ValueError("scale factor must be positive")
        if self.kind == "noisy" and p < 0:
            raise ValueError("noise sd must be non-negative")

    @classmethod
    def perfect(cls, model="perfect"):
        return cls(model, "perfect")

    @classmethod
    def lagged(cls, k: int, model=None):
        return cls(model or f"lag{k}", "lagged", k)

    @classmethod
    def scaled(cls, a: float, model="scaled"):
        return cls(model, "scaled", a)

    @classmethod
    def biased(cls, c: float, model="biased"):
        return cls(model, "biased", c)

    @classmethod
    def noisy(cls, sd: float, model="noisy"):
        return cls(model, "noisy", sd)

    @classmethod
    def constant(cls, v: float, model="constant"):
        return cls(model, "constant", v)


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int
    date_range: tuple[date, date]
    n_cities: int = 3
    monitors_per_city: int = 3
    baseline_level: float = 8.0
    diurnal_amplitude: float = 4.0
    diurnal_shape: str = "sine"
    valley_slot: int = 8
    noise_sd: float = 1.0
    monitor_noise_sd: float = 0.5
    events: tuple[EventSpec, ...] = ()
    outages: tuple[OutageSpec, ...] = ()
    forecasts: tuple[SyntheticForecastSpec, ...] = ()

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.date_range[0] > self.date_range[1]:
            raise ValueError("date_range start after end")
        if self.n_cities < 1 or not 1 <= self.monitors_per_city <= 10:
            raise ValueError("need at least one city and 1..10 monitors per city")
        if self.noise_sd < 0 or self.monitor_noise_sd < 0:
            raise ValueError("noise sd must be non-negative")
        if self.diurnal_shape not in DIURNAL_SHAPES:
            raise ValueError(f"diurnal_shape must be one of {DIURNAL_SHAPES}")
        if not 0 <= self.valley_slot < HOURS_PER_DAY:
            raise ValueError("valley_slot must be in [0, 24)")
        ids = set(self.city_ids)
        for ev in self.events:
            if ev.city not in ids:
                raise ValueError(f"event names unknown city {ev.city!r}")
            if ev.peak <= self.baseline_level:
                raise ValueError("event peak must exceed baseline_level")
        for o in self.outages:
            if o.city not in ids:
                raise ValueError(f"outage names unknown city {o.city!r}")
        models = [f.model for f in self.forecasts]
        if len(set(models)) != len(models):
            raise ValueError("forecast model names must be unique")

    @property
    def city_ids(self) -> list[str]:
        return [f"c{i + 1:02d}" for i in range(self.n_cities)]

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "date_range": [d.isoformat() for d in self.date_range],
            "n_cities": self.n_cities,
            "monitors_per_city": self.monitors_per_city,
            "baseline_level": self.baseline_level,
            "diurnal_amplitude": self.diurnal_amplitude,
            "diurnal_shape": self.diurnal_shape,
            "valley_slot": self.valley_slot,
            "noise_sd": self.noise_sd,
            "monitor_noise_sd": self.monitor_noise_sd,
            "events": [
                {"city": e.city, "start": e.start.isoformat(), "duration_days": e.duration_days,
                 "peak": e.peak, "ramp_hours": e.ramp_hours}
                for e in self.events
            ],
            "outages": [
                {"city": o.city, "timestamp": format_time(o.timestamp), "monitors": list(o.monitors)}
                for o in self.outages
            ],
            "forecasts": [
                {"model": f.model, "kind": f.kind, **({} if f.param is None else {"param": f.param})}
                for f in self.forecasts
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ScenarioSpec":
        doc = dict(doc)
        try:
            doc["date_range"] = tuple(date.fromisoformat(d) for d in doc["date_range"])
            doc["events"] = tuple(
                EventSpec(e["city"], date.fromisoformat(e["start"]), int(e["duration_days"]), float(e["peak"]),
                          int(e.get("ramp_hours", 12)))
                for e in doc.get("events", [])
            )
            doc["outages"] = tuple(
                OutageSpec(o["city"], parse_time(o["timestamp"]), tuple(o.get("monitors", ())))
                for o in doc.get("outages", [])
            )
            doc["forecasts"] = tuple(
                SyntheticForecastSpec(f["model"], f["kind"], f.get("param")) for f in doc.get("forecasts", [])
            )
            return cls(**doc)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"bad scenario spec: {exc}") from None


def default_scenario(seed: int = 1) -> ScenarioSpec:
    """Three cities over a month, one smoke episode each, and a few forecast families."""
    return ScenarioSpec(
        seed=seed,
        date_range=(date(2023, 6, 15), date(2023, 7, 14)),
        events=(
            EventSpec("c01", date(2023, 6, 26), 3, 90.0, 12),
            EventSpec("c02", date(2023, 7, 5), 2, 60.0, 8),
            EventSpec("c03", date(2023, 7, 10), 1, 50.0, 6),
        ),
        forecasts=(
            SyntheticForecastSpec.perfect(),
            SyntheticForecastSpec.lagged(6),
            SyntheticForecastSpec.scaled(2.0),
            SyntheticForecastSpec.noisy(3.0),
        ),
    )


# -- truth -----------------------------------------------------------------


def _hours(spec: ScenarioSpec) -> list[datetime]:
    """Every hour from the previous-day persistence reading to the last window hour."""
    start = at_hour(spec.date_range[0] - timedelta(days=1), 0)
    end = DayWindow(spec.date_range[1]).hours[-1]
    n = int((end - start).total_seconds() // 3600) + 1
    return [start + timedelta(hours=i) for i in range(n)]


def _diurnal(spec: ScenarioSpec, t: datetime) -> float:
    slot = (t.hour - WINDOW_START_HOUR_UTC) % HOURS_PER_DAY
    if spec.diurnal_shape == "sine":
        return spec.diurnal_amplitude * math.sin(2 * math.pi * slot / HOURS_PER_DAY)
    # one sharp minimum per window; the slope is amplitude per 12 hours
    return spec.diurnal_amplitude * abs(slot - spec.valley_slot) / 12


def _plume(spec: ScenarioSpec, city: str, t: datetime) -> float:
    total = 0.0
    for ev in spec.events:
        if ev.city != city:
            continue
        t0 = at_hour(ev.start, 0)
        t1 = t0 + timedelta(days=ev.duration_days)
        if not t0 <= t < t1:
            continue
        h_in = (t - t0).total_seconds() / 3600
        h_out = (t1 - t).total_seconds() / 3600
        frac = 1.0 if ev.ramp_hours == 0 else min(1.0, h_in / ev.ramp_hours, h_out / ev.ramp_hours)
        total += (ev.peak - spec.baseline_level) * frac
    return total


def _round(v: float) -> float:
    return round(float(v), DECIMALS)


@dataclass
class Scenario:
    cities: list
    stations: list
    readings: ReadingStore
    forecasts: dict  # model -> list[ForecastSample]
    truth: dict  # city_id -> np.ndarray over hours()
    hours: list = field(default_factory=list)


def build_scenario(spec: ScenarioSpec) -> Scenario:
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    hours = _hours(spec)
    cities, stations, by_city = [], [], {}
    for i, cid in enumerate(spec.city_ids):
        center = GeoPoint(CITY_LAT, CITY_LON0 + CITY_SPACING_DEG * i)
        cities.append(UrbanArea(cid, f"City {i + 1:02d}", center))
        lo, hi = MONITOR_OFFSET_DEG
        mags = rng.uniform(lo, hi, size=spec.monitors_per_city)
        angles = rng.uniform(0.0, 2 * math.pi, size=spec.monitors_per_city)
        by_city[cid] = []
        for j in range(spec.monitors_per_city):
            loc = GeoPoint(
                _round(center.lat + mags[j] * math.sin(angles[j])),
                _round(center.lon + mags[j] * math.cos(angles[j])),
            )
            st = MonitorStation(f"{cid}-m{j + 1}", loc)
            stations.append(st)
            by_city[cid].append(st)

    truth = {}
    for cid in spec.city_ids:
        base = np.array([spec.baseline_level + _diurnal(spec, t) + _plume(spec, cid, t) for t in hours])
        noise = rng.normal(0.0, spec.noise_sd, size=len(hours)) if spec.noise_sd > 0 else np.zeros(len(hours))
        truth[cid] = np.maximum(base + noise, 0.0)

    dropped = set()
    for o in spec.outages:
        for st in by_city[o.city]:
            if not o.monitors or st.monitor_id in o.monitors:
                dropped.add((st.monitor_id, o.timestamp))

    readings = ReadingStore()
    for cid in spec.city_ids:
        for st in by_city[cid]:
            if spec.monitor_noise_sd > 0:
                noise = rng.normal(0.0, spec.monitor_noise_sd, size=len(hours))
            else:
                noise = np.zeros(len(hours))
            values = np.maximum(truth[cid] + noise, 0.0)
            for t, v in zip(hours, values):
                if (st.monitor_id, t) not in dropped:
                    readings.add(MonitorReading(st.monitor_id, t, _round(v)))

    forecasts = {}
    for fspec in spec.forecasts:
        forecasts[fspec.model] = _forecast_samples(spec, fspec, cities, stations, readings, truth, hours, rng)
    return Scenario(cities, stations, readings, forecasts, truth, hours)


def _city_measured(city, stations, readings: ReadingStore, spec: ScenarioSpec, truth, hours) -> dict:
    """The per-hour city mean the evaluation will compute, falling back to truth where no monitor reports."""
    selection = select_monitors(city, stations, spec.date_range)
    index = {t: i for i, t in enumerate(hours)}
    out = {}
    for t in hours:
        present = [v for v in (readings.get(m, t) for m in selection.monitor_ids) if v is not None]
        out[t] = bounded_mean(present) if present else _round(truth[city.id][index[t]])
    return out


def _apply(fspec: SyntheticForecastSpec, m: list[float], rng) -> list[float]:
    p = fspec.param
    if fspec.kind == "perfect":
        return list(m)
    if fspec.kind == "lagged":
        k = int(p)
        return [m[max(j - k, 0)] for j in range(HOURS_PER_DAY)]  # early slots hold the edge value
    if fspec.kind == "scaled":
        return [p * v for v in m]
    if fspec.kind == "biased":
        return [v + p for v in m]
    if fspec.kind == "noisy":
        if p == 0:
            return list(m)
        return [max(v + e, 0.0) for v, e in zip(m, rng.normal(0.0, p, size=HOURS_PER_DAY))]  # clipped like truth
    return [float(p)] * HOURS_PER_DAY


def _forecast_samples(spec, fspec, cities, stations, readings, truth, hours, rng) -> list[ForecastSample]:
    samples = []
    for city in cities:
        measured = _city_measured(city, stations, readings, spec, truth, hours)
        cells = [GeoPoint(city.center.lat + dlat, city.center.lon + dlon) for dlat, dlon in CELL_OFFSETS_DEG]
        for d in date_range(*spec.date_range):
            window = DayWindow(d)
            values = _apply(fspec, [measured[t] for t in window.hours], rng)
            if min(values) < MIN_INGEST_CONCENTRATION:
                raise ValueError(f"{fspec.model}: forecast below {MIN_INGEST_CONCENTRATION:g} on {d}")
            for t, v in zip(window.hours, values):
                for cell in cells:
                    samples.append(ForecastSample(fspec.model, window.run_time, t, cell, float(v)))
    return samples


# -- files -----------------------------------------------------------------


def forecast_filename(model: str) -> str:
    return f"forecast_{model}.csv"


def write_scenario(scenario: Scenario, spec: ScenarioSpec, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / "cities.csv", out_dir / "monitors.csv", out_dir / "readings.csv"]
    write_cities(scenario.cities, paths[0])
    write_monitors(scenario.stations, paths[1])
    write_readings(scenario.readings, paths[2])
    for model, samples in scenario.forecasts.items():
        p = out_dir / forecast_filename(model)
        write_forecast_samples(samples, p)
        paths.append(p)
    models = list(scenario.forecasts)
    config = {
        "cities": "cities.csv",
        "models": models,
        "date_range": [d.isoformat() for d in spec.date_range],
        "inputs": {
            "monitors": "monitors.csv",
            "readings": "readings.csv",
            "forecasts": {m: forecast_filename(m) for m in models},
        },
    }
    for name, doc in (("config.json", config), ("scenario.json", spec.to_json())):
        p = out_dir / name
        p.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        paths.append(p)
    return paths


def generate(spec: ScenarioSpec, out_dir) -> list[Path]:
    """Write the scenario's CSV inputs plus a ready-to-run ``config.json``."""
    return write_scenario(build_scenario(spec), spec, out_dir)


def digest_dir(path) -> dict[str, str]:
    """SHA-256 per file, keyed by path relative to ``path``."""
    root = Path(path)
    return {
        p.relative_to(root).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    first_difference: Optional[str] = None

    def __bool__(self):
        return self.ok


def regenerate_check(spec: ScenarioSpec, previous: Union[dict, str, Path]) -> CheckResult:
    """Regenerate ``spec`` and compare against a previous output directory or its digest."""
    expected = previous if isinstance(previous, dict) else digest_dir(previous)
    with tempfile.TemporaryDirectory() as tmp:
        generate(spec, tmp)
        actual = digest_dir(tmp)
    for name in sorted(set(expected) | set(actual)):
        if expected.get(name) != actual.get(name):
            return CheckResult(False, name)
    return CheckResult(True)


def load_spec(path) -> ScenarioSpec:
    return ScenarioSpec.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
