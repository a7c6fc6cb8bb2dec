"""Canonical CSV loaders, in-memory stores, and the archive downloader.

Row numbers in diagnostics are physical line numbers, so the header is row 1
and the first data row is row 2.
"""
from __future__ import annotations

import csv
import logging
import os
import urllib.error
import urllib.request
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Optional

from .core import (
    GeoPoint,
    SmokebenchError,
    UrbanArea,
    check_concentration,
    date_range,
    geopoint_problem,
)
from .spatial import haversine_km

log = logging.getLogger(__name__)

MONITOR_COLUMNS = ("monitor_id", "lat", "lon")
READING_COLUMNS = ("monitor_id", "timestamp", "pm25")
CITY_COLUMNS = ("city_id", "name", "lat", "lon")
FORECAST_COLUMNS = ("model", "run_time", "valid_time", "lat", "lon", "pm25")

HTTP_TIMEOUT_SECS = 60.0
MAX_REDIRECTS = 5


class ParseError(SmokebenchError, ValueError):
    def __init__(self, problems, path=None):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        self.path = path
        text = "; ".join(self.problems)
        super().__init__(text if path is None else f"{path}: {text}")


class ConflictError(SmokebenchError, ValueError):
    """Two records claim the same identity."""


class UnknownReferenceError(SmokebenchError, KeyError):
    """A record refers to an id that was never loaded."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ConfigError(SmokebenchError, ValueError):
    pass


def format_time(t: datetime) -> str:
    return t.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_time(text: str) -> datetime:
    """Parse ``YYYY-MM-DDTHH:MM:SSZ``; the instant must be hour-aligned."""
    text = text.strip()
    if not text.endswith("Z"):
        raise ValueError(f"timestamp {text!r} lacks trailing Z")
    try:
        t = datetime.fromisoformat(text[:-1])
    except ValueError:
        raise ValueError(f"bad timestamp {text!r}") from None
    if t.tzinfo is not None:
        raise ValueError(f"bad timestamp {text!r}")
    if t.minute or t.second or t.microsecond:
        raise ValueError(f"timestamp {text} not hour-aligned")
    return t.replace(tzinfo=timezone.utc)


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _read_rows(path, columns, *, optional=()):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = tuple(reader.fieldnames or ())
        if header[: len(columns)] != columns or not set(header[len(columns):]) <= set(optional):
            raise ParseError(f"{path}: expected header {','.join(columns)}, got {','.join(header)}")
        for row in reader:
            yield reader.line_num, row


def _float_field(row, name):
    raw = row.get(name)
    if raw is None or raw.strip() == "":
        raise ValueError(f"missing {name}")
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"bad {name} {raw!r}") from None


def _point(row) -> GeoPoint:
    lat, lon = _float_field(row, "lat"), _float_field(row, "lon")
    problem = geopoint_problem(lat, lon)
    if problem:
        raise ValueError(problem)
    return GeoPoint(lat, lon)


def _concentration(row, name="pm25") -> float:
    v = _float_field(row, name)
    problem = check_concentration(v)
    if problem:
        raise ValueError(f"{name} {problem}")
    return v


# -- monitors and cities ---------------------------------------------------


@dataclass(frozen=True)
class MonitorStation:
    monitor_id: str
    location: GeoPoint
    active_range: Optional[tuple[Optional[date], Optional[date]]] = None


def load_monitors(path) -> list[MonitorStation]:
    """Load ``monitors.csv``; optional ``first_date``/``last_date`` columns bound activity."""
    stations, problems, seen = [], [], {}
    for line, row in _read_rows(path, MONITOR_COLUMNS, optional=("first_date", "last_date")):
        mid = (row.get("monitor_id") or "").strip()
        try:
            if not mid:
                raise ValueError("missing monitor_id")
            loc = _point(row)
            first = row.get("first_date") or None
            last = row.get("last_date") or None
            rng = None
            if first or last:
                rng = (date.fromisoformat(first) if first else None, date.fromisoformat(last) if last else None)
        except ValueError as exc:
            problems.append(f"row {line}: {exc}")
            continue
        if mid in seen:
            raise ConflictError(f"{path}: row {line}: monitor_id {mid!r} already defined at row {seen[mid]}")
        seen[mid] = line
        stations.append(MonitorStation(mid, loc, rng))
    if problems:
        raise ParseError(problems, path)
    return stations


def load_cities(path) -> list[UrbanArea]:
    cities, problems, seen = [], [], set()
    for line, row in _read_rows(path, CITY_COLUMNS):
        try:
            cid, name = (row.get("city_id") or "").strip(), (row.get("name") or "").strip()
            if not cid or not name:
                raise ValueError("missing city_id or name")
            city = UrbanArea(cid, name, _point(row))
        except ValueError as exc:
            problems.append(f"row {line}: {exc}")
            continue
        if cid in seen:
            raise ConflictError(f"{path}: row {line}: city_id {cid!r} duplicated")
        seen.add(cid)
        cities.append(city)
    if problems:
        raise ParseError(problems, path)
    return cities


def write_cities(cities: Iterable[UrbanArea], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CITY_COLUMNS)
        for c in cities:
            w.writerow([c.id, c.name, _fmt_float(c.center.lat), _fmt_float(c.center.lon)])


def write_monitors(stations: Iterable[MonitorStation], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MONITOR_COLUMNS)
        for st in sorted(stations, key=lambda s: s.monitor_id):
            w.writerow([st.monitor_id, _fmt_float(st.location.lat), _fmt_float(st.location.lon)])


# -- readings --------------------------------------------------------------


@dataclass(frozen=True)
class MonitorReading:
    monitor_id: str
    timestamp: datetime
    value: float


@dataclass
class ReadingStore:
    """Hourly readings keyed by ``(monitor_id, timestamp)``.

    Timestamps label the hour that begins at that instant.
    """

    values: dict = field(default_factory=dict)
    duplicates: int = 0
    negatives: int = 0

    def get(self, monitor_id: str, timestamp: datetime) -> Optional[float]:
        return self.values.get((monitor_id, timestamp))

    def add(self, reading: MonitorReading) -> None:
        key = (reading.monitor_id, reading.timestamp)
        if key in self.values:
            self.duplicates += 1
        if reading.value < 0:
            self.negatives += 1
        self.values[key] = reading.value

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        return isinstance(other, ReadingStore) and self.values == other.values

    def readings(self) -> list[MonitorReading]:
        return [MonitorReading(m, t, v) for (m, t), v in sorted(self.values.items())]


def load_readings(path, stations: Iterable[MonitorStation]) -> ReadingStore:
    """Load ``readings.csv``. Duplicate keys keep the last value and are counted."""
    known = {st.monitor_id for st in stations}
    store, problems, unknown = ReadingStore(), [], []
    for line, row in _read_rows(path, READING_COLUMNS):
        mid = (row.get("monitor_id") or "").strip()
        try:
            ts = parse_time(row.get("timestamp") or "")
            value = _concentration(row)
        except ValueError as exc:
            problems.append(f"row {line}: {exc}")
            continue
        if mid not in known:
            unknown.append(f"row {line}: unknown monitor_id {mid!r}")
            continue
        store.add(MonitorReading(mid, ts, value))
    if problems:
        raise ParseError(problems, path)
    if unknown:
        raise UnknownReferenceError("; ".join(unknown))
    if store.duplicates:
        log.warning("%s: %d duplicate readings replaced (last wins)", path, store.duplicates)
    if store.negatives:
        log.info("%s: %d negative readings retained", path, store.negatives)
    return store


def write_readings(store: ReadingStore, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(READING_COLUMNS)
        for (mid, ts), v in sorted(store.values.items()):
            w.writerow([mid, format_time(ts), _fmt_float(v)])


# -- forecasts -------------------------------------------------------------


@dataclass(frozen=True)
class ForecastSample:
    model: str
    run_time: datetime
    valid_time: datetime
    location: GeoPoint
    value: float


class ForecastStore:
    """Forecast samples indexed by model, run time, valid time and location."""

    def __init__(self):
        self._data = defaultdict(lambda: defaultdict(lambda: defaultdict(dict)))
        self._locations = defaultdict(set)

    def add(self, s: ForecastSample) -> None:
        self._data[s.model][s.run_time][s.valid_time][s.location] = s.value
        self._locations[s.model].add(s.location)

    def __len__(self):
        return sum(
            len(cells) for runs in self._data.values() for valid in runs.values() for cells in valid.values()
        )

    @property
    def models(self) -> list[str]:
        return sorted(self._data)

    def locations(self, model: str) -> list[GeoPoint]:
        return sorted(self._locations.get(model, ()))

    def has_run(self, model: str, run_time: datetime) -> bool:
        return run_time in self._data.get(model, {})

    def value(self, model, run_time, valid_time, location) -> Optional[float]:
        return self._data.get(model, {}).get(run_time, {}).get(valid_time, {}).get(location)

    def query(self, model, run_time, valid_from, valid_to, center: GeoPoint, radius_km: float):
        """Samples of one run with ``valid_from <= valid_time <= valid_to`` inside the circle."""
        out = []
        run = self._data.get(model, {}).get(run_time, {})
        for vt in sorted(run):
            if valid_from <= vt <= valid_to:
                for loc, v in sorted(run[vt].items()):
                    if haversine_km(center, loc) <= radius_km:
                        out.append(ForecastSample(model, run_time, vt, loc, v))
        return out

    def samples(self) -> list[ForecastSample]:
        out = []
        for model in sorted(self._data):
            for rt in sorted(self._data[model]):
                for vt in sorted(self._data[model][rt]):
                    for loc, v in sorted(self._data[model][rt][vt].items()):
                        out.append(ForecastSample(model, rt, vt, loc, v))
        return out


def load_forecast_samples(path, model=None, store: Optional[ForecastStore] = None) -> ForecastStore:
    """Load a forecast CSV into ``store`` (a new one by default).

    ``model`` is a model id or a collection of ids; rows naming any other
    model raise :class:`ConfigError`. ``None`` accepts every model.
    """
    allowed = None if model is None else ({model} if isinstance(model, str) else set(model))
    store = ForecastStore() if store is None else store
    problems = []
    for line, row in _read_rows(path, FORECAST_COLUMNS):
        name = (row.get("model") or "").strip()
        if allowed is not None and name not in allowed:
            raise ConfigError(f"row {line}: model {name!r} not declared in the run configuration")
        try:
            run = parse_time(row.get("run_time") or "")
            valid = parse_time(row.get("valid_time") or "")
            if valid < run:
                raise ValueError("valid_time before run_time")
            sample = ForecastSample(name, run, valid, _point(row), _concentration(row))
        except ValueError as exc:
            problems.append(f"row {line}: {exc}")
            continue
        store.add(sample)
    if problems:
        raise ParseError(problems, path)
    return store


def write_forecast_samples(samples: Iterable[ForecastSample], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FORECAST_COLUMNS)
        for s in samples:
            w.writerow(
                [
                    s.model,
                    format_time(s.run_time),
                    format_time(s.valid_time),
                    _fmt_float(s.location.lat),
                    _fmt_float(s.location.lon),
                    _fmt_float(s.value),
                ]
            )


# -- archive fetching ------------------------------------------------------


class _LimitedRedirects(urllib.request.HTTPRedirectHandler):
    max_redirections = MAX_REDIRECTS


@dataclass(frozen=True)
class FetchResult:
    date: date
    path: Path
    bytes: int
    status: str  # "downloaded", "skipped" or "failed"
    error: str = ""


def http_timeout() -> float:
    raw = os.environ.get("SMOKEBENCH_HTTP_TIMEOUT_SECS")
    if not raw:
        return HTTP_TIMEOUT_SECS
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"SMOKEBENCH_HTTP_TIMEOUT_SECS={raw!r} is not a number") from None
    if value <= 0:
        raise ConfigError("SMOKEBENCH_HTTP_TIMEOUT_SECS must be positive")
    return value


def archive_name(model: str, day: date) -> str:
    return f"{model}_{day.isoformat()}"


def _fetch_one(opener, url: str, dest: Path, timeout: float) -> int:
    tmp = dest.with_name(dest.name + ".part")
    try:
        with opener.open(url, timeout=timeout) as resp, open(tmp, "wb") as out:
            total = 0
            while True:
                chunk = resp.read(1 << 16)
                if not chunk:
                    break
                out.write(chunk)
                total += len(chunk)
        os.replace(tmp, dest)
        return total
    finally:
        if tmp.exists():
            tmp.unlink()


def fetch_archives(
    url_template: str,
    model: str,
    dates: tuple[date, date],
    dest_dir,
    *,
    force: bool = False,
    workers: int = 4,
    timeout: Optional[float] = None,
) -> list[FetchResult]:
    """Download one archive per date to ``dest_dir/{model}_{date}``.

    ``url_template`` is formatted with ``model`` and ``date`` (a ``datetime.date``,
    so ``{date:%Y%m%d}`` works). Failures are recorded per date, never raised.
    """
    if "{model" not in url_template or "{date" not in url_template:
        raise ConfigError("url_template needs {model} and {date} placeholders")
    dest_dir = Path(dest_dir)
    dest_dir.mkdir(parents=True, exist_ok=True)
    timeout = http_timeout() if timeout is None else timeout
    opener = urllib.request.build_opener(_LimitedRedirects())

    def one(day: date) -> FetchResult:
        dest = dest_dir / archive_name(model, day)
        if dest.exists() and not force:
            return FetchResult(day, dest, 0, "skipped")
        url = url_template.format(model=model, date=day)
        try:
            n = _fetch_one(opener, url, dest, timeout)
        except (urllib.error.URLError, OSError, ValueError) as exc:
            log.warning("fetch %s failed: %s", url, exc)
            return FetchResult(day, dest, 0, "failed", str(exc))
        return FetchResult(day, dest, n, "downloaded")

    days = date_range(*dates)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(one, days))

