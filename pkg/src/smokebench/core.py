"""Shared vocabulary: locations, decision windows, hourly day series.

All concentrations are PM2.5 mass concentrations in µg/m³; records carry no
unit field. Hours are stored zero-based (slot ``k`` in 0..23) and reported
one-based (hour ``h = k + 1``) wherever a formula index is shown to users.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from typing import Iterable, Optional, Sequence

HOURS_PER_DAY = 24
WINDOW_START_HOUR_UTC = 13
FORECAST_RUN_HOUR_UTC = 12
PERSISTENCE_HOUR_UTC = 10

# monitor calibration can report slightly negative values; below this we reject
MIN_INGEST_CONCENTRATION = -5.0
DEFAULT_THRESHOLD = 35.0

PERSISTENCE = "persistence"
MEASURED = "measured"
KNOWN_MODELS = ("hrrr", "geoscf", "cams", "naqfc")


class SmokebenchError(Exception):
    """Base class for all errors raised by this package."""


class SeriesError(SmokebenchError, ValueError):
    """A day series violated a metric precondition (incomplete, misaligned)."""


def utc(year: int, month: int, day: int, hour: int = 0) -> datetime:
    return datetime(year, month, day, hour, tzinfo=timezone.utc)


def at_hour(d: date, hour: int) -> datetime:
    """UTC instant ``hour``:00 on calendar date ``d``."""
    return datetime(d.year, d.month, d.day, tzinfo=timezone.utc) + timedelta(hours=hour)


def is_baseline(model: str) -> bool:
    return model == PERSISTENCE


def check_concentration(value: float, *, ingest: bool = True) -> Optional[str]:
    """Return a problem description, or None when ``value`` is admissible."""
    if not math.isfinite(value):
        return "non-finite"
    floor = MIN_INGEST_CONCENTRATION if ingest else 0.0
    if value < floor:
        return f"below {floor:g}"
    return None


@dataclass(frozen=True, order=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        problem = geopoint_problem(self.lat, self.lon)
        if problem:
            raise ValueError(problem)


def geopoint_problem(lat: float, lon: float) -> Optional[str]:
    if not (math.isfinite(lat) and math.isfinite(lon)):
        return "coordinates not finite"
    if not -90.0 <= lat <= 90.0:
        return "lat out of range"
    if not -180.0 <= lon < 180.0:
        return "lon out of range"
    return None


@dataclass(frozen=True)
class UrbanArea:
    id: str
    name: str
    center: GeoPoint

    def __post_init__(self):
        if not self.id:
            raise ValueError("urban area id is empty")
        if not self.name:
            raise ValueError(f"urban area {self.id!r} has an empty name")


@dataclass(frozen=True, order=True)
class DayWindow:
    """24 hourly UTC instants from 13:00 on ``label_date`` to 12:00 the next day."""

    label_date: date

    @property
    def start(self) -> datetime:
        return at_hour(self.label_date, WINDOW_START_HOUR_UTC)

    @property
    def hours(self) -> tuple[datetime, ...]:
        start = self.start
        return tuple(start + timedelta(hours=k) for k in range(HOURS_PER_DAY))

    @property
    def run_time(self) -> datetime:
        """Issue time of the forecast run evaluated over this window."""
        return at_hour(self.label_date, FORECAST_RUN_HOUR_UTC)

    @property
    def persistence_time(self) -> datetime:
        """Monitor instant that seeds the persistence baseline (10UTC, previous day)."""
        return at_hour(self.label_date - timedelta(days=1), PERSISTENCE_HOUR_UTC)

    def slot_of(self, instant: datetime) -> Optional[int]:
        offset = (instant - self.start).total_seconds() / 3600.0
        k = int(offset)
        if k != offset or not 0 <= k < HOURS_PER_DAY:
            return None
        return k

    @classmethod
    def containing(cls, instant: datetime) -> "DayWindow":
        """The window whose span covers ``instant`` (hour-aligned UTC)."""
        shifted = instant - timedelta(hours=WINDOW_START_HOUR_UTC)
        return cls(shifted.date())


@dataclass(frozen=True)
class DaySeries:
    """Hourly series over one decision window; ``None`` marks a missing slot."""

    window: DayWindow
    values: tuple[Optional[float], ...]
    source: str = MEASURED

    @classmethod
    def from_values(cls, window: DayWindow, values: Iterable[Optional[float]], source: str = MEASURED):
        return cls(window, tuple(None if v is None else float(v) for v in values), source)

    @classmethod
    def constant(cls, window: DayWindow, value: float, source: str = PERSISTENCE):
        return cls(window, (float(value),) * HOURS_PER_DAY, source)

    @property
    def coverage(self) -> tuple[bool, ...]:
        return tuple(v is not None for v in self.values)

    @property
    def complete(self) -> bool:
        return len(self.values) == HOURS_PER_DAY and all(v is not None for v in self.values)

    def require_complete(self) -> tuple[float, ...]:
        violations = validate_series(self)
        if violations:
            raise SeriesError(f"{self.source} series for {self.window.label_date}: " + "; ".join(violations))
        return self.values  # type: ignore[return-value]


def validate_series(series: DaySeries) -> list[str]:
    """List invariant violations; an empty list means the series is usable.

    Slot numbers in messages are one-based hours (1..24).
    """
    violations = []
    n = len(series.values)
    if n != HOURS_PER_DAY:
        violations.append(f"length {n}, expected {HOURS_PER_DAY}")
    for k, v in enumerate(series.values):
        if v is None:
            violations.append(f"incomplete: slot {k + 1} missing")
            continue
        problem = check_concentration(v)
        if problem == "non-finite":
            violations.append(f"non-finite at slot {k + 1}")
        elif problem:
            violations.append(f"{problem} at slot {k + 1}")
    return violations


@dataclass(frozen=True)
class DaySet:
    days: tuple[tuple[str, date], ...] = field(default_factory=tuple)

    @classmethod
    def of(cls, pairs: Iterable[tuple[str, date]]) -> "DaySet":
        return cls(tuple(sorted(set(pairs))))

    def __len__(self):
        return len(self.days)

    def __iter__(self):
        return iter(self.days)

    def __contains__(self, item):
        return item in set(self.days)


def date_range(start: date, end: date) -> list[date]:
    return [start + timedelta(days=i) for i in range((end - start).days + 1)]


def bounded_mean(values: Sequence[float]) -> float:
    """Arithmetic mean clamped to ``[min, max]`` of the inputs.

    The clamp guards against rounding pushing the mean outside its inputs, so
    the mean of identical values is exactly that value.
    """
    lo, hi = min(values), max(values)
    if lo == hi:
        return lo
    return min(hi, max(lo, math.fsum(values) / len(values)))
