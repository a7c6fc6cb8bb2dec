"""Run configuration loaded from a JSON document.

Relative paths are resolved against the directory holding the config file.
Unknown keys are rejected at every level.

Example::

    {
      "cities": "cities.csv",
      "models": ["hrrr", "cams"],
      "date_range": ["2023-05-01", "2023-10-31"],
      "inputs": {"monitors": "monitors.csv", "readings": "readings.csv",
                 "forecasts": {"hrrr": "hrrr.csv", "cams": "cams.csv"}},
      "forecast_radius_km": {"default": 50, "cams": 60},
      "output_dir": "out"
    }
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Optional

from .core import DEFAULT_THRESHOLD, PERSISTENCE, GeoPoint, UrbanArea
from .ingest import ConfigError, load_cities
from .spatial import DEFAULT_FORECAST_RADII_KM

FORECAST_RULES = ("daily_max", "daily_mean")
RMSE_MODES = ("pooled", "per_day")

_TOP_KEYS = {
    "cities",
    "models",
    "date_range",
    "exceedance_threshold",
    "monitor_radius_km",
    "monitor_max_neighbors",
    "forecast_radius_km",
    "high_day_rule",
    "forecast_rule",
    "rmse_mode",
    "output_dir",
    "inputs",
    "fetch",
    "plot_pad_days",
}
_INPUT_KEYS = {"monitors", "readings", "forecasts"}
_FETCH_KEYS = {"url_templates", "dest_dir"}
_RADIUS_KEYS = {"primary", "fallback"}


@dataclass(frozen=True)
class RunConfig:
    cities: tuple[UrbanArea, ...]
    models: tuple[str, ...]
    date_range: tuple[date, date]
    monitors_path: Optional[Path] = None
    readings_path: Optional[Path] = None
    forecast_paths: dict = field(default_factory=dict)
    exceedance_threshold: float = DEFAULT_THRESHOLD
    monitor_radius_km: float = 10.0
    monitor_fallback_radius_km: float = 50.0
    monitor_max_neighbors: int = 10
    forecast_radius_km: dict = field(default_factory=lambda: dict(DEFAULT_FORECAST_RADII_KM))
    high_day_rule: str = "daily_max"
    forecast_rule: str = "daily_max"
    rmse_mode: str = "pooled"
    output_dir: Optional[Path] = None
    url_templates: dict = field(default_factory=dict)
    archive_dir: Optional[Path] = None
    plot_pad_days: int = 2

    def __post_init__(self):
        start, end = self.date_range
        if start > end:
            raise ConfigError(f"date_range start {start} after end {end}")
        if self.exceedance_threshold <= 0:
            raise ConfigError("exceedance_threshold must be positive")
        radii = [self.monitor_radius_km, self.monitor_fallback_radius_km, *self.forecast_radius_km.values()]
        if any(r <= 0 for r in radii):
            raise ConfigError("radii must be positive")
        if "default" not in self.forecast_radius_km:
            raise ConfigError("forecast_radius_km needs a 'default' entry")
        if self.monitor_max_neighbors < 1:
            raise ConfigError("monitor_max_neighbors must be at least 1")
        if PERSISTENCE in self.models:
            raise ConfigError("persistence is always evaluated; do not list it under models")
        if len(set(self.models)) != len(self.models):
            raise ConfigError("models listed more than once")
        ids = [c.id for c in self.cities]
        if len(set(ids)) != len(ids):
            raise ConfigError("city ids must be unique")
        if self.high_day_rule != "daily_max":
            raise ConfigError("high_day_rule must be 'daily_max'")
        if self.forecast_rule not in FORECAST_RULES:
            raise ConfigError(f"forecast_rule must be one of {FORECAST_RULES}")
        if self.rmse_mode not in RMSE_MODES:
            raise ConfigError(f"rmse_mode must be one of {RMSE_MODES}")
        if self.plot_pad_days < 0:
            raise ConfigError("plot_pad_days must be non-negative")


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be an object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _date(text, what) -> date:
    try:
        return date.fromisoformat(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: bad date {text!r}") from None


def _number(value, what) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{what} must be a number")
    return float(value)


def parse_config(doc: dict, base_dir: Path = Path(".")) -> RunConfig:
    _reject_unknown(doc, _TOP_KEYS, "config")
    base_dir = Path(base_dir)

    def path(p):
        return None if p is None else (base_dir / p)

    cities_spec = doc.get("cities")
    if isinstance(cities_spec, str):
        cities = load_cities(path(cities_spec))
    elif isinstance(cities_spec, list):
        cities = []
        for i, c in enumerate(cities_spec):
            _reject_unknown(c, {"city_id", "name", "lat", "lon"}, f"cities[{i}]")
            try:
                cities.append(UrbanArea(c["city_id"], c["name"], GeoPoint(float(c["lat"]), float(c["lon"]))))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"cities[{i}]: {exc}") from None
    else:
        raise ConfigError("cities must be a CSV path or a list of city objects")

    models = doc.get("models", [])
    if not isinstance(models, list) or not all(isinstance(m, str) and m for m in models):
        raise ConfigError("models must be a list of model ids")

    rng = doc.get("date_range")
    if not isinstance(rng, list) or len(rng) != 2:
        raise ConfigError("date_range must be [start, end]")
    dates = (_date(rng[0], "date_range"), _date(rng[1], "date_range"))

    inputs = doc.get("inputs", {})
    _reject_unknown(inputs, _INPUT_KEYS, "inputs")
    forecasts = inputs.get("forecasts", {})
    _reject_unknown(forecasts, set(models), "inputs.forecasts")

    fetch = doc.get("fetch", {})
    _reject_unknown(fetch, _FETCH_KEYS, "fetch")
    templates = fetch.get("url_templates", {})
    _reject_unknown(templates, set(models), "fetch.url_templates")

    kwargs = {}
    if "monitor_radius_km" in doc:
        radius = doc["monitor_radius_km"]
        _reject_unknown(radius, _RADIUS_KEYS, "monitor_radius_km")
        if "primary" in radius:
            kwargs["monitor_radius_km"] = _number(radius["primary"], "monitor_radius_km.primary")
        if "fallback" in radius:
            kwargs["monitor_fallback_radius_km"] = _number(radius["fallback"], "monitor_radius_km.fallback")
    if "forecast_radius_km" in doc:
        radii = doc["forecast_radius_km"]
        if not isinstance(radii, dict):
            raise ConfigError("forecast_radius_km must be an object")
        merged = dict(DEFAULT_FORECAST_RADII_KM)
        merged.update({k: _number(v, f"forecast_radius_km.{k}") for k, v in radii.items()})
        kwargs["forecast_radius_km"] = merged
    if "exceedance_threshold" in doc:
        kwargs["exceedance_threshold"] = _number(doc["exceedance_threshold"], "exceedance_threshold")
    if "monitor_max_neighbors" in doc:
        n = doc["monitor_max_neighbors"]
        if isinstance(n, bool) or not isinstance(n, int):
            raise ConfigError("monitor_max_neighbors must be an integer")
        kwargs["monitor_max_neighbors"] = n
    if "plot_pad_days" in doc:
        kwargs["plot_pad_days"] = int(doc["plot_pad_days"])
    for key in ("high_day_rule", "forecast_rule", "rmse_mode"):
        if key in doc:
            kwargs[key] = doc[key]

    return RunConfig(
        cities=tuple(cities),
        models=tuple(models),
        date_range=dates,
        monitors_path=path(inputs.get("monitors")),
        readings_path=path(inputs.get("readings")),
        forecast_paths={m: path(p) for m, p in forecasts.items()},
        output_dir=path(doc.get("output_dir")),
        url_templates=dict(templates),
        archive_dir=path(fetch.get("dest_dir")),
        **kwargs,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(doc, path.parent)
