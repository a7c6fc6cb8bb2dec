"""Great-circle matching of urban areas to monitors and forecast grid points."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import kernels
from .core import GeoPoint, UrbanArea

log = logging.getLogger(__name__)

EARTH_RADIUS_KM = 6371.0
MONITOR_RADIUS_KM = 10.0
MONITOR_FALLBACK_RADIUS_KM = 50.0
MONITOR_MAX_NEIGHBORS = 10
# CAMS is coarser (~40 km grid) and gets a wider search circle
DEFAULT_FORECAST_RADII_KM = {"default": 50.0, "cams": 60.0}


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in km on a sphere of radius 6371.0 km."""
    p0, l0 = math.radians(a.lat), math.radians(a.lon)
    p1, l1 = math.radians(b.lat), math.radians(b.lon)
    s1 = math.sin((p1 - p0) / 2.0)
    s2 = math.sin((l1 - l0) / 2.0)
    h = min(1.0, s1 * s1 + math.cos(p0) * math.cos(p1) * s2 * s2)
    return 2.0 * EARTH_RADIUS_KM * math.asin(math.sqrt(h))


@dataclass(frozen=True)
class MonitorSelection:
    city_id: str
    monitor_ids: tuple[str, ...]
    distances_km: tuple[float, ...]
    radius_used_km: float

    @property
    def empty(self) -> bool:
        return not self.monitor_ids


@dataclass(frozen=True)
class CellSelection:
    city_id: str
    model: str
    locations: tuple[GeoPoint, ...]
    radius_km: float

    @property
    def empty(self) -> bool:
        return not self.locations


def _active(station, date_range: Optional[tuple[date, date]]) -> bool:
    rng = getattr(station, "active_range", None)
    if rng is None or date_range is None:
        return True
    first, last = rng
    start, end = date_range
    return (first is None or first <= end) and (last is None or last >= start)


def _nearest_within(center: GeoPoint, stations, radius_km: float, limit: int):
    ranked = []
    for st in stations:
        d = haversine_km(center, st.location)
        if d <= radius_km:
            ranked.append((d, st.monitor_id))
    ranked.sort()  # ties in distance fall back to monitor_id order
    return ranked[:limit]


def select_monitors(
    city: UrbanArea,
    stations: Iterable,
    date_range: Optional[tuple[date, date]] = None,
    *,
    radius_km: float = MONITOR_RADIUS_KM,
    fallback_radius_km: float = MONITOR_FALLBACK_RADIUS_KM,
    max_neighbors: int = MONITOR_MAX_NEIGHBORS,
) -> MonitorSelection:
    """Nearest active monitors within ``radius_km``, widening once to the fallback radius.

    The boundary is inclusive. An empty result is valid; callers skip the city.
    """
    candidates = [st for st in stations if _active(st, date_range)]
    used = radius_km
    ranked = _nearest_within(city.center, candidates, radius_km, max_neighbors)
    if not ranked:
        used = fallback_radius_km
        ranked = _nearest_within(city.center, candidates, fallback_radius_km, max_neighbors)
    if not ranked:
        log.warning("no monitors within %g km of %s", fallback_radius_km, city.id)
    return MonitorSelection(
        city.id,
        tuple(mid for _, mid in ranked),
        tuple(d for d, _ in ranked),
        used,
    )


def model_radius_km(model: str, radii: Optional[Mapping[str, float]] = None) -> float:
    """Search radius for ``model``; ``radii`` entries override the built-in map."""
    merged = {**DEFAULT_FORECAST_RADII_KM, **(radii or {})}
    return float(merged.get(model, merged["default"]))


def select_forecast_cells(
    city: UrbanArea,
    model: str,
    available_locations: Sequence[GeoPoint],
    radius_km: Optional[float] = None,
) -> CellSelection:
    """All forecast sample locations within the model's radius of the city center."""
    radius = model_radius_km(model) if radius_km is None else float(radius_km)
    locs = sorted(set(available_locations))
    if locs:
        lats = np.fromiter((p.lat for p in locs), dtype=np.float64, count=len(locs))
        lons = np.fromiter((p.lon for p in locs), dtype=np.float64, count=len(locs))
        dist = kernels.haversine_batch(city.center.lat, city.center.lon, lats, lons)
        chosen = tuple(p for p, d in zip(locs, dist) if d <= radius)
    else:
        chosen = ()
    if not chosen:
        log.warning("no %s forecast points within %g km of %s", model, radius, city.id)
    return CellSelection(city.id, model, chosen, radius)
