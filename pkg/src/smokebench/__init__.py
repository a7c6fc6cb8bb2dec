"""Decision-oriented evaluation of hourly PM2.5 forecasts during wildfire smoke."""

__version__ = "0.1.0"

from .core import DaySeries, DayWindow, GeoPoint, UrbanArea  # noqa: E402
from .metrics import (  # noqa: E402
    ConfusionCounts,
    aggregate,
    excess_exposure,
    mean_excess_exposure,
    persistence_mee,
    skill,
)

__all__ = [
    "ConfusionCounts",
    "DaySeries",
    "DayWindow",
    "GeoPoint",
    "UrbanArea",
    "aggregate",
    "excess_exposure",
    "mean_excess_exposure",
    "persistence_mee",
    "skill",
]
