"""numpy implementations of the batch kernels (fallback for ``_ckernels``)."""
import numpy as np

EARTH_RADIUS_KM = 6371.0


def excess_exposure_batch(measured, forecast):
    """Row-wise excess exposure for ``(n, 24)`` arrays.

    Returns ``(ee, chosen_hour)`` with ``chosen_hour`` one-based; ties in the
    forecast minimum resolve to the earliest hour (``argmin`` returns the first).
    """
    measured = np.ascontiguousarray(measured, dtype=np.float64)
    forecast = np.ascontiguousarray(forecast, dtype=np.float64)
    if measured.shape != forecast.shape or measured.ndim != 2:
        raise ValueError("measured and forecast must be matching (n, 24) arrays")
    rows = np.arange(measured.shape[0])
    chosen = np.argmin(forecast, axis=1)
    ee = measured[rows, chosen] - measured.min(axis=1)
    return ee, (chosen + 1).astype(np.int64)


def random_hour_excess_batch(measured):
    """Expected excess exposure of a uniformly random hour, per row."""
    measured = np.ascontiguousarray(measured, dtype=np.float64)
    return measured.mean(axis=1) - measured.min(axis=1)


def squared_error_sums(measured, forecast):
    diff = np.asarray(forecast, dtype=np.float64) - np.asarray(measured, dtype=np.float64)
    return (diff * diff).sum(axis=1)


def haversine_batch(lat0, lon0, lats, lons):
    lat0r, lon0r = np.radians(lat0), np.radians(lon0)
    latr = np.radians(np.asarray(lats, dtype=np.float64))
    lonr = np.radians(np.asarray(lons, dtype=np.float64))
    a = np.sin((latr - lat0r) / 2.0) ** 2 + np.cos(lat0r) * np.cos(latr) * np.sin((lonr - lon0r) / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.minimum(a, 1.0)))
