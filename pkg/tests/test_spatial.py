import math
from datetime import date

import pytest
from hypothesis import given, settings, strategies as st

from smokebench.core import GeoPoint, UrbanArea
from smokebench.ingest import MonitorStation
from smokebench.spatial import (
    haversine_km,
    model_radius_km,
    select_forecast_cells,
    select_monitors,
)

R = 6371.0
points = st.builds(
    GeoPoint,
    st.floats(min_value=-90, max_value=90),
    st.floats(min_value=-180, max_value=179.999999),
)


def east_of(center: GeoPoint, km: float) -> GeoPoint:
    """Point due east along the equator (exact inverse of haversine there)."""
    return GeoPoint(center.lat, center.lon + math.degrees(km / R))


EQ = UrbanArea("eq", "Equator", GeoPoint(0.0, 0.0))


def stations_at(*kms, prefix="m"):
    return [MonitorStation(f"{prefix}{i}", east_of(EQ.center, d)) for i, d in enumerate(kms)]


def test_haversine_identity():
    p = GeoPoint(41.85, -87.65)
    assert haversine_km(p, p) == 0.0


def test_haversine_one_degree():
    assert haversine_km(GeoPoint(0, 0), GeoPoint(1, 0)) == pytest.approx(111.195, abs=0.001)


def test_haversine_antipodal_limit():
    assert haversine_km(GeoPoint(0, 0), GeoPoint(0, 179.999999)) == pytest.approx(math.pi * R, abs=0.01)
    assert math.pi * R == pytest.approx(20015.087, abs=0.01)


@given(points, points)
def test_haversine_symmetric(a, b):
    assert haversine_km(a, b) == pytest.approx(haversine_km(b, a), abs=1e-9)
    assert haversine_km(a, b) >= 0


@given(points, points, points)
def test_haversine_triangle(a, b, c):
    assert haversine_km(a, c) <= haversine_km(a, b) + haversine_km(b, c) + 1e-6


def test_select_within_primary_radius():
    sel = select_monitors(EQ, stations_at(5, 8, 12))
    assert sel.monitor_ids == ("m0", "m1")
    assert sel.radius_used_km == 10
    assert sel.distances_km == pytest.approx((5, 8))


def test_select_fallback():
    sel = select_monitors(EQ, stations_at(30, 60))
    assert sel.monitor_ids == ("m0",)
    assert sel.radius_used_km == 50


def test_select_truncates_to_ten():
    kms = [9.5 - 0.5 * i for i in range(15)]
    sel = select_monitors(EQ, stations_at(*kms))
    assert len(sel.monitor_ids) == 10
    assert list(sel.distances_km) == sorted(sel.distances_km)
    assert sel.distances_km[0] == pytest.approx(2.5)


def test_select_empty():
    sel = select_monitors(EQ, stations_at(80))
    assert sel.empty
    assert sel.monitor_ids == ()


def test_boundary_inclusive():
    st_ = MonitorStation("edge", GeoPoint(0.0, math.degrees(10.0 / R)))
    d = haversine_km(EQ.center, st_.location)
    sel = select_monitors(EQ, [st_], radius_km=d)
    assert sel.monitor_ids == ("edge",) and sel.radius_used_km == d


def test_distance_ties_break_by_id():
    p = east_of(EQ.center, 3)
    stations = [MonitorStation(mid, p) for mid in ("z", "b", "a")]
    sel = select_monitors(EQ, stations, max_neighbors=2)
    assert sel.monitor_ids == ("a", "b")


def test_inactive_monitors_ignored():
    stations = [
        MonitorStation("old", east_of(EQ.center, 2), (date(2020, 1, 1), date(2020, 12, 31))),
        MonitorStation("new", east_of(EQ.center, 4), (date(2023, 1, 1), None)),
    ]
    sel = select_monitors(EQ, stations, (date(2023, 5, 1), date(2023, 10, 31)))
    assert sel.monitor_ids == ("new",)


def oracle(center, stations, radius, limit=10):
    ranked = sorted((haversine_km(center, s.location), s.monitor_id) for s in stations)
    return [mid for d, mid in ranked if d <= radius][:limit]


station_sets = st.lists(
    st.tuples(st.floats(-0.6, 0.6), st.floats(-0.6, 0.6)), min_size=0, max_size=200
)


@settings(max_examples=60, deadline=None)
@given(station_sets)
def test_select_matches_oracle(offsets):
    center = GeoPoint(35.0, -100.0)
    city = UrbanArea("c", "C", center)
    stations = [MonitorStation(f"s{i:03d}", GeoPoint(center.lat + a, center.lon + b)) for i, (a, b) in enumerate(offsets)]
    sel = select_monitors(city, stations)
    primary = oracle(center, stations, 10)
    if primary:
        assert list(sel.monitor_ids) == primary
        assert sel.radius_used_km == 10
    else:
        assert list(sel.monitor_ids) == oracle(center, stations, 50)
        assert sel.radius_used_km == 50
    assert all(d <= sel.radius_used_km for d in sel.distances_km)


def test_model_radius_defaults_and_override():
    assert model_radius_km("hrrr") == 50
    assert model_radius_km("cams") == 60
    assert model_radius_km("newmodel") == 50
    assert model_radius_km("cams", {"cams": 70}) == 70
    assert model_radius_km("hrrr", {"default": 40}) == 40


def test_cells_hrrr_radius():
    near, far = east_of(EQ.center, 30), east_of(EQ.center, 55)
    sel = select_forecast_cells(EQ, "hrrr", [near, far])
    assert sel.locations == (near,)
    assert sel.radius_km == 50


def test_cells_cams_radius():
    p = east_of(EQ.center, 55)
    assert select_forecast_cells(EQ, "cams", [p]).locations == (p,)


def test_cells_empty(caplog):
    sel = select_forecast_cells(EQ, "hrrr", [east_of(EQ.center, 200)])
    assert sel.empty
    assert "no hrrr forecast points" in caplog.text
