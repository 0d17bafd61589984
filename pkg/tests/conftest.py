"""Shared builders for synthetic trips, segments and ride-stat indexes."""

from __future__ import annotations

from datetime import date, datetime

import pytest

from doortodoor import (
    DayPeriod,
    RideStatIndex,
    RideVariants,
    ScheduledSegment,
    Station,
    TripPhaseTimes,
    TripRecord,
    Zone,
    ZoneRideStat,
)

AMS_TZ = "Europe/Amsterdam"
PAR_TZ = "Europe/Paris"


def make_station(station_id="CDG", kind="air", zone_id="PZ9", tz=PAR_TZ,
                 lat=49.0097, lon=2.5479, dwell=None):
    return Station(station_id=station_id, kind=kind, zone_id=zone_id,
                   lat=lat, lon=lon, tz=tz, dwell=dwell)


def make_segment(segment_id="F1", mode_id="via_CDG",
                 dep_station=None, arr_station=None,
                 sched_dep="2018-01-02T12:00", sched_arr="2018-01-02T13:20",
                 actual_dep=None, actual_arr=None, cancelled=False):
    dep_station = dep_station or make_station("AMS", zone_id="AZ1", tz=AMS_TZ,
                                              lat=52.3105, lon=4.7683)
    arr_station = arr_station or make_station()

    def ts(value, station):
        if value is None:
            return None
        if isinstance(value, datetime):
            return value
        return datetime.fromisoformat(value).replace(tzinfo=station.tzinfo)

    sched_dep = ts(sched_dep, dep_station)
    sched_arr = ts(sched_arr, arr_station)
    return ScheduledSegment(
        segment_id=segment_id, mode_id=mode_id,
        dep_station=dep_station, arr_station=arr_station,
        sched_dep=sched_dep, sched_arr=sched_arr,
        actual_dep=ts(actual_dep, dep_station) if actual_dep else sched_dep,
        actual_arr=ts(actual_arr, arr_station) if actual_arr else sched_arr,
        cancelled=cancelled,
    )


def make_rides(entries):
    """entries: (origin, dest, iso_date, period, mean_s[, min_s, max_s])."""
    index = RideStatIndex()
    for entry in entries:
        origin, dest, day, period, mean_s = entry[:5]
        min_s = entry[5] if len(entry) > 5 else mean_s
        max_s = entry[6] if len(entry) > 6 else mean_s
        index.add(ZoneRideStat(
            origin_zone_id=origin, dest_zone_id=dest,
            date=date.fromisoformat(day), period=period,
            mean_s=mean_s, min_s=min_s, max_s=max_s,
        ))
    return index


def make_trip(dest_zone="PZ1", mode_id="via_CDG", arrival_date="2018-01-02",
              arrival_period=DayPeriod.MIDDAY, to_s=1800, dep_s=5400, in_s=4800,
              arr_s=2700, from_s=1500, wait_s=0, to_spread=0, from_spread=0,
              segment_id="F1", origin_zone="AZ1",
              departure_period=DayPeriod.AM, departure_date=None):
    """A TripRecord with symmetric min/max ride spreads around the means."""
    return TripRecord(
        segment_id=segment_id, mode_id=mode_id,
        dep_station_id="AMS", arr_station_id="CDG",
        origin_zone_id=origin_zone, dest_zone_id=dest_zone,
        phases=TripPhaseTimes(to_s=to_s, dep_s=dep_s, in_s=in_s,
                              arr_s=arr_s, from_s=from_s, wait_s=wait_s),
        ride_to=RideVariants(max(1, to_s), max(1, to_s - to_spread),
                             max(1, to_s + to_spread)),
        ride_from=RideVariants(max(1, from_s), max(1, from_s - from_spread),
                               max(1, from_s + from_spread)),
        arrival_period=arrival_period,
        arrival_date=date.fromisoformat(arrival_date),
        departure_period=departure_period,
        departure_date=date.fromisoformat(departure_date or arrival_date),
        used_daily_fallback_to=False,
        used_daily_fallback_from=False,
    )


@pytest.fixture
def origin_zone():
    return Zone("AZ1", internal_point=(52.37, 4.89))


@pytest.fixture
def dest_zone():
    return Zone("PZ1", internal_point=(48.86, 2.35), population_density=5000)
