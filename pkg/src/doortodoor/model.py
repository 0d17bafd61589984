"""Domain types and the per-trip door-to-door computation.

A trip is decomposed into five additive phases:

    total = access ride + departure dwell + in-vehicle + arrival dwell + egress ride

where the departure dwell itself splits into a planned processing time and
an extra wait caused by departure delay.  All durations are kept as integer
seconds internally; minutes appear only at I/O boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from enum import Enum
from typing import Optional, Tuple
from zoneinfo import ZoneInfo

from .errors import TripNotComputableError, ValidationError

EARTH_RADIUS_KM = 6371.0088

MINUTES_PER_DAY = 1440


class DayPeriod(Enum):
    """Local-time buckets used by the ride-stat source.

    Each concrete period carries a half-open [start, end) interval in
    minutes from midnight; the five concrete periods partition the day.
    DAILY_ONLY marks whole-day fallback aggregates and is never produced
    by classification.
    """

    EARLY_MORNING = ("early_morning", 0, 420)
    AM = ("am", 420, 600)
    MIDDAY = ("midday", 600, 960)
    PM = ("pm", 960, 1140)
    LATE_EVENING = ("late_evening", 1140, 1440)
    DAILY_ONLY = ("daily", None, None)

    def __init__(self, label: str, start_min, end_min):
        self.label = label
        self.start_min = start_min
        self.end_min = end_min

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"DayPeriod.{self.name}"


CLASSIFIABLE_PERIODS = tuple(p for p in DayPeriod if p is not DayPeriod.DAILY_ONLY)

# CSV period codes: 0 = daily aggregate, 1..5 in chronological order.
PERIOD_BY_CODE = {
    0: DayPeriod.DAILY_ONLY,
    1: DayPeriod.EARLY_MORNING,
    2: DayPeriod.AM,
    3: DayPeriod.MIDDAY,
    4: DayPeriod.PM,
    5: DayPeriod.LATE_EVENING,
}
CODE_BY_PERIOD = {p: c for c, p in PERIOD_BY_CODE.items()}


def classify_period(local_time_min) -> DayPeriod:
    """Map minutes-from-midnight to its day period.

    Intervals are half-open, so boundary minutes (420, 600, 960, 1140)
    belong to the later period.
    """
    if not 0 <= local_time_min < MINUTES_PER_DAY:
        raise ValidationError(
            f"local time {local_time_min!r} outside [0, {MINUTES_PER_DAY})"
        )
    for period in CLASSIFIABLE_PERIODS:
        if period.start_min <= local_time_min < period.end_min:
            return period
    raise AssertionError("periods must partition the day")  # pragma: no cover


def classify_instant(instant: datetime) -> DayPeriod:
    """Classify a (zone-local) datetime by its second of day."""
    sec_of_day = instant.hour * 3600 + instant.minute * 60 + instant.second
    for period in CLASSIFIABLE_PERIODS:
        if period.start_min * 60 <= sec_of_day < period.end_min * 60:
            return period
    raise AssertionError("periods must partition the day")  # pragma: no cover


def _check_lat_lon(lat, lon):
    if not -90.0 <= lat <= 90.0:
        raise ValidationError(f"latitude {lat} outside [-90, 90]")
    if not -180.0 <= lon <= 180.0:
        raise ValidationError(f"longitude {lon} outside [-180, 180]")


@dataclass(frozen=True)
class Zone:
    """Smallest geographic analysis unit (census tract, IRIS, wijk)."""

    zone_id: str
    internal_point: Optional[Tuple[float, float]] = None  # (lat, lon)
    population_density: Optional[float] = None

    def __post_init__(self):
        if self.internal_point is not None:
            _check_lat_lon(*self.internal_point)
        if self.population_density is not None and self.population_density < 0:
            raise ValidationError(
                f"zone {self.zone_id}: negative population density"
            )


@dataclass(frozen=True)
class DwellProfile:
    """Planned station dwell in minutes: departure processing and arrival exit."""

    t_sec_departure_min: float
    t_arr_min: float

    def __post_init__(self):
        for name, value in (
            ("t_sec_departure_min", self.t_sec_departure_min),
            ("t_arr_min", self.t_arr_min),
        ):
            if not math.isfinite(value) or value < 0:
                raise ValidationError(f"dwell {name}={value!r} must be finite and >= 0")

    @property
    def t_sec_departure_s(self) -> int:
        return round(self.t_sec_departure_min * 60)

    @property
    def t_arr_s(self) -> int:
        return round(self.t_arr_min * 60)


@dataclass(frozen=True)
class Station:
    """Airport or train station anchoring one end of the scheduled leg."""

    station_id: str
    kind: str  # "air" | "rail"
    zone_id: str
    lat: float
    lon: float
    tz: str
    dwell: Optional[DwellProfile] = None  # per-station override of the defaults

    def __post_init__(self):
        if self.kind not in ("air", "rail"):
            raise ValidationError(f"station {self.station_id}: kind must be air|rail")
        _check_lat_lon(self.lat, self.lon)
        try:
            ZoneInfo(self.tz)
        except Exception as exc:
            raise ValidationError(
                f"station {self.station_id}: unresolvable timezone {self.tz!r}"
            ) from exc

    @property
    def tzinfo(self) -> ZoneInfo:
        return ZoneInfo(self.tz)


@dataclass(frozen=True)
class ScheduledSegment:
    """One flight or train movement with scheduled (and possibly actual) times."""

    segment_id: str
    mode_id: str
    dep_station: Station
    arr_station: Station
    sched_dep: datetime
    sched_arr: datetime
    actual_dep: Optional[datetime] = None
    actual_arr: Optional[datetime] = None
    cancelled: bool = False

    def __post_init__(self):
        if self.sched_arr <= self.sched_dep:
            raise ValidationError(
                f"segment {self.segment_id}: scheduled arrival not after departure"
            )
        if self.actual_dep is not None and self.actual_arr is not None:
            if self.actual_arr <= self.actual_dep:
                raise ValidationError(
                    f"segment {self.segment_id}: actual arrival not after departure"
                )


@dataclass(frozen=True)
class TripPhaseTimes:
    """The five phase durations of one trip, in whole seconds."""

    to_s: int
    dep_s: int
    in_s: int
    arr_s: int
    from_s: int
    wait_s: int

    def __post_init__(self):
        for name in ("to_s", "dep_s", "in_s", "arr_s", "from_s", "wait_s"):
            if getattr(self, name) < 0:
                raise ValidationError(f"phase {name} negative")
        if self.wait_s > self.dep_s:
            raise ValidationError("wait exceeds total departure dwell")

    @property
    def total_s(self) -> int:
        return self.to_s + self.dep_s + self.in_s + self.arr_s + self.from_s

    @property
    def sec_s(self) -> int:
        """Planned processing component of the departure dwell."""
        return self.dep_s - self.wait_s


@dataclass(frozen=True)
class RideVariants:
    """Mean/min/max ride durations for one access or egress leg, in seconds."""

    mean_s: int
    min_s: int
    max_s: int

    def __post_init__(self):
        if not 0 < self.min_s <= self.mean_s <= self.max_s:
            raise ValidationError(
                f"ride variants must satisfy 0 < min <= mean <= max, "
                f"got {self.min_s}/{self.mean_s}/{self.max_s}"
            )


@dataclass(frozen=True)
class TripRecord:
    """One evaluated door-to-door trip."""

    segment_id: str
    mode_id: str
    dep_station_id: str
    arr_station_id: str
    origin_zone_id: str
    dest_zone_id: str
    phases: TripPhaseTimes  # mean-variant ride legs
    ride_to: RideVariants
    ride_from: RideVariants
    arrival_period: DayPeriod
    arrival_date: date
    departure_period: DayPeriod
    departure_date: date
    used_daily_fallback_to: bool
    used_daily_fallback_from: bool

    @property
    def total_mean_s(self) -> int:
        return self.phases.total_s

    @property
    def total_min_s(self) -> int:
        return (
            self.ride_to.min_s
            + self.phases.dep_s
            + self.phases.in_s
            + self.phases.arr_s
            + self.ride_from.min_s
        )

    @property
    def total_max_s(self) -> int:
        return (
            self.ride_to.max_s
            + self.phases.dep_s
            + self.phases.in_s
            + self.phases.arr_s
            + self.ride_from.max_s
        )

    @property
    def variability_s(self) -> int:
        return self.total_max_s - self.total_min_s


def _whole_seconds(delta: timedelta, what: str) -> int:
    seconds = delta.total_seconds()
    rounded = round(seconds)
    if abs(seconds - rounded) > 1e-9:
        raise ValidationError(f"{what}: sub-second timestamps unsupported")
    return rounded


def compute_trip(
    segment: ScheduledSegment,
    origin_zone: Zone,
    dest_zone: Zone,
    dwell_dep: DwellProfile,
    dwell_arr: DwellProfile,
    rides,
    *,
    assume_on_time: bool = False,
) -> TripRecord:
    """Evaluate one full door-to-door trip for a segment and a zone pair.

    ``rides`` is a lookup with signature
    ``lookup(origin_zone_id, dest_zone_id, date, period) -> (stat, used_fallback) | None``
    where the stat exposes ``mean_s``/``min_s``/``max_s``.

    The access ride is taken at the period containing the station-arrival
    deadline (scheduled departure minus processing time); the egress ride at
    the period containing the airport/station exit (actual arrival plus
    arrival dwell).  When ``assume_on_time`` is set, missing actual times are
    substituted by the scheduled ones.

    Raises TripNotComputableError when a leg has no ride statistic at period
    or daily level.
    """
    if segment.cancelled:
        raise ValidationError(f"segment {segment.segment_id} is cancelled")

    actual_dep = segment.actual_dep
    actual_arr = segment.actual_arr
    if actual_dep is None or actual_arr is None:
        if not assume_on_time:
            raise ValidationError(
                f"segment {segment.segment_id}: actual times missing "
                "and on-time mode not enabled"
            )
        actual_dep = actual_dep if actual_dep is not None else segment.sched_dep
        actual_arr = actual_arr if actual_arr is not None else segment.sched_arr

    in_s = _whole_seconds(actual_arr - actual_dep, "in-vehicle time")
    if in_s <= 0:
        raise ValidationError(
            f"segment {segment.segment_id}: actual arrival not after departure"
        )
    # Early pushback cannot reduce dwell below the processing time.
    wait_s = max(0, _whole_seconds(actual_dep - segment.sched_dep, "departure delay"))
    sec_s = dwell_dep.t_sec_departure_s
    arr_dwell_s = dwell_arr.t_arr_s

    dep_tz = segment.dep_station.tzinfo
    arr_tz = segment.arr_station.tzinfo

    deadline_local = (segment.sched_dep - timedelta(seconds=sec_s)).astimezone(dep_tz)
    to_period = classify_instant(deadline_local)
    to_date = deadline_local.date()
    hit_to = rides.lookup(
        origin_zone.zone_id, segment.dep_station.zone_id, to_date, to_period
    )
    if hit_to is None:
        raise TripNotComputableError(
            f"no ride stat {origin_zone.zone_id}->{segment.dep_station.zone_id} "
            f"on {to_date} ({to_period.label} or daily)"
        )
    stat_to, fallback_to = hit_to

    egress_local = (actual_arr + timedelta(seconds=arr_dwell_s)).astimezone(arr_tz)
    from_period = classify_instant(egress_local)
    from_date = egress_local.date()
    hit_from = rides.lookup(
        segment.arr_station.zone_id, dest_zone.zone_id, from_date, from_period
    )
    if hit_from is None:
        raise TripNotComputableError(
            f"no ride stat {segment.arr_station.zone_id}->{dest_zone.zone_id} "
            f"on {from_date} ({from_period.label} or daily)"
        )
    stat_from, fallback_from = hit_from

    phases = TripPhaseTimes(
        to_s=stat_to.mean_s,
        dep_s=sec_s + wait_s,
        in_s=in_s,
        arr_s=arr_dwell_s,
        from_s=stat_from.mean_s,
        wait_s=wait_s,
    )

    arrival_local = egress_local + timedelta(seconds=stat_from.mean_s)
    door_departure_local = deadline_local - timedelta(seconds=stat_to.mean_s)

    return TripRecord(
        segment_id=segment.segment_id,
        mode_id=segment.mode_id,
        dep_station_id=segment.dep_station.station_id,
        arr_station_id=segment.arr_station.station_id,
        origin_zone_id=origin_zone.zone_id,
        dest_zone_id=dest_zone.zone_id,
        phases=phases,
        ride_to=RideVariants(stat_to.mean_s, stat_to.min_s, stat_to.max_s),
        ride_from=RideVariants(stat_from.mean_s, stat_from.min_s, stat_from.max_s),
        arrival_period=classify_instant(arrival_local),
        arrival_date=arrival_local.date(),
        departure_period=classify_instant(door_departure_local),
        departure_date=door_departure_local.date(),
        used_daily_fallback_to=fallback_to,
        used_daily_fallback_from=fallback_from,
    )


def geodesic_distance(a: Tuple[float, float], b: Tuple[float, float]) -> float:
    """Great-circle distance in kilometers between two (lat, lon) points.

    Haversine formula on a sphere of mean Earth radius; symmetric and
    non-negative.
    """
    _check_lat_lon(*a)
    _check_lat_lon(*b)
    lat1, lon1 = map(math.radians, a)
    lat2, lon2 = map(math.radians, b)
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))
