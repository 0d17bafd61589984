"""Parsers, indexes, weekly-schedule expansion and dwell defaults."""

from datetime import date

import pytest
from hypothesis import given, strategies as st

from doortodoor import (
    DayPeriod,
    DwellProfile,
    RideStatIndex,
    ValidationError,
    ZoneRideStat,
    expand_weekly_schedule,
    load_ride_stats,
    load_segments_actuals,
    load_stations,
    load_weekly_schedule,
    load_zones,
    resolve_dwell,
)
from doortodoor.ingestion import (
    DEFAULT_RAIL_DWELL,
    DEFAULT_STATION_DWELL,
    dump_ride_stats,
    dump_zones,
)

from conftest import make_station

RIDE_HEADER = "origin_zone,dest_zone,date,period,mean_s,min_s,max_s"

STATIONS_CSV = """\
station_id,kind,zone_id,lat,lon,tz,t_sec_dep_min,t_arr_min
AMS,air,AZ1,52.3105,4.7683,Europe/Amsterdam,,
CDG,air,PZ9,49.0097,2.5479,Europe/Paris,,
GDN,rail,PZ8,48.8809,2.3553,Europe/Paris,,
XNA,air,XZ1,36.28,-94.31,America/Chicago,95,40
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadRideStats:
    def test_direct_field_mapping(self, tmp_path):
        path = write(tmp_path, "rides.csv",
                     f"{RIDE_HEADER}\nZ1,Z9,2018-01-02,2,1800,1200,3600\n")
        index = load_ride_stats(path)
        stat, fallback = index.lookup("Z1", "Z9", date(2018, 1, 2), DayPeriod.AM)
        assert stat.mean_s == 1800 and stat.min_s == 1200 and stat.max_s == 3600
        assert not fallback

    def test_duplicate_key_rejected(self, tmp_path):
        path = write(tmp_path, "rides.csv",
                     f"{RIDE_HEADER}\n"
                     "Z1,Z9,2018-01-02,2,1800,1200,3600\n"
                     "Z1,Z9,2018-01-02,2,1900,1300,3700\n")
        with pytest.raises(ValidationError, match="duplicate"):
            load_ride_stats(path)

    def test_period_zero_is_daily_fallback(self, tmp_path):
        path = write(tmp_path, "rides.csv",
                     f"{RIDE_HEADER}\nZ1,Z9,2018-01-02,0,1800,1200,3600\n")
        index = load_ride_stats(path)
        stat, fallback = index.lookup("Z1", "Z9", date(2018, 1, 2), DayPeriod.PM)
        assert fallback
        assert stat.period is DayPeriod.DAILY_ONLY

    def test_min_above_max_cites_line(self, tmp_path):
        path = write(tmp_path, "rides.csv",
                     f"{RIDE_HEADER}\n"
                     "Z1,Z9,2018-01-02,2,1800,1200,3600\n"
                     "Z1,Z9,2018-01-03,2,1800,3700,3600\n")
        with pytest.raises(ValidationError) as info:
            load_ride_stats(path)
        assert info.value.line == 3

    def test_malformed_row_cites_line(self, tmp_path):
        path = write(tmp_path, "rides.csv",
                     f"{RIDE_HEADER}\nZ1,Z9,2018-01-02,2,xx,1200,3600\n")
        with pytest.raises(ValidationError) as info:
            load_ride_stats(path)
        assert info.value.line == 2

    def test_wrong_header_rejected(self, tmp_path):
        path = write(tmp_path, "rides.csv", "a,b,c\n")
        with pytest.raises(ValidationError):
            load_ride_stats(path)

    def test_round_trip_byte_identical(self, tmp_path):
        canonical = (
            f"{RIDE_HEADER}\n"
            "Z1,Z8,2018-01-03,0,1700,1100,3500\n"
            "Z1,Z9,2018-01-02,2,1800,1200,3600\n"
            "Z1,Z9,2018-01-02,5,2000,1200,3600\n"
        )
        path = write(tmp_path, "rides.csv", canonical)
        assert dump_ride_stats(load_ride_stats(path)) == canonical


period_codes = st.sampled_from(list(DayPeriod))


class TestRideStatIndexFallback:
    @given(st.lists(
        st.tuples(st.sampled_from(["A", "B"]), st.sampled_from(["X", "Y"]),
                  st.integers(1, 5), period_codes, st.integers(60, 3600)),
        max_size=20))
    def test_fallback_semantics(self, rows):
        index = RideStatIndex()
        keys = {}
        for origin, dest, day_n, period, mean_s in rows:
            stat = ZoneRideStat(origin, dest, date(2018, 1, day_n), period,
                                mean_s, mean_s, mean_s)
            if stat.key in keys:
                continue
            keys[stat.key] = stat
            index.add(stat)
        for (origin, dest, day, period), stat in keys.items():
            if period is DayPeriod.DAILY_ONLY:
                continue
            hit = index.lookup(origin, dest, day, period)
            assert hit == (stat, False)
        # Keys with only a daily record fall back; absent pairs return None.
        for (origin, dest, day, period) in list(keys):
            for probe in DayPeriod:
                if probe is DayPeriod.DAILY_ONLY:
                    continue
                if (origin, dest, day, probe) in keys:
                    continue
                hit = index.lookup(origin, dest, day, probe)
                daily = keys.get((origin, dest, day, DayPeriod.DAILY_ONLY))
                if daily is not None:
                    assert hit == (daily, True)
                else:
                    assert hit is None


WEEKLY_HEADER = "mode_id,dep_station,arr_station,days,dep_time,arr_time"


class TestWeeklySchedule:
    @pytest.fixture
    def stations(self, tmp_path):
        return load_stations(write(tmp_path, "stations.csv", STATIONS_CSV))

    def test_daily_row_over_one_week(self, tmp_path, stations):
        path = write(tmp_path, "weekly.csv",
                     f"{WEEKLY_HEADER}\nvia_CDG,AMS,CDG,1111111,06:45,08:05\n")
        rows = load_weekly_schedule(path)
        segments = expand_weekly_schedule(rows, stations,
                                          date(2018, 1, 1), date(2018, 1, 7))
        assert len(segments) == 7
        assert segments[0].sched_dep.isoformat() == "2018-01-01T06:45:00+01:00"
        assert segments[0].actual_dep == segments[0].sched_dep
        assert len({s.segment_id for s in segments}) == 7

    def test_weekday_mask_respected(self, tmp_path, stations):
        path = write(tmp_path, "weekly.csv",
                     f"{WEEKLY_HEADER}\nvia_CDG,AMS,CDG,1000010,06:45,08:05\n")
        segments = expand_weekly_schedule(load_weekly_schedule(path), stations,
                                          date(2018, 1, 1), date(2018, 1, 14))
        # 2018-01-01 is a Monday: two Mondays + two Saturdays in two weeks.
        assert len(segments) == 4
        assert {s.sched_dep.weekday() for s in segments} == {0, 5}

    def test_all_false_mask_rejected(self, tmp_path):
        path = write(tmp_path, "weekly.csv",
                     f"{WEEKLY_HEADER}\nvia_CDG,AMS,CDG,0000000,06:45,08:05\n")
        with pytest.raises(ValidationError, match="no weekday"):
            load_weekly_schedule(path)

    def test_late_evening_departure_same_date(self, tmp_path, stations):
        path = write(tmp_path, "weekly.csv",
                     f"{WEEKLY_HEADER}\nvia_CDG,AMS,CDG,1111111,21:45,23:05\n")
        segments = expand_weekly_schedule(load_weekly_schedule(path), stations,
                                          date(2018, 1, 1), date(2018, 1, 1))
        assert len(segments) == 1
        assert segments[0].sched_arr.date() == date(2018, 1, 1)

    def test_overnight_rolls_arrival(self, tmp_path, stations):
        path = write(tmp_path, "weekly.csv",
                     f"{WEEKLY_HEADER}\nnight,AMS,CDG,1111111,23:30,00:50\n")
        segments = expand_weekly_schedule(load_weekly_schedule(path), stations,
                                          date(2018, 1, 1), date(2018, 1, 1))
        assert segments[0].sched_arr.date() == date(2018, 1, 2)

    def test_segment_count_matches_matching_dates(self, tmp_path, stations):
        path = write(tmp_path, "weekly.csv",
                     f"{WEEKLY_HEADER}\n"
                     "a,AMS,CDG,1111111,06:45,08:05\n"
                     "b,AMS,CDG,1111100,09:00,10:20\n")
        segments = expand_weekly_schedule(load_weekly_schedule(path), stations,
                                          date(2018, 1, 1), date(2018, 1, 14))
        assert len(segments) == 14 + 10
        assert len({s.segment_id for s in segments}) == 24


SEGMENTS_HEADER = ("segment_id,mode_id,dep_station,arr_station,"
                   "sched_dep,actual_dep,sched_arr,actual_arr,cancelled")


class TestLoadSegments:
    @pytest.fixture
    def stations(self, tmp_path):
        return load_stations(write(tmp_path, "stations.csv", STATIONS_CSV))

    def test_cancelled_retained_without_actuals(self, tmp_path, stations):
        path = write(tmp_path, "segments.csv",
                     f"{SEGMENTS_HEADER}\n"
                     "F1,via_CDG,AMS,CDG,2018-01-02T12:00,,2018-01-02T13:20,,1\n")
        segments = load_segments_actuals(path, stations)
        assert len(segments) == 1
        assert segments[0].cancelled
        assert segments[0].actual_dep is None

    def test_delay_preserved(self, tmp_path, stations):
        path = write(tmp_path, "segments.csv",
                     f"{SEGMENTS_HEADER}\n"
                     "F1,via_CDG,AMS,CDG,2018-01-02T18:02,2018-01-02T18:18,"
                     "2018-01-02T19:22,2018-01-02T19:38,0\n")
        (segment,) = load_segments_actuals(path, stations)
        assert (segment.actual_dep - segment.sched_dep).total_seconds() == 16 * 60

    def test_local_times_zoned_from_station_table(self, tmp_path, stations):
        path = write(tmp_path, "segments.csv",
                     f"{SEGMENTS_HEADER}\n"
                     "F1,via_CDG,AMS,CDG,2018-01-02T12:00,2018-01-02T12:00,"
                     "2018-01-02T13:20,2018-01-02T13:20,0\n")
        (segment,) = load_segments_actuals(path, stations)
        assert segment.sched_dep.utcoffset().total_seconds() == 3600

    def test_missing_actuals_rejected_unless_on_time(self, tmp_path, stations):
        text = (f"{SEGMENTS_HEADER}\n"
                "F1,via_CDG,AMS,CDG,2018-01-02T12:00,,2018-01-02T13:20,,0\n")
        path = write(tmp_path, "segments.csv", text)
        with pytest.raises(ValidationError):
            load_segments_actuals(path, stations)
        segments = load_segments_actuals(path, stations, allow_missing_actuals=True)
        assert segments[0].actual_dep is None

    def test_reversed_actuals_rejected(self, tmp_path, stations):
        path = write(tmp_path, "segments.csv",
                     f"{SEGMENTS_HEADER}\n"
                     "F1,via_CDG,AMS,CDG,2018-01-02T12:00,2018-01-02T13:30,"
                     "2018-01-02T13:20,2018-01-02T13:00,0\n")
        with pytest.raises(ValidationError):
            load_segments_actuals(path, stations)

    def test_unknown_station_rejected(self, tmp_path, stations):
        path = write(tmp_path, "segments.csv",
                     f"{SEGMENTS_HEADER}\n"
                     "F1,x,NOPE,CDG,2018-01-02T12:00,2018-01-02T12:00,"
                     "2018-01-02T13:20,2018-01-02T13:20,0\n")
        with pytest.raises(ValidationError, match="NOPE"):
            load_segments_actuals(path, stations)


ZONES_GEOJSON = """{
  "type": "FeatureCollection",
  "features": [
    {"type": "Feature",
     "properties": {"zone_id": "Z1", "internal_point": [2.35, 48.86],
                    "population_density": 5000},
     "geometry": {"type": "Point", "coordinates": [2.35, 48.86]}},
    {"type": "Feature",
     "properties": {"zone_id": "Z2"},
     "geometry": {"type": "Point", "coordinates": [2.40, 48.90]}}
  ]
}
"""


class TestLoadZones:
    def test_field_mapping(self, tmp_path):
        zones = load_zones(write(tmp_path, "zones.geojson", ZONES_GEOJSON))
        assert zones["Z1"].population_density == 5000
        assert zones["Z1"].internal_point == (48.86, 2.35)

    def test_missing_internal_point_loads_with_warning(self, tmp_path, caplog):
        with caplog.at_level("WARNING"):
            zones = load_zones(write(tmp_path, "zones.geojson", ZONES_GEOJSON))
        assert zones["Z2"].internal_point is None
        assert any("Z2" in r.message for r in caplog.records)

    def test_negative_density_rejected(self, tmp_path):
        bad = ZONES_GEOJSON.replace("5000", "-1")
        with pytest.raises(ValidationError):
            load_zones(write(tmp_path, "zones.geojson", bad))

    def test_duplicate_zone_id_rejected(self, tmp_path):
        bad = ZONES_GEOJSON.replace('"Z2"', '"Z1"')
        with pytest.raises(ValidationError, match="duplicate"):
            load_zones(write(tmp_path, "zones.geojson", bad))

    def test_round_trip_byte_identical(self, tmp_path):
        path = write(tmp_path, "zones.geojson", ZONES_GEOJSON)
        canonical = dump_zones(load_zones(path))
        path2 = write(tmp_path, "zones2.geojson", canonical)
        assert dump_zones(load_zones(path2)) == canonical


class TestDwellDefaults:
    @pytest.mark.parametrize("station_id,dep,arr", [
        ("ATL", 110, 60), ("BOS", 105, 40), ("DCA", 100, 35),
        ("LAX", 125, 65), ("SEA", 105, 50), ("SFO", 105, 45),
        ("AMS", 90, 45), ("CDG", 90, 45), ("ORY", 90, 45),
    ])
    def test_airport_table(self, station_id, dep, arr):
        profile = DEFAULT_STATION_DWELL[station_id]
        assert (profile.t_sec_departure_min, profile.t_arr_min) == (dep, arr)

    def test_rail_default(self):
        assert (DEFAULT_RAIL_DWELL.t_sec_departure_min,
                DEFAULT_RAIL_DWELL.t_arr_min) == (15, 10)
        station = make_station("GDN", kind="rail", zone_id="PZ8")
        assert resolve_dwell(station) == DEFAULT_RAIL_DWELL

    def test_station_config_beats_table(self):
        station = make_station("CDG", dwell=DwellProfile(80, 35))
        assert resolve_dwell(station) == DwellProfile(80, 35)

    def test_kind_override_beats_everything(self):
        station = make_station("CDG", dwell=DwellProfile(80, 35))
        overrides = {"air": DwellProfile(60, 30)}
        assert resolve_dwell(station, overrides) == DwellProfile(60, 30)

    def test_stations_csv_dwell_columns(self, tmp_path):
        stations = load_stations(write(tmp_path, "stations.csv", STATIONS_CSV))
        assert resolve_dwell(stations["XNA"]) == DwellProfile(95, 40)
        assert resolve_dwell(stations["CDG"]) == DEFAULT_STATION_DWELL["CDG"]
