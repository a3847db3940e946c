"""Monte Carlo generation of per-EV daily charging schedules and profiles.

For one EV-day: the daily event count is drawn from the recharge-count
PMF, then each event gets a start time and a duration from the matching
start-time and duration PMFs.  Stop times follow from start + duration,
and the whole start set is re-drawn while the strict non-overlap ordering
is violated, up to a retry budget; after that, the most recently sampled
conflicting events are dropped so generation always terminates.

Every EV-day derives its own random stream from (seed, ev_id, date), so
fleet results are reproducible and independent of execution order.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from datetime import date as Date, datetime, time, timedelta
from typing import Iterable, Iterator, TextIO

import numpy as np

from . import _kernel
from .domain import MINUTES_PER_DAY, DayOfWeek, TimeGrid, day_type_of
from .errors import ConfigError, DomainError, StructuralError
from .ingest import TIMESTAMP_FORMAT, EvRecord
from .model import EvProfileModel

DEFAULT_RETRY_BUDGET = 100

# EVs per work chunk during fleet aggregation.  Fixed (independent of the
# worker count) so that serial and parallel runs sum partials in the same
# order and stay bit-identical.
_CHUNK_EVS = 64


@dataclass(frozen=True)
class GenerationOptions:
    """Knobs for schedule realization.

    start_jitter places each start uniformly inside its 15-min bin
    (avoiding comb artifacts at 1-min resolution); duration_within_bin
    chooses the bin's upper label ("upper") or a uniform minute inside the
    bin ("uniform"); midnight handling either truncates events at 24:00 or
    carries the remainder into the next generated day.
    """

    start_jitter: bool = True
    duration_within_bin: str = "upper"
    retry_budget: int = DEFAULT_RETRY_BUDGET
    midnight: str = "truncate"

    def __post_init__(self):
        if self.duration_within_bin not in ("upper", "uniform"):
            raise ConfigError(f"bad duration mode {self.duration_within_bin!r}")
        if self.midnight not in ("truncate", "carryover"):
            raise ConfigError(f"bad midnight mode {self.midnight!r}")
        if self.retry_budget < 0:
            raise ConfigError("retry budget must be >= 0")


@dataclass(frozen=True)
class ChargingInterval:
    """One generated charging event inside a day (minutes, end exclusive)."""

    t_s: int
    dur: int

    def __post_init__(self):
        if self.dur <= 0:
            raise DomainError("interval duration must be positive")
        if not 0 <= self.t_s < MINUTES_PER_DAY:
            raise DomainError("interval start must lie within the day")

    @property
    def t_f(self) -> int:
        return self.t_s + self.dur


@dataclass(frozen=True)
class ChargingSchedule:
    """Ordered, strictly non-overlapping events for one EV-day."""

    ev_id: str
    date: Date
    intervals: tuple[ChargingInterval, ...]
    dropped_events: int = 0

    def __post_init__(self):
        prev_end = -1
        for iv in self.intervals:
            if iv.t_s <= prev_end:
                raise StructuralError("schedule intervals must be strictly ordered")
            prev_end = iv.t_f

    @property
    def n(self) -> int:
        return len(self.intervals)

    @property
    def scheduled_minutes(self) -> int:
        return sum(iv.dur for iv in self.intervals)

    @property
    def truncated_minutes(self) -> int:
        """Scheduled minutes clipped at 24:00 (only the last event can cross)."""
        return sum(min(iv.t_f, MINUTES_PER_DAY) - iv.t_s for iv in self.intervals)


@dataclass(frozen=True)
class DailyProfile:
    """Power time series for one EV-day (or an aggregate tag)."""

    ev_id: str
    date: Date
    grid: TimeGrid
    power: np.ndarray

    def __post_init__(self):
        power = np.ascontiguousarray(self.power, dtype=np.float64)
        if power.shape != (self.grid.steps_per_day,):
            raise StructuralError(
                f"profile length {power.shape} does not match grid "
                f"{self.grid.steps_per_day}"
            )
        if np.any(power < 0):
            raise StructuralError("profile power must be non-negative")
        power.flags.writeable = False
        object.__setattr__(self, "power", power)

    @property
    def energy_kwh(self) -> float:
        return float(self.power.sum()) * self.grid.resolution / 60.0


@dataclass
class GenerationStats:
    """Counters accumulated while generating a fleet."""

    ev_days: int = 0
    events: int = 0
    dropped_events: int = 0
    ev_days_with_drops: int = 0
    carried_minutes: int = 0

    def merge(self, other: "GenerationStats") -> None:
        self.ev_days += other.ev_days
        self.events += other.events
        self.dropped_events += other.dropped_events
        self.ev_days_with_drops += other.ev_days_with_drops
        self.carried_minutes += other.carried_minutes


_U64 = (1 << 64) - 1


def ev_stream_key(ev_id: str) -> int:
    """Stable 64-bit key for an EV id (independent of hash randomization)."""
    return int.from_bytes(hashlib.sha256(ev_id.encode()).digest()[:8], "big")


def _ev_key_words(ev_id: str) -> tuple[int, int]:
    dig = hashlib.sha256(ev_id.encode()).digest()
    return (
        int.from_bytes(dig[:8], "big"),
        int.from_bytes(dig[8:16], "big"),
    )


def day_rng(seed: int, ev_id: str, date: Date) -> np.random.Generator:
    """Independent random stream for one EV-day.

    Streams are keyed, not sequential: the counter-mode bit generator gets
    a 128-bit key folding the seed with a hash of the EV id and the date
    ordinal, so any (seed, ev_id, date) triple replays in isolation and
    iteration order never matters.
    """
    hi, lo = _ev_key_words(ev_id)
    key = np.array(
        [(hi ^ seed) & _U64, (lo ^ date.toordinal()) & _U64], dtype=np.uint64
    )
    return np.random.Generator(np.random.Philox(key=key))


class _DayStreams:
    """Per-EV-day streams bit-identical to day_rng without rebuilding a
    Generator per day; resetting the keyed state is ~10x cheaper."""

    def __init__(self, seed: int):
        self._seed = seed
        self._bg = np.random.Philox(key=np.zeros(2, dtype=np.uint64))
        self._rng = np.random.Generator(self._bg)
        self._template = self._bg.state
        self._zero_counter = np.zeros(4, dtype=np.uint64)

    def for_day(self, hi: int, lo: int, ordinal: int) -> np.random.Generator:
        t = self._template
        t["state"]["key"][0] = (hi ^ self._seed) & _U64
        t["state"]["key"][1] = (lo ^ ordinal) & _U64
        t["state"]["counter"] = self._zero_counter
        t["buffer_pos"] = 4
        t["has_uint32"] = 0
        t["uinteger"] = 0
        self._bg.state = t
        return self._rng


def generate_schedule(
    model: EvProfileModel,
    ev: EvRecord,
    date: Date,
    rng: np.random.Generator,
    options: GenerationOptions = GenerationOptions(),
) -> ChargingSchedule:
    """Draw one EV-day schedule from the fitted model.

    An empty schedule (n = 0) is a valid result.
    """
    day = DayOfWeek(date.weekday())
    season = model.metadata.season_map.season_of(date.month)
    count = model.recharge_count[(ev.ev_type, day)]
    dur = model.duration[ev.ev_type]
    start = model.start_time[(ev.ev_type, day_type_of(day), season)]
    starts, durs, dropped = _kernel.sample_day(
        count.cdf, count.probs, count.labels,
        dur.cdf, dur.probs, dur.labels,
        start.cdf, start.probs, start.labels,
        options.start_jitter,
        options.duration_within_bin == "uniform",
        options.retry_budget,
        rng,
    )
    intervals = tuple(
        ChargingInterval(t_s=int(s), dur=int(d)) for s, d in zip(starts, durs)
    )
    return ChargingSchedule(
        ev_id=ev.ev_id, date=date, intervals=intervals, dropped_events=dropped
    )


def _minute_pulse(schedule: ChargingSchedule, rated_power: float) -> tuple[np.ndarray, int]:
    """1-min pulse train clipped at 24:00, plus the clipped carry minutes."""
    out = np.zeros(MINUTES_PER_DAY, dtype=np.float64)
    if not schedule.intervals:
        return out, 0
    starts = np.fromiter((iv.t_s for iv in schedule.intervals), dtype=np.int64)
    durs = np.fromiter((iv.dur for iv in schedule.intervals), dtype=np.int64)
    carry = _kernel.rasterize_into(starts, durs, rated_power, out)
    return out, int(carry)


def _downsample(minutes: np.ndarray, grid: TimeGrid) -> np.ndarray:
    if grid.resolution == 1:
        return minutes
    return minutes.reshape(grid.steps_per_day, grid.resolution).mean(axis=1)


def schedule_to_profile(
    schedule: ChargingSchedule,
    rated_power: float,
    grid: TimeGrid = TimeGrid(1),
) -> DailyProfile:
    """Turn a schedule into its power profile on a grid.

    The native pulse train is at 1-min resolution; coarser grids hold the
    within-bin average power, which preserves energy exactly.  Events
    crossing midnight are truncated at 24:00.
    """
    minutes, _ = _minute_pulse(schedule, rated_power)
    return DailyProfile(
        ev_id=schedule.ev_id,
        date=schedule.date,
        grid=grid,
        power=_downsample(minutes, grid),
    )


def _ev_day_minutes(
    model: EvProfileModel,
    ev: EvRecord,
    date: Date,
    rng: np.random.Generator,
    options: GenerationOptions,
    carry_in: int,
    stats: GenerationStats | None,
) -> tuple[np.ndarray, int]:
    schedule = generate_schedule(model, ev, date, rng, options)
    minutes, carry = _minute_pulse(schedule, ev.rated_power)
    if carry_in > 0:
        # Union with the tail carried across midnight: one EV never draws
        # more than its rated power.
        minutes[: min(carry_in, MINUTES_PER_DAY)] = ev.rated_power
        np.minimum(minutes, ev.rated_power, out=minutes)
    if stats is not None:
        stats.ev_days += 1
        stats.events += schedule.n
        stats.dropped_events += schedule.dropped_events
        if schedule.dropped_events:
            stats.ev_days_with_drops += 1
        stats.carried_minutes += carry
    return minutes, carry


def generate_fleet(
    model: EvProfileModel,
    fleet: Iterable[EvRecord],
    dates: Iterable[Date],
    seed: int,
    grid: TimeGrid = TimeGrid(15),
    options: GenerationOptions = GenerationOptions(),
    stats: GenerationStats | None = None,
) -> Iterator[DailyProfile]:
    """Yield one profile per (EV, date), EV-major.

    Profiles depend only on (seed, ev_id, date), never on iteration order,
    so permuting the fleet permutes but does not change the profiles.
    """
    dates = list(dates)
    streams = _DayStreams(seed)
    for ev in fleet:
        hi, lo = _ev_key_words(ev.ev_id)
        carry = 0
        prev: Date | None = None
        for date in dates:
            if options.midnight != "carryover" or (
                prev is not None and date != prev + timedelta(days=1)
            ):
                carry = 0
            rng = streams.for_day(hi, lo, date.toordinal())
            minutes, carry = _ev_day_minutes(
                model, ev, date, rng, options, carry, stats
            )
            if options.midnight != "carryover":
                carry = 0
            prev = date
            yield DailyProfile(
                ev_id=ev.ev_id, date=date, grid=grid, power=_downsample(minutes, grid)
            )


def _aggregate_chunk(args) -> tuple[list[np.ndarray], GenerationStats]:
    model, chunk, dates, seed, options = args
    stats = GenerationStats()
    streams = _DayStreams(seed)
    partial = [np.zeros(MINUTES_PER_DAY, dtype=np.float64) for _ in dates]
    for ev in chunk:
        hi, lo = _ev_key_words(ev.ev_id)
        carry = 0
        prev = None
        for i, date in enumerate(dates):
            if options.midnight != "carryover" or (
                prev is not None and date != prev + timedelta(days=1)
            ):
                carry = 0
            rng = streams.for_day(hi, lo, date.toordinal())
            minutes, carry = _ev_day_minutes(
                model, ev, date, rng, options, carry, stats
            )
            if options.midnight != "carryover":
                carry = 0
            prev = date
            partial[i] += minutes
    return partial, stats


def aggregate_fleet_load(
    model: EvProfileModel,
    fleet: Iterable[EvRecord],
    dates: Iterable[Date],
    seed: int,
    grid: TimeGrid = TimeGrid(15),
    options: GenerationOptions = GenerationOptions(),
    stats: GenerationStats | None = None,
    workers: int | None = None,
) -> dict[Date, DailyProfile]:
    """Sum the fleet's load per date without materializing per-EV profiles.

    Work is chunked by EV; chunk partials are reduced in a fixed order so
    the result does not depend on the worker count (capped by the
    EVLOAD_THREADS environment variable).
    """
    from .parallel import map_chunks

    fleet = list(fleet)
    dates = list(dates)
    chunks = [fleet[i : i + _CHUNK_EVS] for i in range(0, len(fleet), _CHUNK_EVS)]
    totals = [np.zeros(MINUTES_PER_DAY, dtype=np.float64) for _ in dates]
    merged = GenerationStats()
    arglist = [(model, chunk, dates, seed, options) for chunk in chunks]
    for partial, chunk_stats in map_chunks(_aggregate_chunk, arglist, workers):
        for tot, part in zip(totals, partial):
            tot += part
        merged.merge(chunk_stats)
    if stats is not None:
        stats.merge(merged)
    return {
        date: DailyProfile(
            ev_id="aggregate", date=date, grid=grid, power=_downsample(tot, grid)
        )
        for date, tot in zip(dates, totals)
    }


def write_profiles_long(profiles: Iterable[DailyProfile], out: TextIO) -> None:
    """One `ev_id,timestamp,kw` row per grid step per profile.

    Zero-charging days still get all their rows, so consumers can count
    on a fixed row count per EV-day.
    """
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["ev_id", "timestamp", "kw"])
    for p in profiles:
        base = datetime.combine(p.date, time())
        step = timedelta(minutes=p.grid.resolution)
        for i, kw in enumerate(p.power):
            writer.writerow(
                [p.ev_id, (base + i * step).strftime(TIMESTAMP_FORMAT), repr(float(kw))]
            )


def write_profiles_wide(profiles: Iterable[DailyProfile], out: TextIO) -> None:
    """One `ev_id,date,v1..vN` row per profile; all must share one grid."""
    writer = csv.writer(out, lineterminator="\n")
    grid: TimeGrid | None = None
    for p in profiles:
        if grid is None:
            grid = p.grid
            writer.writerow(
                ["ev_id", "date"] + [f"v{i}" for i in range(1, grid.steps_per_day + 1)]
            )
        elif p.grid != grid:
            raise StructuralError("wide-format profiles must share one grid")
        writer.writerow(
            [p.ev_id, p.date.isoformat()] + [repr(float(v)) for v in p.power]
        )
