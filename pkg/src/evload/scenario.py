"""Fleet aggregation and penetration scenarios over metered base loads.

A scenario takes per-customer base-load curves for one day, assigns EVs
to a seeded fraction of customers, layers the generated charging load on
top, and reports the aggregate curve and its peak per penetration level.
Customer selection is a permutation prefix, so levels are nested: every
customer charged at 30% penetration is also charged at 50%.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from datetime import date as Date
from typing import Mapping, Sequence, TextIO

import numpy as np

from .domain import (
    MINUTES_PER_DAY,
    PMF_SUM_TOL,
    EvType,
    TimeGrid,
    cosine_similarity,
)
from .errors import (
    ConfigError,
    EmptyFleetError,
    NormalizationError,
    ParseError,
    StructuralError,
)
from .generator import DailyProfile, GenerationOptions, aggregate_fleet_load
from .ingest import EvRecord
from .model import EvProfileModel

DEFAULT_EV_POWERS: dict[EvType, float] = {
    EvType.SMALL: 3.0,
    EvType.MEDIUM: 6.6,
    EvType.LARGE: 9.6,
}


@dataclass(frozen=True)
class BaseLoadSet:
    """Per-customer base consumption curves sharing one date and grid."""

    profiles: dict[str, DailyProfile]

    def __post_init__(self):
        if not self.profiles:
            raise EmptyFleetError("base load set has no customers")
        grids = {p.grid for p in self.profiles.values()}
        dates = {p.date for p in self.profiles.values()}
        if len(grids) != 1 or len(dates) != 1:
            raise StructuralError("base profiles must share one grid and date")

    @property
    def grid(self) -> TimeGrid:
        return next(iter(self.profiles.values())).grid

    @property
    def date(self) -> Date:
        return next(iter(self.profiles.values())).date

    @property
    def customer_ids(self) -> tuple[str, ...]:
        return tuple(self.profiles)

    def total(self) -> DailyProfile:
        return aggregate_profiles(list(self.profiles.values()))


def aggregate_profiles(
    profiles: Sequence[DailyProfile],
    grid: TimeGrid | None = None,
    date: Date | None = None,
) -> DailyProfile:
    """Element-wise sum of profiles on a shared grid.

    An empty list needs an explicitly declared grid and date and yields
    the zero profile.
    """
    if not profiles:
        if grid is None or date is None:
            raise StructuralError("empty aggregation needs an explicit grid and date")
        return DailyProfile(
            ev_id="aggregate",
            date=date,
            grid=grid,
            power=np.zeros(grid.steps_per_day),
        )
    first = profiles[0]
    total = np.zeros(first.grid.steps_per_day)
    for p in profiles:
        if p.grid != first.grid:
            raise StructuralError("profiles on different grids cannot be summed")
        total += p.power
    return DailyProfile(
        ev_id="aggregate", date=first.date, grid=first.grid, power=total
    )


def peak_of(profile: DailyProfile) -> tuple[int, float]:
    """(minute-of-day, kW) of the profile maximum; ties take the earliest step."""
    idx = int(np.argmax(profile.power))
    return idx * profile.grid.resolution, float(profile.power[idx])


def max_normalize(profile: DailyProfile, base: float | None = None) -> DailyProfile:
    """Scale a profile to per-unit by its own max or an external base."""
    scale = float(np.max(profile.power)) if base is None else float(base)
    if scale <= 0.0:
        raise NormalizationError("cannot normalize by a non-positive maximum")
    return DailyProfile(
        ev_id=profile.ev_id,
        date=profile.date,
        grid=profile.grid,
        power=profile.power / scale,
    )


@dataclass(frozen=True)
class ProfileComparison:
    """Shape and magnitude metrics between a forecast and a reference curve."""

    cosine: float
    peak_time_diff_minutes: int
    peak_ratio: float
    energy_ratio: float
    energy_error_before_peak_kwh: float
    energy_error_after_peak_kwh: float


def compare_profiles(
    forecast: DailyProfile, reference: DailyProfile
) -> ProfileComparison:
    """Compare two curves on one grid.

    Energy errors are signed (forecast minus reference) and split at the
    reference peak step, so a forecast that front-loads energy shows a
    positive before-peak error and a negative after-peak error.
    """
    if forecast.grid != reference.grid:
        raise StructuralError("profiles on different grids cannot be compared")
    f_min, f_kw = peak_of(forecast)
    r_min, r_kw = peak_of(reference)
    step_h = forecast.grid.resolution / 60.0
    split = r_min // forecast.grid.resolution
    diff = (forecast.power - reference.power) * step_h
    return ProfileComparison(
        cosine=cosine_similarity(forecast.power, reference.power),
        peak_time_diff_minutes=f_min - r_min,
        peak_ratio=f_kw / r_kw,
        energy_ratio=forecast.energy_kwh / reference.energy_kwh,
        energy_error_before_peak_kwh=float(diff[:split].sum()),
        energy_error_after_peak_kwh=float(diff[split:].sum()),
    )


@dataclass(frozen=True)
class ScenarioConfig:
    """Penetration sweep settings.

    fleet_mix ratios must sum to 1; ev_powers are the representative
    rated powers assigned to scenario EVs of each type.
    """

    penetrations: tuple[float, ...]
    fleet_mix: Mapping[EvType, float]
    seed: int
    ev_powers: Mapping[EvType, float] = field(
        default_factory=lambda: dict(DEFAULT_EV_POWERS)
    )

    def __post_init__(self):
        if not self.penetrations:
            raise ConfigError("at least one penetration level is required")
        for p in self.penetrations:
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"penetration {p} outside [0, 1]")
        total = math.fsum(self.fleet_mix.get(t, 0.0) for t in EvType)
        if abs(total - 1.0) > PMF_SUM_TOL:
            raise ConfigError(f"fleet mix ratios sum to {total}, expected 1")
        for t, ratio in self.fleet_mix.items():
            if ratio < 0:
                raise ConfigError(f"negative mix ratio for {t.label}")
        for t in EvType:
            if self.ev_powers.get(t, 0.0) <= 0.0:
                raise ConfigError(f"missing or non-positive power for {t.label}")


@dataclass(frozen=True)
class ScenarioLevel:
    """Aggregate outcome at one penetration level."""

    penetration: float
    n_evs: int
    profile: DailyProfile
    peak_kw: float
    peak_minute: int
    peak_pu: float


@dataclass(frozen=True)
class ScenarioResult:
    """Sweep outcome; peak_pu values are scaled to the base-case maximum."""

    base_peak_kw: float
    base_peak_minute: int
    levels: tuple[ScenarioLevel, ...]


def quota_type_sequence(mix: Mapping[EvType, float], n: int) -> list[EvType]:
    """Deterministic type sequence tracking mix ratios within one EV at
    every prefix length (greedy largest-deficit apportionment)."""
    counts = {t: 0 for t in EvType}
    out: list[EvType] = []
    for i in range(1, n + 1):
        best = max(EvType, key=lambda t: (mix.get(t, 0.0) * i - counts[t], -t))
        counts[best] += 1
        out.append(best)
    return out


def scenario_fleet(
    base: BaseLoadSet, config: ScenarioConfig
) -> tuple[list[EvRecord], list[int]]:
    """Full-permutation EV assignment and per-level fleet sizes.

    Each customer's hypothetical EV (identity, type, power) is fixed by
    the seed alone; a penetration level just takes a permutation prefix,
    so higher levels strictly extend lower ones.
    """
    ids = base.customer_ids
    order = np.random.default_rng(config.seed).permutation(len(ids))
    types = quota_type_sequence(config.fleet_mix, len(ids))
    fleet = [
        EvRecord(
            ev_id=f"ev-{ids[j]}",
            ev_type=t,
            rated_power=float(config.ev_powers[t]),
        )
        for j, t in zip(order, types)
    ]
    counts = [int(math.floor(p * len(ids) + 0.5)) for p in config.penetrations]
    return fleet, counts


def apply_penetration(
    base: BaseLoadSet,
    config: ScenarioConfig,
    model: EvProfileModel,
    options: GenerationOptions = GenerationOptions(),
    workers: int | None = None,
) -> ScenarioResult:
    """Run the penetration sweep on one base-load day.

    EV load is accumulated incrementally over the nested fleets, so the
    aggregate curve is pointwise non-decreasing in penetration by
    construction.
    """
    fleet, counts = scenario_fleet(base, config)
    date = base.date
    grid = base.grid
    base_total = base.total()
    running = base_total.power.copy()
    base_peak_minute, base_peak_kw = peak_of(base_total)

    order = sorted(range(len(counts)), key=lambda i: counts[i])
    levels: list[ScenarioLevel | None] = [None] * len(counts)
    prev = 0
    for i in order:
        count = counts[i]
        if count > prev:
            extra = aggregate_fleet_load(
                model, fleet[prev:count], [date], seed=config.seed,
                grid=grid, options=options, workers=workers,
            )[date]
            running = running + extra.power
            prev = count
        profile = DailyProfile(ev_id="aggregate", date=date, grid=grid, power=running)
        peak_minute, peak_kw = peak_of(profile)
        levels[i] = ScenarioLevel(
            penetration=config.penetrations[i],
            n_evs=count,
            profile=profile,
            peak_kw=peak_kw,
            peak_minute=peak_minute,
            peak_pu=peak_kw / base_peak_kw,
        )
    return ScenarioResult(
        base_peak_kw=base_peak_kw,
        base_peak_minute=base_peak_minute,
        levels=tuple(levels),
    )


_BASE_HEADER_RE = re.compile(
    r"^#\s*date=(\d{4}-\d{2}-\d{2})\s+resolution=(\d+)\s*$"
)


def write_base_loads(base: BaseLoadSet, out: TextIO) -> None:
    """Write `customer_id,v1..vN` rows under a date/resolution header line."""
    grid = base.grid
    out.write(f"# date={base.date.isoformat()} resolution={grid.resolution}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["customer_id"] + [f"v{i}" for i in range(1, grid.steps_per_day + 1)]
    )
    for cid, profile in base.profiles.items():
        writer.writerow([cid] + [repr(float(v)) for v in profile.power])


def read_base_loads(source: TextIO) -> BaseLoadSet:
    """Parse the base-load format written by write_base_loads."""
    first = source.readline()
    m = _BASE_HEADER_RE.match(first.strip())
    if not m:
        raise ParseError("base-load file must start with '# date=... resolution=...'")
    date = Date.fromisoformat(m.group(1))
    grid = TimeGrid(int(m.group(2)))
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("base-load file has no column header") from None
    expected = ["customer_id"] + [f"v{i}" for i in range(1, grid.steps_per_day + 1)]
    if header != expected:
        raise ParseError("base-load column header does not match the resolution")
    profiles: dict[str, DailyProfile] = {}
    for lineno, row in enumerate(reader, start=3):
        if len(row) != len(expected):
            raise ParseError(f"line {lineno}: expected {len(expected)} fields")
        cid = row[0]
        if not cid or cid in profiles:
            raise ParseError(f"line {lineno}: missing or duplicate customer id")
        try:
            values = np.array([float(v) for v in row[1:]])
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric power value") from None
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ParseError(f"line {lineno}: power values must be finite and >= 0")
        profiles[cid] = DailyProfile(ev_id=cid, date=date, grid=grid, power=values)
    return BaseLoadSet(profiles=profiles)


def write_profile_curve(profile: DailyProfile, out: TextIO) -> None:
    """Single daily curve as `minute,kw` rows under the date/resolution line."""
    out.write(
        f"# date={profile.date.isoformat()} resolution={profile.grid.resolution}\n"
    )
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["minute", "kw"])
    for i, kw in enumerate(profile.power):
        writer.writerow([i * profile.grid.resolution, repr(float(kw))])


def read_profile_curve(source: TextIO, ev_id: str = "aggregate") -> DailyProfile:
    """Parse a curve written by write_profile_curve."""
    first = source.readline()
    m = _BASE_HEADER_RE.match(first.strip())
    if not m:
        raise ParseError("curve file must start with '# date=... resolution=...'")
    date = Date.fromisoformat(m.group(1))
    grid = TimeGrid(int(m.group(2)))
    reader = csv.reader(source)
    if next(reader, None) != ["minute", "kw"]:
        raise ParseError("curve file must have a minute,kw header")
    values = np.zeros(grid.steps_per_day)
    seen = np.zeros(grid.steps_per_day, dtype=bool)
    for lineno, row in enumerate(reader, start=3):
        try:
            minute, kw = int(row[0]), float(row[1])
        except (ValueError, IndexError):
            raise ParseError(f"line {lineno}: malformed curve row") from None
        if minute % grid.resolution or not 0 <= minute < MINUTES_PER_DAY:
            raise ParseError(f"line {lineno}: minute {minute} off the grid")
        step = minute // grid.resolution
        if seen[step]:
            raise ParseError(f"line {lineno}: duplicate minute {minute}")
        seen[step] = True
        values[step] = kw
    if not seen.all():
        raise ParseError("curve file does not cover every grid step")
    return DailyProfile(ev_id=ev_id, date=date, grid=grid, power=values)


def _fmt_minute(minute: int) -> str:
    return f"{minute // 60:02d}:{minute % 60:02d}"


def write_scenario_summary(result: ScenarioResult, out: TextIO) -> None:
    """Summary table: penetration,peak_kw,peak_time,peak_pu."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["penetration", "peak_kw", "peak_time", "peak_pu"])
    for level in result.levels:
        writer.writerow(
            [
                repr(level.penetration),
                repr(level.peak_kw),
                _fmt_minute(level.peak_minute),
                repr(level.peak_pu),
            ]
        )
