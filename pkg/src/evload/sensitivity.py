"""Database-size sensitivity: how many EVs does a stable profile need.

Sub-fleets of increasing size are drawn repeatedly from the event log;
for each draw the max-normalized mean daily charging profile on a chosen
stratum (winter Mondays by default) is compared with the full-fleet
profile.  Convergence shows up as shrinking across-rep spread and cosine
similarity approaching 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .domain import (
    MINUTES_PER_DAY,
    DayOfWeek,
    Season,
    SeasonMap,
    cosine_similarity,
)
from .errors import (
    ConfigError,
    DomainError,
    EmptyFleetError,
    NormalizationError,
    SimilarityUndefinedError,
)
from .ingest import ChargingEvent, assign_rated_power
from .model import N_START_BINS

_BIN_MINUTES = MINUTES_PER_DAY // N_START_BINS


@dataclass(frozen=True)
class ProfileStratum:
    """Which calendar days feed the mean daily profile.

    None relaxes a filter: weekday=None averages over all days of week,
    season=None over the whole year.
    """

    weekday: DayOfWeek | None = DayOfWeek.MON
    season: Season | None = Season.WINTER
    season_map: SeasonMap = field(default_factory=SeasonMap)

    def matches(self, d) -> bool:
        if self.weekday is not None and d.weekday() != int(self.weekday):
            return False
        if self.season is not None and self.season_map.season_of(d.month) != self.season:
            return False
        return True


def _sorted_ids(events: Sequence[ChargingEvent]) -> list[str]:
    return sorted({e.ev_id for e in events})


def ev_profile_rows(
    events: Sequence[ChargingEvent], stratum: ProfileStratum = ProfileStratum()
) -> tuple[list[str], np.ndarray]:
    """Per-EV 96-bin power rows over the stratum's days.

    Row i holds EV i's mean in-bin power (kW), summed over its stratum
    days; any sub-fleet's raw mean profile is a plain row sum, which is
    what makes repeated subsampling cheap.
    """
    if not events:
        raise EmptyFleetError("no events to profile")
    ids = _sorted_ids(events)
    index = {ev_id: i for i, ev_id in enumerate(ids)}
    power = {r.ev_id: r.rated_power for r in assign_rated_power(events)}
    minutes = np.zeros((len(ids), MINUTES_PER_DAY))
    for e in events:
        if not stratum.matches(e.start_date):
            continue
        s = e.start_minute_of_day
        f = min(s + e.duration_minutes, MINUTES_PER_DAY)
        minutes[index[e.ev_id], s:f] += power[e.ev_id]
    rows = minutes.reshape(len(ids), N_START_BINS, _BIN_MINUTES).mean(axis=2)
    return ids, rows


def normalized_profile(rows: np.ndarray) -> np.ndarray:
    """Max-normalized sum of profile rows; errors when the sum is all zero."""
    total = rows.sum(axis=0) if rows.ndim == 2 else rows
    peak = float(total.max(initial=0.0))
    if peak <= 0.0:
        raise NormalizationError("profile stratum holds no charging at all")
    return total / peak


def _choose_indices(n_ids: int, n_evs: int, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(n_ids, size=n_evs, replace=False)


def subsample_fleet(
    events: Sequence[ChargingEvent], n_evs: int, rng: np.random.Generator
) -> list[ChargingEvent]:
    """All events of n_evs uniformly chosen distinct EVs (order preserved)."""
    ids = _sorted_ids(events)
    if n_evs < 1:
        raise DomainError("subsample size must be at least 1")
    if n_evs > len(ids):
        raise DomainError(
            f"cannot sample {n_evs} EVs from a fleet of {len(ids)}"
        )
    chosen = {ids[i] for i in _choose_indices(len(ids), n_evs, rng)}
    return [e for e in events if e.ev_id in chosen]


@dataclass(frozen=True)
class SizeResult:
    """Outcome of all repetitions at one sub-fleet size.

    rep_ids holds the indices of the repetitions that produced a
    profile; it is aligned with cosines and rep_profiles.
    """

    size: int
    rep_ids: np.ndarray
    cosines: np.ndarray
    rep_profiles: np.ndarray
    mean_profile: np.ndarray
    std_profile: np.ndarray
    failures: int


@dataclass(frozen=True)
class SensitivityReport:
    """Full study output, reproducible from (events, sizes, reps, seed)."""

    sizes: tuple[int, ...]
    reps: int
    seed: int
    stratum: ProfileStratum
    full_profile: np.ndarray
    results: tuple[SizeResult, ...]

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigError("repetitions must be >= 1")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ConfigError("sizes must be strictly increasing")


def sample_size_study(
    events: Sequence[ChargingEvent],
    sizes: Sequence[int],
    reps: int,
    seed: int,
    stratum: ProfileStratum = ProfileStratum(),
) -> SensitivityReport:
    """Draw reps sub-fleets per size and measure profile stability.

    Each (size, rep) pair derives its own random stream, so results do
    not depend on evaluation order.  Draws whose stratum holds no
    charging are counted as failures and skipped.
    """
    if reps < 2:
        raise ConfigError("a sensitivity study needs at least 2 repetitions")
    sizes = tuple(int(s) for s in sizes)
    ids, rows = ev_profile_rows(events, stratum)
    for s in sizes:
        if not 1 <= s <= len(ids):
            raise DomainError(f"size {s} outside 1..{len(ids)}")
    full = normalized_profile(rows)
    results = []
    for size in sizes:
        profiles = []
        cosines = []
        rep_ids = []
        failures = 0
        for rep in range(reps):
            rng = np.random.default_rng([seed, size, rep])
            sel = _choose_indices(len(ids), size, rng)
            try:
                profile = normalized_profile(rows[sel])
                cos = cosine_similarity(profile, full)
            except (NormalizationError, SimilarityUndefinedError):
                failures += 1
                continue
            profiles.append(profile)
            cosines.append(cos)
            rep_ids.append(rep)
        rep_profiles = (
            np.array(profiles) if profiles else np.empty((0, N_START_BINS))
        )
        if rep_profiles.shape[0] >= 2:
            std = rep_profiles.std(axis=0, ddof=1)
        else:
            std = np.zeros(N_START_BINS)
        mean = (
            rep_profiles.mean(axis=0)
            if rep_profiles.shape[0]
            else np.zeros(N_START_BINS)
        )
        results.append(
            SizeResult(
                size=size,
                rep_ids=np.array(rep_ids, dtype=np.int64),
                cosines=np.array(cosines),
                rep_profiles=rep_profiles,
                mean_profile=mean,
                std_profile=std,
                failures=failures,
            )
        )
    return SensitivityReport(
        sizes=sizes,
        reps=reps,
        seed=seed,
        stratum=stratum,
        full_profile=full,
        results=tuple(results),
    )


def write_similarity_table(report: SensitivityReport, out: TextIO) -> None:
    """Long-form `size,rep,cosine` rows; failed repetitions are omitted."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["size", "rep", "cosine"])
    for result in report.results:
        for rep, cos in zip(result.rep_ids, result.cosines):
            writer.writerow([result.size, int(rep), repr(float(cos))])


def write_profile_table(report: SensitivityReport, out: TextIO) -> None:
    """Per-step `size,step,mean,std` of the normalized profile across reps."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["size", "step", "mean", "std"])
    for result in report.results:
        for step in range(N_START_BINS):
            writer.writerow(
                [
                    result.size,
                    step,
                    repr(float(result.mean_profile[step])),
                    repr(float(result.std_profile[step])),
                ]
            )
