"""Fitting of the three PMF families and the fitted-model container.

Three families are fitted from cleaned events:

* recharge counts per (EV type, day of week), over n = 0, 1, 2, ...
  including zero-event EV-days,
* charging start times per (EV type, day type, season) over 96
  fifteen-minute bins of the day,
* charging durations per EV type over 15-minute duration bins.

Strata with no observations fall back to the same stratum with season
dropped, then with day type dropped; every fallback is recorded in the
model metadata so the generator never faces a missing PMF.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Iterable, Mapping, TextIO

import numpy as np

from .domain import (
    MINUTES_PER_DAY,
    START_BIN_MINUTES,
    DayOfWeek,
    DayType,
    EvType,
    Pmf,
    Season,
    SeasonMap,
    day_type_of,
    pmf_from_counts,
)
from .errors import (
    DomainError,
    EmptyDistributionError,
    ModelSchemaError,
    StructuralError,
)
from .ingest import ChargingEvent, EvRecord

SCHEMA_VERSION = 1
N_START_BINS = MINUTES_PER_DAY // START_BIN_MINUTES
START_BIN_LABELS = np.arange(N_START_BINS, dtype=np.int64) * START_BIN_MINUTES

# Duration coordinate for charging_probability when the caller does not
# supply one; hour-long sessions are the norm in residential level-II data.
DEFAULT_REFERENCE_DURATION_MIN = 60


def bin_duration(duration: float) -> int:
    """Map a positive duration in minutes to its 15-min bin label.

    A duration d falls in bin (15*(i-1), 15*i] and gets label 15*i, so the
    label is the bin's inclusive upper edge.
    """
    if duration <= 0:
        raise DomainError("duration must be positive")
    return 15 * math.ceil(duration / 15.0)


def start_bin(minute_of_day: int) -> int:
    """Label of the 15-min bin containing a minute-of-day (0, 15, ..., 1425)."""
    if not 0 <= minute_of_day < MINUTES_PER_DAY:
        raise DomainError(f"minute-of-day {minute_of_day} out of range")
    return (minute_of_day // START_BIN_MINUTES) * START_BIN_MINUTES


@dataclass(frozen=True)
class FallbackNote:
    """Record of an empty stratum resolved by pooling a wider one."""

    family: str
    stratum: str
    used: str


@dataclass(frozen=True)
class ModelMetadata:
    study_start: date
    study_end: date
    fleet_counts: dict[EvType, int]
    season_map: SeasonMap
    bin_width_minutes: int = START_BIN_MINUTES
    fallbacks: tuple[FallbackNote, ...] = ()


@dataclass(frozen=True)
class EvProfileModel:
    """The fitted model: all PMF families plus fit metadata.

    Immutable and safe to share across concurrent readers.
    """

    recharge_count: dict[tuple[EvType, DayOfWeek], Pmf]
    start_time: dict[tuple[EvType, DayType, Season], Pmf]
    duration: dict[EvType, Pmf]
    metadata: ModelMetadata

    def __post_init__(self):
        for t in EvType:
            if t not in self.duration:
                raise StructuralError(f"missing duration PMF for {t.label}")
            for d in DayOfWeek:
                if (t, d) not in self.recharge_count:
                    raise StructuralError(
                        f"missing recharge-count PMF for {t.label}/{d.label}"
                    )
            for dt in DayType:
                for s in Season:
                    if (t, dt, s) not in self.start_time:
                        raise StructuralError(
                            f"missing start-time PMF for {t.label}/{dt.label}/{s.label}"
                        )
        for (t, dt, s), pmf in self.start_time.items():
            if not np.array_equal(pmf.labels, START_BIN_LABELS):
                raise StructuralError(
                    f"start-time PMF {t.label}/{dt.label}/{s.label} must cover "
                    f"all 96 bins 0..1425"
                )
        for t, pmf in self.duration.items():
            lab = pmf.labels
            if lab[0] <= 0 or np.any(lab % 15 != 0):
                raise StructuralError(
                    f"duration PMF {t.label} labels must be positive multiples of 15"
                )


# ---------------------------------------------------------------------------
# Internal columnar view of an event list, built once per fit.
# ---------------------------------------------------------------------------


class _EventArrays:
    def __init__(self, events: list[ChargingEvent], ev_types: Mapping[str, EvType]):
        n = len(events)
        self.ev_type = np.empty(n, dtype=np.int8)
        self.start_min = np.empty(n, dtype=np.int32)
        self.dur_min = np.empty(n, dtype=np.int32)
        self.date_ord = np.empty(n, dtype=np.int64)
        self.weekday = np.empty(n, dtype=np.int8)
        self.month = np.empty(n, dtype=np.int8)
        self.ev_index = np.empty(n, dtype=np.int64)
        ev_ids = sorted({e.ev_id for e in events} | set(ev_types))
        index_of = {ev: i for i, ev in enumerate(ev_ids)}
        self.ev_ids = ev_ids
        for i, e in enumerate(events):
            try:
                self.ev_type[i] = int(ev_types[e.ev_id])
            except KeyError:
                raise StructuralError(f"event from unknown EV {e.ev_id!r}") from None
            d = e.start_date
            self.ev_index[i] = index_of[e.ev_id]
            self.start_min[i] = e.start_minute_of_day
            self.dur_min[i] = e.duration_minutes
            self.date_ord[i] = d.toordinal()
            self.weekday[i] = d.weekday()
            self.month[i] = d.month

    def window_mask(self, window: tuple[date, date] | None) -> np.ndarray:
        if window is None:
            return np.ones(len(self.ev_type), dtype=bool)
        lo, hi = window[0].toordinal(), window[1].toordinal()
        return (self.date_ord >= lo) & (self.date_ord <= hi)


def _duration_pmf_from_mask(arr: _EventArrays, mask: np.ndarray) -> Pmf:
    durs = arr.dur_min[mask]
    if durs.size == 0:
        raise EmptyDistributionError("no events in stratum")
    bins = np.ceil(durs / 15.0).astype(np.int64)
    counts = np.bincount(bins)[1:]  # bin index 1 -> label 15
    labels = np.arange(1, counts.size + 1, dtype=np.int64) * 15
    return pmf_from_counts(counts, labels)


def _start_pmf_from_mask(arr: _EventArrays, mask: np.ndarray) -> Pmf:
    starts = arr.start_min[mask]
    if starts.size == 0:
        raise EmptyDistributionError("no events in stratum")
    bins = starts // START_BIN_MINUTES
    counts = np.bincount(bins, minlength=N_START_BINS)
    return pmf_from_counts(counts, START_BIN_LABELS)


def _dates_in_window(window: tuple[date, date]) -> list[date]:
    lo, hi = window
    if hi < lo:
        raise EmptyDistributionError("empty study window")
    return [lo + timedelta(days=i) for i in range((hi - lo).days + 1)]


def _recharge_pmf(
    arr: _EventArrays,
    ev_indices: np.ndarray,
    mask: np.ndarray,
    n_dates: int,
) -> Pmf:
    """Count PMF over EV-days: every (EV of type, stratum date) pair counts,
    zero-event days included."""
    n_ev_days = int(ev_indices.size) * n_dates
    if n_ev_days == 0:
        raise EmptyDistributionError("no EV-days in stratum")
    key = arr.ev_index[mask] * np.int64(1 << 23) + arr.date_ord[mask]
    _, per_day_counts = np.unique(key, return_counts=True)
    max_n = int(per_day_counts.max()) if per_day_counts.size else 0
    counts = np.zeros(max_n + 1, dtype=np.int64)
    if per_day_counts.size:
        counts[1:] = np.bincount(per_day_counts)[1:]
    counts[0] = n_ev_days - int(per_day_counts.size)
    labels = np.arange(max_n + 1, dtype=np.int64)
    return pmf_from_counts(counts, labels)


# ---------------------------------------------------------------------------
# Public per-stratum fitting operations.
# ---------------------------------------------------------------------------


def ev_type_map(records: Iterable[EvRecord]) -> dict[str, EvType]:
    return {r.ev_id: r.ev_type for r in records}


def fit_duration_pmf(
    events: list[ChargingEvent],
    ev_type: EvType,
    ev_types: Mapping[str, EvType],
) -> Pmf:
    """Duration-bin PMF for one EV type (contiguous 15-min labels from 15)."""
    arr = _EventArrays(events, ev_types)
    return _duration_pmf_from_mask(arr, arr.ev_type == int(ev_type))


def fit_start_time_pmf(
    events: list[ChargingEvent],
    ev_type: EvType,
    day_type: DayType,
    season: Season,
    ev_types: Mapping[str, EvType],
    season_map: SeasonMap | None = None,
) -> Pmf:
    """Start-time PMF over the 96 bins of the day for one stratum.

    Saturday and Sunday events are pooled into the weekend stratum;
    normalization is over time bins, not over days.
    """
    season_map = season_map or SeasonMap()
    arr = _EventArrays(events, ev_types)
    mask = _start_stratum_mask(arr, ev_type, day_type, season, season_map)
    return _start_pmf_from_mask(arr, mask)


def _start_stratum_mask(arr, ev_type, day_type, season, season_map):
    mask = arr.ev_type == int(ev_type)
    if day_type is not None:
        if day_type is DayType.WEEKEND:
            mask &= arr.weekday >= 5
        else:
            mask &= arr.weekday == int(day_type)
    if season is not None:
        season_of_month = np.array(
            [int(season_map.season_of(m)) for m in range(1, 13)], dtype=np.int8
        )
        mask &= season_of_month[arr.month - 1] == int(season)
    return mask


def fit_recharge_count_pmf(
    events: list[ChargingEvent],
    ev_type: EvType,
    day: DayOfWeek,
    study_window: tuple[date, date],
    ev_types: Mapping[str, EvType],
) -> Pmf:
    """Daily recharge-count PMF for (EV type, day of week) over a window.

    Every EV of the type contributes one observation per calendar date of
    that weekday inside the window, zero if it did not charge.
    """
    arr = _EventArrays(events, ev_types)
    ev_idx = np.array(
        [i for i, ev in enumerate(arr.ev_ids) if ev_types.get(ev) is ev_type],
        dtype=np.int64,
    )
    if ev_idx.size == 0:
        raise EmptyDistributionError(f"no EVs of type {ev_type.label}")
    dates = [d for d in _dates_in_window(study_window) if d.weekday() == int(day)]
    if not dates:
        raise EmptyDistributionError(
            f"study window contains no {day.label} dates"
        )
    mask = (
        (arr.ev_type == int(ev_type))
        & (arr.weekday == int(day))
        & arr.window_mask(study_window)
    )
    return _recharge_pmf(arr, ev_idx, mask, len(dates))


def daily_recharge_share(
    events: list[ChargingEvent],
    ev_types: Mapping[str, EvType],
) -> dict[EvType, dict[DayOfWeek, float]]:
    """Diagnostic: share of a type's weekly charges falling on each day.

    This is the charge-count normalization over days of the week for a
    fixed type; the generator itself samples the per-day count PMFs.
    """
    arr = _EventArrays(events, ev_types)
    out: dict[EvType, dict[DayOfWeek, float]] = {}
    for t in EvType:
        mask = arr.ev_type == int(t)
        total = int(mask.sum())
        if total == 0:
            raise EmptyDistributionError(f"no events of type {t.label}")
        per_day = np.bincount(arr.weekday[mask], minlength=7)
        out[t] = {d: per_day[int(d)] / total for d in DayOfWeek}
    return out


# ---------------------------------------------------------------------------
# Whole-model fit.
# ---------------------------------------------------------------------------


def infer_study_window(events: list[ChargingEvent]) -> tuple[date, date]:
    if not events:
        raise EmptyDistributionError("no events to infer a study window from")
    dates = [e.start_date for e in events]
    return min(dates), max(dates)


def fit_model(
    events: list[ChargingEvent],
    records: list[EvRecord],
    season_map: SeasonMap | None = None,
    study_window: tuple[date, date] | None = None,
) -> EvProfileModel:
    """Fit all PMF families from cleaned events and classified EVs.

    Requires at least one EV and one event of every type; empty start-time
    strata fall back to season-pooled then day-pooled fits (recorded in
    metadata), and recharge strata missing a weekday fall back to pooling
    across all days of the window.
    """
    season_map = season_map or SeasonMap()
    if study_window is None:
        study_window = infer_study_window(events)
    ev_types = ev_type_map(records)
    arr = _EventArrays(events, ev_types)
    window_mask = arr.window_mask(study_window)
    fallbacks: list[FallbackNote] = []

    duration: dict[EvType, Pmf] = {}
    for t in EvType:
        duration[t] = _duration_pmf_from_mask(
            arr, (arr.ev_type == int(t)) & window_mask
        )

    start_time: dict[tuple[EvType, DayType, Season], Pmf] = {}
    for t in EvType:
        for dt in DayType:
            for s in Season:
                stratum = f"{t.label}|{dt.label}|{s.label}"
                for used, day_key, season_key in (
                    ("fitted", dt, s),
                    ("season_dropped", dt, None),
                    ("day_type_dropped", None, None),
                ):
                    mask = (
                        _start_stratum_mask(arr, t, day_key, season_key, season_map)
                        & window_mask
                    )
                    if mask.any():
                        start_time[(t, dt, s)] = _start_pmf_from_mask(arr, mask)
                        if used != "fitted":
                            fallbacks.append(FallbackNote("start_time", stratum, used))
                        break
                else:
                    raise EmptyDistributionError(f"no events of type {t.label}")

    all_dates = _dates_in_window(study_window)
    recharge: dict[tuple[EvType, DayOfWeek], Pmf] = {}
    for t in EvType:
        ev_idx = np.array(
            [i for i, ev in enumerate(arr.ev_ids) if ev_types.get(ev) is t],
            dtype=np.int64,
        )
        if ev_idx.size == 0:
            raise EmptyDistributionError(f"no EVs of type {t.label}")
        type_mask = (arr.ev_type == int(t)) & window_mask
        for d in DayOfWeek:
            dates = [x for x in all_dates if x.weekday() == int(d)]
            if dates:
                mask = type_mask & (arr.weekday == int(d))
                recharge[(t, d)] = _recharge_pmf(arr, ev_idx, mask, len(dates))
            else:
                recharge[(t, d)] = _recharge_pmf(arr, ev_idx, type_mask, len(all_dates))
                fallbacks.append(
                    FallbackNote("recharge_count", f"{t.label}|{d.label}", "day_pooled")
                )

    fleet_counts = {t: 0 for t in EvType}
    for r in records:
        fleet_counts[r.ev_type] += 1

    metadata = ModelMetadata(
        study_start=study_window[0],
        study_end=study_window[1],
        fleet_counts=fleet_counts,
        season_map=season_map,
        fallbacks=tuple(fallbacks),
    )
    return EvProfileModel(
        recharge_count=recharge,
        start_time=start_time,
        duration=duration,
        metadata=metadata,
    )


# ---------------------------------------------------------------------------
# Composite charging probability.
# ---------------------------------------------------------------------------


def charging_probability(
    model: EvProfileModel,
    ev_type: EvType,
    day: DayOfWeek,
    t: int,
    season: Season = Season.WINTER,
    reference_duration: int = DEFAULT_REFERENCE_DURATION_MIN,
) -> float:
    """Product of the three factor masses at the queried coordinates.

    Factors: recharge mass at n >= 1 for (type, day), duration mass at the
    bin holding ``reference_duration``, and start-time mass at the bin
    holding minute ``t`` for (type, day type, season).  Zero whenever any
    factor is zero.
    """
    if not 0 <= t < MINUTES_PER_DAY:
        raise DomainError(f"minute-of-day {t} out of range")
    rech = model.recharge_count[(ev_type, day)]
    f_rech = 1.0 - rech.mass_at(0)
    f_dur = model.duration[ev_type].mass_at(bin_duration(reference_duration))
    ts = model.start_time[(ev_type, day_type_of(day), season)]
    f_ts = ts.mass_at(start_bin(int(t)))
    return f_rech * f_dur * f_ts


# ---------------------------------------------------------------------------
# Serialization (schema-versioned JSON, bit-exact round trip).
# ---------------------------------------------------------------------------


def _pmf_to_dict(pmf: Pmf) -> dict:
    return {
        "labels": pmf.labels.tolist(),
        "probs": pmf.probs.tolist(),
        "counts": None if pmf.counts is None else pmf.counts.tolist(),
    }


def _pmf_from_dict(d: dict) -> Pmf:
    return Pmf(
        labels=np.asarray(d["labels"], dtype=np.int64),
        probs=np.asarray(d["probs"], dtype=np.float64),
        counts=None if d.get("counts") is None else np.asarray(d["counts"], dtype=np.int64),
    )


def model_to_dict(model: EvProfileModel) -> dict:
    md = model.metadata
    return {
        "schema_version": SCHEMA_VERSION,
        "metadata": {
            "study_start": md.study_start.isoformat(),
            "study_end": md.study_end.isoformat(),
            "fleet_counts": {t.label: md.fleet_counts.get(t, 0) for t in EvType},
            "season_map": md.season_map.to_dict(),
            "bin_width_minutes": md.bin_width_minutes,
            "fallbacks": [
                {"family": f.family, "stratum": f.stratum, "used": f.used}
                for f in md.fallbacks
            ],
        },
        "recharge_count": {
            t.label: {
                d.label: _pmf_to_dict(model.recharge_count[(t, d)]) for d in DayOfWeek
            }
            for t in EvType
        },
        "start_time": {
            t.label: {
                dt.label: {
                    s.label: _pmf_to_dict(model.start_time[(t, dt, s)]) for s in Season
                }
                for dt in DayType
            }
            for t in EvType
        },
        "duration": {t.label: _pmf_to_dict(model.duration[t]) for t in EvType},
    }


def model_from_dict(doc: dict) -> EvProfileModel:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelSchemaError(
            f"unsupported model schema version {version!r} (expected {SCHEMA_VERSION})"
        )
    try:
        md = doc["metadata"]
        metadata = ModelMetadata(
            study_start=date.fromisoformat(md["study_start"]),
            study_end=date.fromisoformat(md["study_end"]),
            fleet_counts={
                t: int(md["fleet_counts"][t.label]) for t in EvType
            },
            season_map=SeasonMap.from_dict(md["season_map"]),
            bin_width_minutes=int(md["bin_width_minutes"]),
            fallbacks=tuple(
                FallbackNote(f["family"], f["stratum"], f["used"])
                for f in md.get("fallbacks", [])
            ),
        )
        recharge = {
            (t, d): _pmf_from_dict(doc["recharge_count"][t.label][d.label])
            for t in EvType
            for d in DayOfWeek
        }
        start_time = {
            (t, dt, s): _pmf_from_dict(doc["start_time"][t.label][dt.label][s.label])
            for t in EvType
            for dt in DayType
            for s in Season
        }
        duration = {t: _pmf_from_dict(doc["duration"][t.label]) for t in EvType}
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelSchemaError(f"invalid model document: {exc}") from exc
    try:
        return EvProfileModel(
            recharge_count=recharge,
            start_time=start_time,
            duration=duration,
            metadata=metadata,
        )
    except (StructuralError, EmptyDistributionError) as exc:
        raise ModelSchemaError(f"model failed validation: {exc}") from exc


def save_model(model: EvProfileModel, sink: TextIO) -> None:
    json.dump(model_to_dict(model), sink, sort_keys=True, indent=2)
    sink.write("\n")


def load_model(source: TextIO) -> EvProfileModel:
    try:
        doc = json.load(source)
    except json.JSONDecodeError as exc:
        raise ModelSchemaError(f"truncated or invalid model file: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelSchemaError("model file must hold a JSON object")
    return model_from_dict(doc)
