"""Charging-log ingestion: parse, validate and classify per-event records.

Input format is a UTF-8 comma-separated table with header
``ev_id,start,end,energy_kwh`` and timestamps ``yyyy-mm-dd hh:mm`` at
minute precision (naive local time; DST transitions are literal clock
times).  Bad rows are rejected with their physical line number and a
reason, never aborting the batch.
"""

from __future__ import annotations

import csv
import statistics
from dataclasses import dataclass
from datetime import date, datetime
from typing import Iterable, TextIO

from .domain import EvType
from .errors import DomainError, EmptyFleetError, ParseError, StructuralError

EXPECTED_HEADER = ["ev_id", "start", "end", "energy_kwh"]
TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M"

# Level II residential point: 240 V x 48 A.
DEFAULT_MAX_POWER_KW = 11.52

SMALL_MEDIUM_BOUNDARY_KW = 3.3
MEDIUM_LARGE_BOUNDARY_KW = 7.7

REASON_BAD_TIMESTAMP = "bad timestamp"
REASON_NON_POSITIVE_DURATION = "non-positive duration"
REASON_NON_POSITIVE_ENERGY = "non-positive energy"
REASON_POWER_CAP = "power exceeds plausible maximum"
REASON_MALFORMED = "malformed row"


# slots: corpora run to millions of events, so per-instance dicts matter.
@dataclass(frozen=True, slots=True)
class ChargingEvent:
    """One logged charging session (start/stop at minute precision)."""

    ev_id: str
    cst: datetime
    cft: datetime
    cc: float

    def __post_init__(self):
        if self.cft <= self.cst:
            raise DomainError("charging stop must be after start")
        if self.cc <= 0:
            raise DomainError("consumed energy must be positive")

    @property
    def duration_minutes(self) -> int:
        return int((self.cft - self.cst).total_seconds() // 60)

    @property
    def start_minute_of_day(self) -> int:
        return self.cst.hour * 60 + self.cst.minute

    @property
    def start_date(self) -> date:
        return self.cst.date()


@dataclass(frozen=True)
class EvRecord:
    """Per-EV rated power and class, derived from its grouped events."""

    ev_id: str
    rated_power: float
    ev_type: EvType
    event_count: int = 0

    def __post_init__(self):
        if self.rated_power <= 0:
            raise DomainError("rated power must be positive")
        if classify_ev(self.rated_power) is not self.ev_type:
            raise DomainError(
                f"ev_type {self.ev_type.label} inconsistent with "
                f"rated power {self.rated_power} kW"
            )


@dataclass(frozen=True)
class Rejection:
    row: int
    reason: str


@dataclass
class ParseResult:
    events: list[ChargingEvent]
    rejections: list[Rejection]

    @property
    def accepted(self) -> int:
        return len(self.events)

    @property
    def rejected(self) -> int:
        return len(self.rejections)


def compute_event_power(event: ChargingEvent) -> float:
    """Mean charging power in kW: energy * 60 / duration in minutes."""
    return event.cc * 60.0 / event.duration_minutes


def classify_ev(power: float) -> EvType:
    """Assign the EV class from rated power (half-open boundaries).

    [0, 3.3) -> small, [3.3, 7.7) -> medium, [7.7, inf) -> large.
    """
    if power <= 0:
        raise DomainError("power must be positive")
    if power < SMALL_MEDIUM_BOUNDARY_KW:
        return EvType.SMALL
    if power < MEDIUM_LARGE_BOUNDARY_KW:
        return EvType.MEDIUM
    return EvType.LARGE


def parse_events(
    source: TextIO,
    max_power_kw: float = DEFAULT_MAX_POWER_KW,
) -> ParseResult:
    """Parse a charging-event CSV stream.

    Valid rows become ChargingEvents; invalid rows are collected with
    their 1-based physical line number (header is line 1).  A missing or
    wrong header raises ParseError.
    """
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty input: missing header") from None
    if [h.strip() for h in header] != EXPECTED_HEADER:
        raise ParseError(
            f"bad header {header!r}; expected {','.join(EXPECTED_HEADER)}"
        )

    events: list[ChargingEvent] = []
    rejections: list[Rejection] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            rejections.append(Rejection(lineno, REASON_MALFORMED))
            continue
        ev_id, start_s, end_s, energy_s = (c.strip() for c in row)
        try:
            cst = datetime.strptime(start_s, TIMESTAMP_FORMAT)
            cft = datetime.strptime(end_s, TIMESTAMP_FORMAT)
        except ValueError:
            rejections.append(Rejection(lineno, REASON_BAD_TIMESTAMP))
            continue
        try:
            cc = float(energy_s)
        except ValueError:
            rejections.append(Rejection(lineno, REASON_MALFORMED))
            continue
        if not ev_id:
            rejections.append(Rejection(lineno, REASON_MALFORMED))
            continue
        if cft <= cst:
            rejections.append(Rejection(lineno, REASON_NON_POSITIVE_DURATION))
            continue
        if cc <= 0:
            rejections.append(Rejection(lineno, REASON_NON_POSITIVE_ENERGY))
            continue
        event = ChargingEvent(ev_id=ev_id, cst=cst, cft=cft, cc=cc)
        if compute_event_power(event) > max_power_kw:
            rejections.append(Rejection(lineno, REASON_POWER_CAP))
            continue
        events.append(event)
    return ParseResult(events=events, rejections=rejections)


def format_timestamp(ts: datetime) -> str:
    return ts.strftime(TIMESTAMP_FORMAT)


def write_events(events: Iterable[ChargingEvent], sink: TextIO) -> None:
    """Serialize events in the exact ingestion format (round-trip safe)."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(EXPECTED_HEADER)
    for e in events:
        writer.writerow(
            [e.ev_id, format_timestamp(e.cst), format_timestamp(e.cft), repr(e.cc)]
        )


def write_rejections(rejections: Iterable[Rejection], sink: TextIO) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["row", "reason"])
    for r in rejections:
        writer.writerow([r.row, r.reason])


def group_by_ev(events: Iterable[ChargingEvent]) -> dict[str, list[ChargingEvent]]:
    groups: dict[str, list[ChargingEvent]] = {}
    for e in events:
        groups.setdefault(e.ev_id, []).append(e)
    return groups


def assign_rated_power(events: Iterable[ChargingEvent]) -> list[EvRecord]:
    """Group events by EV-ID and rate each EV by its median event power.

    The median is robust to the occasional derated or interrupted session.
    Records are returned sorted by ev_id for deterministic downstream use.
    """
    groups = group_by_ev(events)
    if not groups:
        raise StructuralError("no events to assign rated power from")
    records = []
    for ev_id in sorted(groups):
        powers = [compute_event_power(e) for e in groups[ev_id]]
        rated = float(statistics.median(powers))
        records.append(
            EvRecord(
                ev_id=ev_id,
                rated_power=rated,
                ev_type=classify_ev(rated),
                event_count=len(powers),
            )
        )
    return records


@dataclass(frozen=True)
class FleetSummary:
    counts: dict[EvType, int]
    ratios_pct: dict[EvType, float]
    total: int

    def format_table(self) -> str:
        lines = [f"{'EV type':<8}  {'count':>6}  {'ratio %':>8}"]
        for t in EvType:
            lines.append(
                f"{t.label:<8}  {self.counts[t]:>6}  {self.ratios_pct[t]:>8.1f}"
            )
        lines.append(f"{'total':<8}  {self.total:>6}  {100.0:>8.1f}")
        return "\n".join(lines)


def fleet_summary(records: Iterable[EvRecord]) -> FleetSummary:
    """Counts and percentage shares per EV type."""
    records = list(records)
    if not records:
        raise EmptyFleetError("fleet summary of an empty fleet")
    counts = {t: 0 for t in EvType}
    for r in records:
        counts[r.ev_type] += 1
    total = len(records)
    ratios = {t: 100.0 * counts[t] / total for t in EvType}
    return FleetSummary(counts=counts, ratios_pct=ratios, total=total)
