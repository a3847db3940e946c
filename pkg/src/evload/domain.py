"""Core value types: EV classes, calendar strata, time grid and PMFs.

Everything here is immutable after construction and safe to share across
concurrent tasks.  Random streams are never stored on these types; every
sampling call takes an explicit ``numpy.random.Generator``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainError,
    EmptyDistributionError,
    SimilarityUndefinedError,
    StructuralError,
)

PMF_SUM_TOL = 1e-9
MINUTES_PER_DAY = 1440
START_BIN_MINUTES = 15


class EvType(enum.IntEnum):
    """EV class by rated charging power; ordered small < medium < large."""

    SMALL = 0
    MEDIUM = 1
    LARGE = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "EvType":
        try:
            return cls[label.upper()]
        except KeyError:
            raise DomainError(f"unknown EV type {label!r}") from None


class DayOfWeek(enum.IntEnum):
    """Days of the week, Monday = 0 (matches ``datetime.date.weekday``)."""

    MON = 0
    TUE = 1
    WED = 2
    THU = 3
    FRI = 4
    SAT = 5
    SUN = 6

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "DayOfWeek":
        try:
            return cls[label.upper()]
        except KeyError:
            raise DomainError(f"unknown day {label!r}") from None


class DayType(enum.IntEnum):
    """Weekday identity with Saturday and Sunday merged into one stratum."""

    MON = 0
    TUE = 1
    WED = 2
    THU = 3
    FRI = 4
    WEEKEND = 5

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "DayType":
        try:
            return cls[label.upper()]
        except KeyError:
            raise DomainError(f"unknown day type {label!r}") from None


def day_type_of(day: DayOfWeek) -> DayType:
    """Total mapping DayOfWeek -> DayType; Sat and Sun both map to WEEKEND."""
    if day in (DayOfWeek.SAT, DayOfWeek.SUN):
        return DayType.WEEKEND
    return DayType(int(day))


class Season(enum.IntEnum):
    WINTER = 0
    SUMMER = 1

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "Season":
        try:
            return cls[label.upper()]
        except KeyError:
            raise DomainError(f"unknown season {label!r}") from None


# Default split for a northern climate: winter Nov-Apr, summer May-Oct.
DEFAULT_WINTER_MONTHS = (11, 12, 1, 2, 3, 4)


@dataclass(frozen=True)
class SeasonMap:
    """Total, configurable mapping month (1..12) -> Season."""

    months: tuple[Season, ...] = field(
        default=tuple(
            Season.WINTER if m in DEFAULT_WINTER_MONTHS else Season.SUMMER
            for m in range(1, 13)
        )
    )

    def __post_init__(self):
        if len(self.months) != 12 or not all(isinstance(s, Season) for s in self.months):
            raise StructuralError("season map must assign a season to all 12 months")

    def season_of(self, month: int) -> Season:
        if not 1 <= month <= 12:
            raise DomainError(f"month {month} out of range")
        return self.months[month - 1]

    @classmethod
    def from_month_lists(cls, winter: list[int], summer: list[int]) -> "SeasonMap":
        assigned: dict[int, Season] = {}
        for m in winter:
            assigned[int(m)] = Season.WINTER
        for m in summer:
            if int(m) in assigned:
                raise StructuralError(f"month {m} assigned to both seasons")
            assigned[int(m)] = Season.SUMMER
        if sorted(assigned) != list(range(1, 13)):
            raise StructuralError("season map must cover months 1..12 exactly once")
        return cls(months=tuple(assigned[m] for m in range(1, 13)))

    def to_dict(self) -> dict[str, str]:
        return {str(m): self.months[m - 1].label for m in range(1, 13)}

    @classmethod
    def from_dict(cls, d: dict[str, str]) -> "SeasonMap":
        try:
            months = tuple(Season.from_label(d[str(m)]) for m in range(1, 13))
        except KeyError as exc:
            raise StructuralError(f"season map missing month {exc}") from None
        return cls(months=months)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform within-day grid; resolution in minutes must divide 1440."""

    resolution: int = 15

    def __post_init__(self):
        if self.resolution <= 0 or MINUTES_PER_DAY % self.resolution != 0:
            raise StructuralError(
                f"resolution {self.resolution} does not divide {MINUTES_PER_DAY}"
            )

    @property
    def steps_per_day(self) -> int:
        return MINUTES_PER_DAY // self.resolution

    def step_minutes(self) -> np.ndarray:
        """Minute-of-day at the start of each step."""
        return np.arange(self.steps_per_day, dtype=np.int64) * self.resolution


@dataclass(frozen=True)
class Pmf:
    """Discrete probability function over strictly increasing integer labels.

    Label units depend on context: minutes-of-day for start times, minutes
    for durations, counts for daily recharge numbers.  Raw observation
    counts are kept alongside when the PMF came from data, so pooling and
    re-normalization never compound floating error.
    """

    labels: np.ndarray
    probs: np.ndarray
    counts: np.ndarray | None = None

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        probs = np.ascontiguousarray(self.probs, dtype=np.float64)
        if labels.ndim != 1 or probs.ndim != 1 or labels.shape != probs.shape:
            raise StructuralError("labels and probs must be 1-D of equal length")
        if labels.size == 0:
            raise EmptyDistributionError("a PMF needs at least one bin")
        if np.any(np.diff(labels) <= 0):
            raise StructuralError("labels must be strictly increasing")
        if np.any(probs < 0):
            raise StructuralError("probabilities must be non-negative")
        if abs(float(probs.sum()) - 1.0) > PMF_SUM_TOL:
            raise StructuralError(
                f"probabilities sum to {probs.sum()!r}, not 1 within {PMF_SUM_TOL}"
            )
        counts = self.counts
        if counts is not None:
            counts = np.ascontiguousarray(counts, dtype=np.int64)
            if counts.shape != labels.shape:
                raise StructuralError("counts must match labels in length")
            if np.any(counts < 0):
                raise StructuralError("counts must be non-negative")
        cdf = np.cumsum(probs)
        for arr in (labels, probs, cdf) + (() if counts is None else (counts,)):
            arr.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "_cdf", cdf)

    @property
    def cdf(self) -> np.ndarray:
        """Cumulative sums, computed once at construction."""
        return self._cdf

    def __len__(self) -> int:
        return int(self.labels.size)

    def mass_at(self, label: int) -> float:
        """Probability mass at an exact label; 0.0 for labels not present."""
        i = int(np.searchsorted(self.labels, label))
        if i < len(self.labels) and self.labels[i] == label:
            return float(self.probs[i])
        return 0.0

    def mean(self) -> float:
        return float(np.dot(self.labels, self.probs))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pmf):
            return NotImplemented
        if not np.array_equal(self.labels, other.labels):
            return False
        if not np.array_equal(self.probs, other.probs):
            return False
        if (self.counts is None) != (other.counts is None):
            return False
        if self.counts is not None and not np.array_equal(self.counts, other.counts):
            return False
        return True

    def __hash__(self):
        return hash((self.labels.tobytes(), self.probs.tobytes()))


def pmf_from_counts(counts, labels) -> Pmf:
    """Normalize observation counts into a PMF, keeping the counts.

    Raises EmptyDistributionError when all counts are zero and
    StructuralError on a length mismatch.
    """
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    if counts.shape != labels.shape or counts.ndim != 1:
        raise StructuralError("counts and labels must be 1-D of equal length")
    if np.any(counts < 0):
        raise StructuralError("counts must be non-negative")
    total = int(counts.sum())
    if total == 0:
        raise EmptyDistributionError("all counts are zero")
    return Pmf(labels=labels, probs=counts / total, counts=counts)


def sample(pmf: Pmf, rng: np.random.Generator) -> int:
    """Inverse-transform sample of one label, consuming one uniform draw.

    A draw landing exactly on a cumulative boundary resolves toward the
    lower label; zero-mass bins are never returned.
    """
    u = rng.random()
    i = int(np.searchsorted(pmf.cdf, u, side="left"))
    probs = pmf.probs
    if i == probs.shape[0]:
        # Float cumsum can top out a hair below 1.0; such a draw belongs
        # to the highest nonzero-mass bin.
        i -= 1
        while probs[i] == 0.0:
            i -= 1
    else:
        while probs[i] == 0.0:
            i += 1
    return int(pmf.labels[i])


def total_variation(a: Pmf, b: Pmf) -> float:
    """Total variation distance 0.5 * sum(|a_i - b_i|) over a shared label set."""
    if not np.array_equal(a.labels, b.labels):
        raise StructuralError("total variation needs identical label sets")
    return 0.5 * float(np.abs(a.probs - b.probs).sum())


def cosine_similarity(a, b) -> float:
    """dot(a, b) / (|a| * |b|); raises if either vector is all-zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise StructuralError("vectors must be 1-D of equal length")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise SimilarityUndefinedError("cosine similarity of a zero vector")
    return float(np.dot(a, b) / (na * nb))
