"""Core value types: enums, season map, time grid, PMFs and metrics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evload.domain import (
    DEFAULT_WINTER_MONTHS,
    MINUTES_PER_DAY,
    PMF_SUM_TOL,
    DayOfWeek,
    DayType,
    EvType,
    Pmf,
    Season,
    SeasonMap,
    TimeGrid,
    cosine_similarity,
    day_type_of,
    pmf_from_counts,
    sample,
    total_variation,
)
from evload.errors import (
    DomainError,
    EmptyDistributionError,
    SimilarityUndefinedError,
    StructuralError,
)


class FixedDraws:
    """Generator stand-in replaying a scripted sequence of uniforms."""

    def __init__(self, *values):
        self._values = list(values)

    def random(self, size=None):
        if size is None:
            return self._values.pop(0)
        return np.array([self._values.pop(0) for _ in range(size)])


# ---------------------------------------------------------------------------
# Enums and calendar mapping.
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("enum_cls", [EvType, DayOfWeek, DayType, Season])
def test_labels_round_trip(enum_cls):
    for member in enum_cls:
        assert enum_cls.from_label(member.label) is member
        assert enum_cls.from_label(member.label.upper()) is member


@pytest.mark.parametrize("enum_cls", [EvType, DayOfWeek, DayType, Season])
def test_unknown_label_rejected(enum_cls):
    with pytest.raises(DomainError):
        enum_cls.from_label("xlarge")


def test_day_of_week_matches_datetime_convention():
    assert int(DayOfWeek.MON) == 0
    assert int(DayOfWeek.SUN) == 6


def test_day_type_merges_saturday_and_sunday():
    assert day_type_of(DayOfWeek.SAT) is DayType.WEEKEND
    assert day_type_of(DayOfWeek.SUN) is DayType.WEEKEND
    for day in (DayOfWeek.MON, DayOfWeek.TUE, DayOfWeek.WED,
                DayOfWeek.THU, DayOfWeek.FRI):
        assert int(day_type_of(day)) == int(day)


def test_ev_type_ordering():
    assert EvType.SMALL < EvType.MEDIUM < EvType.LARGE


# ---------------------------------------------------------------------------
# SeasonMap.
# ---------------------------------------------------------------------------


def test_default_season_map_is_november_through_april_winter():
    m = SeasonMap()
    for month in range(1, 13):
        expected = Season.WINTER if month in DEFAULT_WINTER_MONTHS else Season.SUMMER
        assert m.season_of(month) is expected


@pytest.mark.parametrize("month", [0, 13, -1])
def test_season_of_rejects_bad_month(month):
    with pytest.raises(DomainError):
        SeasonMap().season_of(month)


def test_season_map_from_month_lists():
    m = SeasonMap.from_month_lists(winter=[12, 1, 2], summer=[3, 4, 5, 6, 7, 8, 9, 10, 11])
    assert m.season_of(12) is Season.WINTER
    assert m.season_of(3) is Season.SUMMER


def test_season_map_rejects_double_assignment():
    with pytest.raises(StructuralError):
        SeasonMap.from_month_lists(winter=[1, 2], summer=[2] + list(range(3, 13)))


def test_season_map_rejects_missing_month():
    with pytest.raises(StructuralError):
        SeasonMap.from_month_lists(winter=[1], summer=list(range(3, 13)))


def test_season_map_dict_round_trip():
    m = SeasonMap.from_month_lists(winter=[6, 7], summer=[1, 2, 3, 4, 5, 8, 9, 10, 11, 12])
    assert SeasonMap.from_dict(m.to_dict()) == m


def test_season_map_from_dict_missing_month():
    d = SeasonMap().to_dict()
    del d["7"]
    with pytest.raises(StructuralError):
        SeasonMap.from_dict(d)


def test_season_map_needs_all_twelve_months():
    with pytest.raises(StructuralError):
        SeasonMap(months=(Season.WINTER,) * 11)


# ---------------------------------------------------------------------------
# TimeGrid.
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("resolution,steps", [(1, 1440), (15, 96), (60, 24)])
def test_time_grid_steps(resolution, steps):
    grid = TimeGrid(resolution)
    assert grid.steps_per_day == steps
    minutes = grid.step_minutes()
    assert minutes[0] == 0
    assert minutes[-1] == MINUTES_PER_DAY - resolution
    assert np.all(np.diff(minutes) == resolution)


@pytest.mark.parametrize("resolution", [0, -15, 7, 1441])
def test_time_grid_rejects_non_divisors(resolution):
    with pytest.raises(StructuralError):
        TimeGrid(resolution)


# ---------------------------------------------------------------------------
# Pmf construction and accessors.
# ---------------------------------------------------------------------------


def test_pmf_basic_accessors():
    pmf = Pmf(labels=np.array([15, 30, 45]), probs=np.array([0.5, 0.25, 0.25]))
    assert len(pmf) == 3
    assert pmf.mass_at(30) == 0.25
    assert pmf.mass_at(31) == 0.0
    assert pmf.mean() == pytest.approx(15 * 0.5 + 30 * 0.25 + 45 * 0.25)
    assert np.allclose(pmf.cdf, [0.5, 0.75, 1.0])


def test_pmf_arrays_are_immutable():
    pmf = Pmf(labels=np.array([0, 1]), probs=np.array([0.5, 0.5]))
    for arr in (pmf.labels, pmf.probs, pmf.cdf):
        with pytest.raises(ValueError):
            arr[0] = 9


def test_pmf_rejects_unnormalized():
    with pytest.raises(StructuralError):
        Pmf(labels=np.array([0, 1]), probs=np.array([0.5, 0.6]))


def test_pmf_accepts_sum_within_tolerance():
    probs = np.array([0.5, 0.5 + 0.5 * PMF_SUM_TOL])
    Pmf(labels=np.array([0, 1]), probs=probs)


def test_pmf_rejects_negative_mass():
    with pytest.raises(StructuralError):
        Pmf(labels=np.array([0, 1]), probs=np.array([1.5, -0.5]))


def test_pmf_rejects_non_increasing_labels():
    with pytest.raises(StructuralError):
        Pmf(labels=np.array([1, 1]), probs=np.array([0.5, 0.5]))
    with pytest.raises(StructuralError):
        Pmf(labels=np.array([2, 1]), probs=np.array([0.5, 0.5]))


def test_pmf_rejects_empty():
    with pytest.raises(EmptyDistributionError):
        Pmf(labels=np.array([], dtype=np.int64), probs=np.array([]))


def test_pmf_rejects_mismatched_counts():
    with pytest.raises(StructuralError):
        Pmf(labels=np.array([0, 1]), probs=np.array([0.5, 0.5]),
            counts=np.array([1, 2, 3]))


def test_pmf_equality_covers_counts():
    a = pmf_from_counts([1, 3], [0, 1])
    b = pmf_from_counts([1, 3], [0, 1])
    c = Pmf(labels=np.array([0, 1]), probs=np.array([0.25, 0.75]))
    assert a == b
    assert a != c  # same probs, but c carries no counts


def test_pmf_from_counts():
    pmf = pmf_from_counts([3, 1, 0, 4], [15, 30, 45, 60])
    assert np.allclose(pmf.probs, [0.375, 0.125, 0.0, 0.5])
    assert np.array_equal(pmf.counts, [3, 1, 0, 4])


def test_pmf_from_counts_rejects_all_zero():
    with pytest.raises(EmptyDistributionError):
        pmf_from_counts([0, 0], [0, 1])


def test_pmf_from_counts_rejects_negative():
    with pytest.raises(StructuralError):
        pmf_from_counts([2, -1], [0, 1])


# ---------------------------------------------------------------------------
# Inverse-transform sampling.
# ---------------------------------------------------------------------------


def test_sample_degenerate_always_returns_the_mass_bin():
    pmf = Pmf(labels=np.array([10, 20, 30]), probs=np.array([0.0, 1.0, 0.0]))
    rng = np.random.default_rng(0)
    assert all(sample(pmf, rng) == 20 for _ in range(50))


def test_sample_boundary_tie_takes_the_lower_label():
    pmf = Pmf(labels=np.array([1, 2]), probs=np.array([0.25, 0.75]))
    assert sample(pmf, FixedDraws(0.25)) == 1
    assert sample(pmf, FixedDraws(np.nextafter(0.25, 1.0))) == 2


def test_sample_skips_leading_zero_mass():
    pmf = Pmf(labels=np.array([5, 6, 7]), probs=np.array([0.0, 0.5, 0.5]))
    assert sample(pmf, FixedDraws(0.0)) == 6


def test_sample_cumsum_shortfall_takes_highest_nonzero_bin():
    # Ten bins of 0.1 cumsum to just under 1.0 in binary64; a draw above
    # that must land in the last nonzero bin, not past the support.
    probs = np.full(10, 0.1)
    pmf = Pmf(labels=np.arange(10), probs=probs)
    top = float(pmf.cdf[-1])
    assert top < 1.0
    u = np.nextafter(top, 1.0)
    assert sample(pmf, FixedDraws(u)) == 9

    trailing = Pmf(labels=np.arange(11), probs=np.append(probs, 0.0))
    u = np.nextafter(float(trailing.cdf[-1]), 1.0)
    assert sample(trailing, FixedDraws(u)) == 9


def test_sample_never_returns_zero_mass_label():
    pmf = Pmf(
        labels=np.arange(5),
        probs=np.array([0.3, 0.0, 0.4, 0.0, 0.3]),
    )
    rng = np.random.default_rng(7)
    drawn = {sample(pmf, rng) for _ in range(3000)}
    assert drawn == {0, 2, 4}


def test_sample_is_reproducible():
    pmf = Pmf(labels=np.arange(4), probs=np.array([0.1, 0.2, 0.3, 0.4]))
    rng1, rng2 = np.random.default_rng(42), np.random.default_rng(42)
    seq1 = [sample(pmf, rng1) for _ in range(200)]
    seq2 = [sample(pmf, rng2) for _ in range(200)]
    assert seq1 == seq2


def _vectorized_inverse(pmf, us):
    """Reference batch transform mirroring the scalar rules."""
    idx = np.searchsorted(pmf.cdf, us, side="left")
    m = len(pmf)
    out = np.empty(us.shape, dtype=np.int64)
    for k, i in enumerate(idx):
        if i == m:
            i -= 1
            while pmf.probs[i] == 0.0:
                i -= 1
        else:
            while pmf.probs[i] == 0.0:
                i += 1
        out[k] = pmf.labels[i]
    return out


def test_sample_frequencies_pass_chi_square_at_a_million_draws():
    pmfs = [
        Pmf(labels=np.array([0, 1]), probs=np.array([0.3, 0.7])),
        Pmf(labels=np.arange(6), probs=np.array([0.05, 0.1, 0.15, 0.2, 0.24, 0.26])),
    ]
    from scipy import stats

    for pmf in pmfs:
        rng = np.random.default_rng(1234)
        # Equivalence of the scalar sampler and the batch transform on a
        # shared stream, then the million-draw frequency test on the batch.
        us = rng.random(10_000)
        scalar = [sample(pmf, FixedDraws(u)) for u in us]
        assert np.array_equal(scalar, _vectorized_inverse(pmf, us))

        draws = _vectorized_inverse(pmf, rng.random(1_000_000))
        observed = np.array([(draws == l).sum() for l in pmf.labels])
        _, p_value = stats.chisquare(observed, f_exp=pmf.probs * 1_000_000)
        assert p_value > 0.001


# ---------------------------------------------------------------------------
# Metrics.
# ---------------------------------------------------------------------------


def test_total_variation_known_values():
    a = Pmf(labels=np.array([0, 1]), probs=np.array([0.5, 0.5]))
    b = Pmf(labels=np.array([0, 1]), probs=np.array([1.0, 0.0]))
    assert total_variation(a, a) == 0.0
    assert total_variation(a, b) == pytest.approx(0.5)
    disjoint = Pmf(labels=np.array([0, 1]), probs=np.array([0.0, 1.0]))
    assert total_variation(b, disjoint) == pytest.approx(1.0)


def test_total_variation_requires_identical_labels():
    a = Pmf(labels=np.array([0, 1]), probs=np.array([0.5, 0.5]))
    b = Pmf(labels=np.array([0, 2]), probs=np.array([0.5, 0.5]))
    with pytest.raises(StructuralError):
        total_variation(a, b)
    c = Pmf(labels=np.array([0, 1, 2]), probs=np.array([0.5, 0.25, 0.25]))
    with pytest.raises(StructuralError):
        total_variation(a, c)


@st.composite
def _prob_vectors(draw, size):
    raw = draw(
        st.lists(
            st.floats(min_value=1e-3, max_value=1.0),
            min_size=size,
            max_size=size,
        )
    )
    v = np.asarray(raw)
    return v / v.sum()


@given(
    st.integers(min_value=2, max_value=12).flatmap(
        lambda n: st.tuples(_prob_vectors(n), _prob_vectors(n), _prob_vectors(n))
    )
)
@settings(max_examples=60, deadline=None)
def test_total_variation_is_a_metric(vectors):
    pa, pb, pc = vectors
    labels = np.arange(pa.size)
    a, b, c = (Pmf(labels=labels, probs=p) for p in (pa, pb, pc))
    dab, dba = total_variation(a, b), total_variation(b, a)
    assert dab == dba
    assert 0.0 <= dab <= 1.0
    assert total_variation(a, c) <= dab + total_variation(b, c) + 1e-12


def test_cosine_similarity_known_values():
    assert cosine_similarity([1, 0], [1, 0]) == pytest.approx(1.0)
    assert cosine_similarity([1, 0], [0, 1]) == pytest.approx(0.0)
    assert cosine_similarity([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)


def test_cosine_similarity_rejects_zero_vector():
    with pytest.raises(SimilarityUndefinedError):
        cosine_similarity([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(SimilarityUndefinedError):
        cosine_similarity([1.0, 2.0], [0.0, 0.0])


def test_cosine_similarity_rejects_shape_mismatch():
    with pytest.raises(StructuralError):
        cosine_similarity([1.0, 2.0], [1.0, 2.0, 3.0])


@given(
    st.integers(min_value=2, max_value=16).flatmap(
        lambda n: st.tuples(_prob_vectors(n), _prob_vectors(n))
    ),
    st.floats(min_value=1e-6, max_value=1e6),
    st.floats(min_value=1e-6, max_value=1e6),
)
@settings(max_examples=60, deadline=None)
def test_cosine_similarity_scale_invariance(vectors, alpha, beta):
    a, b = vectors
    base = cosine_similarity(a, b)
    scaled = cosine_similarity(alpha * a, beta * b)
    assert abs(base - scaled) < 1e-12
