"""Base loads, penetration sweeps, curve I/O and profile comparison."""

import io
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evload.domain import EvType, TimeGrid
from evload.errors import (
    ConfigError,
    EmptyFleetError,
    NormalizationError,
    ParseError,
    StructuralError,
)
from evload.generator import DailyProfile
from evload.scenario import (
    DEFAULT_EV_POWERS,
    BaseLoadSet,
    ScenarioConfig,
    aggregate_profiles,
    apply_penetration,
    compare_profiles,
    max_normalize,
    peak_of,
    quota_type_sequence,
    read_base_loads,
    read_profile_curve,
    scenario_fleet,
    write_base_loads,
    write_profile_curve,
    write_scenario_summary,
)
from evload.synth import ORACLE_OPTIONS

MONDAY = date(2023, 1, 16)
GRID = TimeGrid(15)


def _profile(values, cid="c1", grid=GRID, day=MONDAY):
    return DailyProfile(ev_id=cid, date=day, grid=grid, power=np.asarray(values))


def _flat_base(n_customers, kw=1.0):
    return BaseLoadSet(
        profiles={
            f"cust{i:03d}": _profile(np.full(96, kw), cid=f"cust{i:03d}")
            for i in range(n_customers)
        }
    )


# ---------------------------------------------------------------------------
# Base-load container and profile algebra.
# ---------------------------------------------------------------------------


def test_base_load_set_validation():
    with pytest.raises(EmptyFleetError):
        BaseLoadSet(profiles={})
    mixed = {
        "a": _profile(np.zeros(96)),
        "b": _profile(np.zeros(1440), grid=TimeGrid(1)),
    }
    with pytest.raises(StructuralError):
        BaseLoadSet(profiles=mixed)
    off_date = {
        "a": _profile(np.zeros(96)),
        "b": _profile(np.zeros(96), day=date(2023, 1, 17)),
    }
    with pytest.raises(StructuralError):
        BaseLoadSet(profiles=off_date)


def test_base_load_total():
    base = _flat_base(5, kw=2.0)
    total = base.total()
    assert np.allclose(total.power, 10.0)
    assert total.date == MONDAY


def test_aggregate_profiles_empty_needs_declared_shape():
    zero = aggregate_profiles([], grid=GRID, date=MONDAY)
    assert np.all(zero.power == 0.0)
    with pytest.raises(StructuralError):
        aggregate_profiles([])


def test_aggregate_profiles_rejects_mixed_grids():
    with pytest.raises(StructuralError):
        aggregate_profiles(
            [_profile(np.zeros(96)), _profile(np.zeros(1440), grid=TimeGrid(1))]
        )


def test_peak_of_resolves_ties_to_the_earliest_step():
    values = np.zeros(96)
    values[[40, 50]] = 3.3
    minute, kw = peak_of(_profile(values))
    assert (minute, kw) == (600, 3.3)


def test_max_normalize():
    values = np.zeros(96)
    values[10] = 4.0
    unit = max_normalize(_profile(values))
    assert unit.power.max() == 1.0
    halved = max_normalize(_profile(values), base=8.0)
    assert halved.power[10] == 0.5
    with pytest.raises(NormalizationError):
        max_normalize(_profile(np.zeros(96)))


# ---------------------------------------------------------------------------
# Curve comparison.
# ---------------------------------------------------------------------------


def test_compare_profiles_identity():
    values = np.abs(np.sin(np.arange(96) / 7.0)) + 0.5
    p = _profile(values)
    cmp = compare_profiles(p, p)
    assert cmp.cosine == pytest.approx(1.0)
    assert cmp.peak_time_diff_minutes == 0
    assert cmp.peak_ratio == pytest.approx(1.0)
    assert cmp.energy_ratio == pytest.approx(1.0)
    assert cmp.energy_error_before_peak_kwh == 0.0
    assert cmp.energy_error_after_peak_kwh == 0.0


def test_compare_profiles_signed_energy_split():
    reference = np.zeros(96)
    reference[40] = 10.0  # peak at minute 600
    forecast = reference.copy()
    forecast[10] += 4.0   # extra energy well before the peak
    forecast[80] -= 0.0
    cmp = compare_profiles(_profile(forecast), _profile(reference))
    assert cmp.energy_error_before_peak_kwh == pytest.approx(4.0 * 0.25)
    assert cmp.energy_error_after_peak_kwh == 0.0
    assert cmp.peak_time_diff_minutes == 0


def test_compare_profiles_rejects_mixed_grids():
    with pytest.raises(StructuralError):
        compare_profiles(
            _profile(np.ones(96)), _profile(np.ones(1440), grid=TimeGrid(1))
        )


# ---------------------------------------------------------------------------
# Fleet mix quotas and scenario fleets.
# ---------------------------------------------------------------------------


def test_quota_type_sequence_hits_exact_counts():
    mix = {EvType.SMALL: 0.208, EvType.MEDIUM: 0.588, EvType.LARGE: 0.204}
    seq = quota_type_sequence(mix, 500)
    assert seq.count(EvType.SMALL) == 104
    assert seq.count(EvType.MEDIUM) == 294
    assert seq.count(EvType.LARGE) == 102


@given(
    st.tuples(
        st.floats(min_value=0.05, max_value=1.0),
        st.floats(min_value=0.05, max_value=1.0),
        st.floats(min_value=0.05, max_value=1.0),
    ),
    st.integers(min_value=1, max_value=300),
)
@settings(max_examples=50, deadline=None)
def test_quota_type_sequence_tracks_mix_at_every_prefix(raw, n):
    total = sum(raw)
    mix = {t: r / total for t, r in zip(EvType, raw)}
    seq = quota_type_sequence(mix, n)
    counts = {t: 0 for t in EvType}
    for i, t in enumerate(seq, start=1):
        counts[t] += 1
        for u in EvType:
            assert abs(counts[u] - mix[u] * i) < 1.0 + 1e-9


def test_scenario_config_validation():
    mix = {EvType.SMALL: 0.2, EvType.MEDIUM: 0.6, EvType.LARGE: 0.2}
    with pytest.raises(ConfigError):
        ScenarioConfig(penetrations=(), fleet_mix=mix, seed=1)
    with pytest.raises(ConfigError):
        ScenarioConfig(penetrations=(1.2,), fleet_mix=mix, seed=1)
    with pytest.raises(ConfigError):
        ScenarioConfig(penetrations=(0.5,), fleet_mix={EvType.SMALL: 0.9}, seed=1)
    with pytest.raises(ConfigError):
        ScenarioConfig(
            penetrations=(0.5,), fleet_mix=mix, seed=1,
            ev_powers={EvType.SMALL: 3.0, EvType.MEDIUM: 6.6},
        )


def test_scenario_fleet_counts_round_half_up():
    base = _flat_base(5)
    config = ScenarioConfig(
        penetrations=(0.5, 0.29, 0.0),
        fleet_mix={EvType.SMALL: 0.0, EvType.MEDIUM: 1.0, EvType.LARGE: 0.0},
        seed=3,
    )
    _, counts = scenario_fleet(base, config)
    assert counts == [3, 1, 0]  # 2.5 rounds up, 1.45 rounds down


def test_scenario_fleet_is_nested_and_deterministic():
    base = _flat_base(40)
    mix = {EvType.SMALL: 0.25, EvType.MEDIUM: 0.5, EvType.LARGE: 0.25}
    config = ScenarioConfig(penetrations=(0.2, 0.6), fleet_mix=mix, seed=9)
    fleet_a, counts = scenario_fleet(base, config)
    fleet_b, _ = scenario_fleet(base, config)
    assert fleet_a == fleet_b
    assert counts == [8, 24]
    # The 60% fleet extends the 20% fleet; identities never reshuffle.
    assert fleet_a[:8] == fleet_b[:8]
    assert len({ev.ev_id for ev in fleet_a}) == 40
    powers = {DEFAULT_EV_POWERS[t] for t in EvType}
    assert {ev.rated_power for ev in fleet_a} <= powers


# ---------------------------------------------------------------------------
# Penetration sweep.
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def sweep(oracle_model):
    base = _flat_base(30)
    config = ScenarioConfig(
        penetrations=(0.5, 0.0, 1.0),  # deliberately unsorted
        fleet_mix={EvType.SMALL: 0.2, EvType.MEDIUM: 0.6, EvType.LARGE: 0.2},
        seed=23,
    )
    return apply_penetration(base, config, oracle_model, options=ORACLE_OPTIONS)


def test_sweep_reports_levels_in_request_order(sweep):
    assert [lvl.penetration for lvl in sweep.levels] == [0.5, 0.0, 1.0]
    assert [lvl.n_evs for lvl in sweep.levels] == [15, 0, 30]


def test_sweep_zero_penetration_is_the_base_case(sweep):
    zero = next(lvl for lvl in sweep.levels if lvl.penetration == 0.0)
    assert np.array_equal(zero.profile.power, np.full(96, 30.0))
    assert zero.peak_kw == sweep.base_peak_kw
    assert zero.peak_pu == 1.0


def test_sweep_load_grows_pointwise_with_penetration(sweep):
    by_pen = sorted(sweep.levels, key=lambda lvl: lvl.penetration)
    for lo, hi in zip(by_pen, by_pen[1:]):
        assert np.all(hi.profile.power >= lo.profile.power)
        assert hi.peak_kw >= lo.peak_kw
    assert by_pen[-1].peak_kw > by_pen[0].peak_kw


def test_sweep_peak_pu_is_scaled_to_the_base_peak(sweep):
    for lvl in sweep.levels:
        assert lvl.peak_pu == pytest.approx(lvl.peak_kw / sweep.base_peak_kw)


def test_sweep_summary_table(sweep):
    buf = io.StringIO()
    write_scenario_summary(sweep, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "penetration,peak_kw,peak_time,peak_pu"
    assert len(lines) == 4
    pen, peak_kw, peak_time, peak_pu = lines[1].split(",")
    assert float(pen) == 0.5
    assert float(peak_kw) == sweep.levels[0].peak_kw
    hh, mm = peak_time.split(":")
    assert 0 <= int(hh) < 24 and 0 <= int(mm) < 60


# ---------------------------------------------------------------------------
# File formats.
# ---------------------------------------------------------------------------


def test_base_loads_round_trip():
    rng = np.random.default_rng(0)
    base = BaseLoadSet(
        profiles={
            f"c{i}": _profile(rng.random(96) * 3.0, cid=f"c{i}") for i in range(4)
        }
    )
    buf = io.StringIO()
    write_base_loads(base, buf)
    text = buf.getvalue()
    assert text.startswith("# date=2023-01-16 resolution=15\n")
    again = read_base_loads(io.StringIO(text))
    assert again.customer_ids == base.customer_ids
    for cid in base.customer_ids:
        assert np.array_equal(again.profiles[cid].power, base.profiles[cid].power)


@pytest.mark.parametrize(
    "text",
    [
        "customer_id,v1\n",                                  # missing header line
        "# date=2023-01-16 resolution=13\ncustomer_id,v1\n",  # bad resolution
        "# date=2023-01-16 resolution=15\nwrong,v1\n",        # bad columns
    ],
)
def test_read_base_loads_rejects_malformed_headers(text):
    with pytest.raises((ParseError, StructuralError)):
        read_base_loads(io.StringIO(text))


def test_read_base_loads_rejects_bad_rows():
    base = _flat_base(2)
    buf = io.StringIO()
    write_base_loads(base, buf)
    lines = buf.getvalue().splitlines()
    dup = "\n".join(lines + [lines[-1]]) + "\n"
    with pytest.raises(ParseError):
        read_base_loads(io.StringIO(dup))
    negative = lines[:]
    negative[2] = negative[2].replace("1.0", "-1.0", 1)
    with pytest.raises(ParseError):
        read_base_loads(io.StringIO("\n".join(negative) + "\n"))


def test_profile_curve_round_trip():
    values = np.linspace(0.0, 5.0, 96)
    buf = io.StringIO()
    write_profile_curve(_profile(values), buf)
    again = read_profile_curve(io.StringIO(buf.getvalue()))
    assert np.array_equal(again.power, values)
    assert again.date == MONDAY
    assert again.grid == GRID


@pytest.mark.parametrize(
    "mutate",
    [
        lambda lines: lines[:-1],                       # missing grid step
        lambda lines: lines + [lines[-1]],              # duplicate step
        lambda lines: lines[:2] + ["7,1.0"] + lines[3:],  # off-grid minute
        lambda lines: [lines[0], "m,kw"] + lines[2:],   # bad column header
    ],
)
def test_read_profile_curve_rejects_malformed(mutate):
    buf = io.StringIO()
    write_profile_curve(_profile(np.ones(96)), buf)
    lines = buf.getvalue().splitlines()
    with pytest.raises(ParseError):
        read_profile_curve(io.StringIO("\n".join(mutate(lines)) + "\n"))
