"""Worker-count resolution and order-stable parallel reduction."""

from datetime import date

import numpy as np
import pytest

from evload.domain import EvType, TimeGrid
from evload.errors import ConfigError
from evload.generator import GenerationStats, aggregate_fleet_load
from evload.ingest import EvRecord
from evload.parallel import map_chunks, worker_count

MONDAY = date(2023, 1, 16)


def _square(x):
    return x * x


def test_worker_count_defaults_to_serial(monkeypatch):
    monkeypatch.delenv("EVLOAD_THREADS", raising=False)
    assert worker_count() == 1


def test_worker_count_reads_the_environment(monkeypatch):
    monkeypatch.setenv("EVLOAD_THREADS", "4")
    assert worker_count() == 4
    assert worker_count(explicit=2) == 2  # explicit beats the environment


@pytest.mark.parametrize("raw", ["0", "-3", "two", "1.5"])
def test_worker_count_rejects_bad_environment_values(monkeypatch, raw):
    monkeypatch.setenv("EVLOAD_THREADS", raw)
    with pytest.raises(ConfigError):
        worker_count()


def test_worker_count_rejects_bad_explicit_value():
    with pytest.raises(ConfigError):
        worker_count(explicit=0)


def test_map_chunks_serial_preserves_order():
    assert list(map_chunks(_square, list(range(7)), workers=1)) == [
        0, 1, 4, 9, 16, 25, 36
    ]


def test_map_chunks_pool_preserves_order():
    assert list(map_chunks(_square, list(range(9)), workers=3)) == [
        x * x for x in range(9)
    ]


def test_aggregate_is_independent_of_worker_count(oracle_model):
    # 130 EVs split into three chunks; the reduction order is fixed, so
    # two workers give the serial result bit for bit.
    fleet = [
        EvRecord(ev_id=f"w{i:04d}", rated_power=6.6, ev_type=EvType.MEDIUM)
        for i in range(130)
    ]
    serial_stats = GenerationStats()
    serial = aggregate_fleet_load(
        oracle_model, fleet, [MONDAY], seed=17, grid=TimeGrid(15),
        stats=serial_stats, workers=1,
    )
    pooled_stats = GenerationStats()
    pooled = aggregate_fleet_load(
        oracle_model, fleet, [MONDAY], seed=17, grid=TimeGrid(15),
        stats=pooled_stats, workers=2,
    )
    assert np.array_equal(serial[MONDAY].power, pooled[MONDAY].power)
    assert serial_stats == pooled_stats
    assert serial_stats.ev_days == 130
