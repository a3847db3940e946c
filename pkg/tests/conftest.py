"""Shared fixtures: one small synthetic corpus reused across the suite.

The stock ground truth at fleet size 60 over its default four-week window
gives a few thousand events in under a second, enough for exact-arithmetic
and smoke-level checks; statistical recovery at scale lives in the
acceptance tests.
"""

import pytest

from evload.ingest import assign_rated_power
from evload.model import fit_model
from evload.synth import (
    default_ground_truth,
    make_ground_truth_model,
    sample_events_from_model,
    synth_fleet,
)


@pytest.fixture(scope="session")
def oracle_spec():
    return default_ground_truth(fleet_size=60)


@pytest.fixture(scope="session")
def oracle_model(oracle_spec):
    return make_ground_truth_model(oracle_spec)


@pytest.fixture(scope="session")
def oracle_fleet(oracle_spec):
    return synth_fleet(oracle_spec)


@pytest.fixture(scope="session")
def oracle_events(oracle_model, oracle_fleet, oracle_spec):
    return sample_events_from_model(
        oracle_model, oracle_fleet, oracle_spec.window, seed=11
    )


@pytest.fixture(scope="session")
def oracle_records(oracle_events):
    return assign_rated_power(oracle_events)


@pytest.fixture(scope="session")
def fitted_model(oracle_events, oracle_records, oracle_spec):
    return fit_model(
        oracle_events, oracle_records, study_window=oracle_spec.window
    )
