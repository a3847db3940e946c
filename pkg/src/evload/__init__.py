"""Discrete probability models of residential EV charging.

Fits per-stratum PMFs (daily recharge count, start time, duration) from
charging-event logs, generates stochastic multi-event daily profiles, and
supports penetration scenarios on base loads plus database-size
sensitivity studies.  The schedule sampler runs on a compiled kernel when
available and falls back to a pure numpy implementation with identical
output; set EVLOAD_BACKEND=python or =cython to force one.
"""

from ._kernel import active_backend
from .domain import (
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
    total_variation,
)
from .errors import (
    ConfigError,
    DomainError,
    EmptyDistributionError,
    EmptyFleetError,
    EvloadError,
    ModelSchemaError,
    NormalizationError,
    ParseError,
    SimilarityUndefinedError,
    StructuralError,
)
from .generator import (
    ChargingInterval,
    ChargingSchedule,
    DailyProfile,
    GenerationOptions,
    GenerationStats,
    aggregate_fleet_load,
    day_rng,
    generate_fleet,
    generate_schedule,
    schedule_to_profile,
)
from .ingest import (
    ChargingEvent,
    EvRecord,
    classify_ev,
    fleet_summary,
    parse_events,
)
from .model import (
    EvProfileModel,
    ModelMetadata,
    bin_duration,
    charging_probability,
    fit_model,
    load_model,
    save_model,
    start_bin,
)
from .scenario import (
    BaseLoadSet,
    ScenarioConfig,
    ScenarioResult,
    aggregate_profiles,
    apply_penetration,
    compare_profiles,
    max_normalize,
    peak_of,
)
from .sensitivity import (
    ProfileStratum,
    SensitivityReport,
    sample_size_study,
)
from .synth import (
    GroundTruthSpec,
    default_ground_truth,
    make_ground_truth_model,
    sample_events_from_model,
    synth_fleet,
)

__version__ = "0.1.0"

__all__ = [
    "ChargingEvent",
    "ChargingInterval",
    "ChargingSchedule",
    "BaseLoadSet",
    "ConfigError",
    "DailyProfile",
    "DayOfWeek",
    "DayType",
    "DomainError",
    "EmptyDistributionError",
    "EmptyFleetError",
    "EvProfileModel",
    "EvRecord",
    "EvType",
    "EvloadError",
    "GenerationOptions",
    "GenerationStats",
    "GroundTruthSpec",
    "ModelMetadata",
    "ModelSchemaError",
    "NormalizationError",
    "ParseError",
    "Pmf",
    "ProfileStratum",
    "ScenarioConfig",
    "ScenarioResult",
    "Season",
    "SeasonMap",
    "SensitivityReport",
    "SimilarityUndefinedError",
    "StructuralError",
    "TimeGrid",
    "active_backend",
    "aggregate_fleet_load",
    "aggregate_profiles",
    "apply_penetration",
    "bin_duration",
    "charging_probability",
    "classify_ev",
    "compare_profiles",
    "cosine_similarity",
    "day_rng",
    "day_type_of",
    "default_ground_truth",
    "fit_model",
    "fleet_summary",
    "generate_fleet",
    "generate_schedule",
    "load_model",
    "make_ground_truth_model",
    "max_normalize",
    "parse_events",
    "peak_of",
    "pmf_from_counts",
    "sample_events_from_model",
    "sample_size_study",
    "save_model",
    "schedule_to_profile",
    "start_bin",
    "synth_fleet",
    "total_variation",
]
