"""Command-line entry point: fit, generate, scenario, sensitivity, compare, synth.

Every stochastic subcommand requires --seed and is a pure function of its
inputs and that seed; re-runs write byte-identical files.  Exit codes are
stable: 0 success, 2 unreadable/unparseable input, 3 failed model or data
validation, 4 bad configuration or usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import date as Date
from pathlib import Path
from typing import Sequence, TextIO

from .domain import (
    DayOfWeek,
    EvType,
    Season,
    SeasonMap,
    TimeGrid,
)
from .errors import (
    ConfigError,
    DomainError,
    EmptyDistributionError,
    EmptyFleetError,
    ModelSchemaError,
    NormalizationError,
    ParseError,
    SimilarityUndefinedError,
    StructuralError,
)
from .generator import (
    GenerationOptions,
    GenerationStats,
    generate_fleet,
    write_profiles_long,
    write_profiles_wide,
)
from .ingest import (
    DEFAULT_MAX_POWER_KW,
    EvRecord,
    assign_rated_power,
    classify_ev,
    fleet_summary,
    parse_events,
    write_events,
    write_rejections,
)
from .model import fit_model, load_model, save_model
from .scenario import (
    DEFAULT_EV_POWERS,
    ScenarioConfig,
    apply_penetration,
    compare_profiles,
    read_base_loads,
    read_profile_curve,
    write_profile_curve,
    write_scenario_summary,
)
from .sensitivity import (
    ProfileStratum,
    sample_size_study,
    write_profile_table,
    write_similarity_table,
)
from .synth import (
    ORACLE_OPTIONS,
    default_ground_truth,
    make_ground_truth_model,
    sample_events_from_model,
    synth_fleet,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DATA = 3
EXIT_CONFIG = 4

_DATA_ERRORS = (
    ModelSchemaError,
    StructuralError,
    DomainError,
    EmptyDistributionError,
    EmptyFleetError,
    NormalizationError,
    SimilarityUndefinedError,
)
_INPUT_ERRORS = (
    ParseError,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
    UnicodeDecodeError,
)


class _Parser(argparse.ArgumentParser):
    """Parser whose usage errors exit with the configuration code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    return cfg


def _merge(args: argparse.Namespace, defaults: dict) -> argparse.Namespace:
    """Overlay precedence: explicit flag > config file entry > default."""
    cfg = _load_config(getattr(args, "config", None))
    for key, hard in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, cfg[key] if key in cfg else hard)
    return args


def _require_seed(args: argparse.Namespace) -> int:
    if args.seed is None:
        raise ConfigError("--seed is required for stochastic subcommands")
    seed = int(args.seed)
    if seed < 0:
        raise ConfigError("--seed must be a non-negative integer")
    return seed


def _out_dir(args: argparse.Namespace) -> Path:
    if not args.out:
        raise ConfigError("--out directory is required")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _check_distinct(inputs: Sequence[str | None], out: Path) -> None:
    resolved = {Path(p).resolve() for p in inputs if p}
    for p in resolved:
        if p == out.resolve() or out.resolve() in p.parents:
            raise ConfigError(f"input path {p} collides with the output directory")


def _parse_date(text: str) -> Date:
    try:
        return Date.fromisoformat(str(text))
    except ValueError:
        raise ConfigError(f"bad date {text!r}, expected YYYY-MM-DD") from None


def _load_season_map(path: str | None) -> SeasonMap:
    if not path:
        return SeasonMap()
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"season map is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or set(doc) != {"winter", "summer"}:
        raise ParseError('season map must be {"winter": [months], "summer": [months]}')
    return SeasonMap.from_month_lists(list(doc["winter"]), list(doc["summer"]))


def _read_fleet_file(path: str) -> list[EvRecord]:
    import csv as _csv

    with open(path, encoding="utf-8", newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader, None)
        if header != ["ev_id", "rated_power_kw"]:
            raise ParseError("fleet file must have header ev_id,rated_power_kw")
        fleet: list[EvRecord] = []
        seen: set[str] = set()
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 2 or not row[0]:
                raise ParseError(f"line {lineno}: malformed fleet row")
            if row[0] in seen:
                raise ParseError(f"line {lineno}: duplicate EV id {row[0]!r}")
            seen.add(row[0])
            try:
                power = float(row[1])
            except ValueError:
                raise ParseError(f"line {lineno}: bad power {row[1]!r}") from None
            if power <= 0:
                raise ParseError(f"line {lineno}: power must be positive")
            fleet.append(
                EvRecord(ev_id=row[0], rated_power=power, ev_type=classify_ev(power))
            )
    if not fleet:
        raise EmptyFleetError("fleet file lists no EVs")
    return fleet


def _write_fleet_file(fleet: Sequence[EvRecord], out: TextIO) -> None:
    import csv as _csv

    writer = _csv.writer(out, lineterminator="\n")
    writer.writerow(["ev_id", "rated_power_kw"])
    for ev in fleet:
        writer.writerow([ev.ev_id, repr(ev.rated_power)])


def _model_mix(model) -> dict[EvType, float]:
    counts = model.metadata.fleet_counts
    total = sum(counts.get(t, 0) for t in EvType)
    if total <= 0:
        raise ConfigError("model metadata has no fleet counts; pass --mix")
    return {t: counts.get(t, 0) / total for t in EvType}


def _generation_options(args: argparse.Namespace) -> GenerationOptions:
    return GenerationOptions(
        start_jitter=bool(args.jitter),
        duration_within_bin=args.duration_mode,
        retry_budget=int(args.retry_budget),
        midnight=args.midnight,
    )


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def _cmd_fit(args: argparse.Namespace) -> int:
    _merge(args, {"events": None, "out": None, "season_map": None,
                  "max_power": DEFAULT_MAX_POWER_KW, "window": None})
    if not args.events:
        raise ConfigError("--events is required")
    out = _out_dir(args)
    _check_distinct([args.events, args.season_map, args.config], out)
    season_map = _load_season_map(args.season_map)
    with open(args.events, encoding="utf-8", newline="") as fh:
        result = parse_events(fh, max_power_kw=float(args.max_power))
    records = assign_rated_power(result.events)
    window = None
    if args.window:
        window = (_parse_date(args.window[0]), _parse_date(args.window[1]))
    model = fit_model(result.events, records, season_map=season_map,
                      study_window=window)
    with open(out / "model.json", "w", encoding="utf-8") as fh:
        save_model(model, fh)
    if result.rejections:
        with open(out / "rejections.csv", "w", encoding="utf-8", newline="") as fh:
            write_rejections(result.rejections, fh)
    print(fleet_summary(records).format_table())
    print(f"events accepted={result.accepted} rejected={result.rejected}")
    print(f"wrote {out / 'model.json'}")
    return EXIT_OK


def _cmd_generate(args: argparse.Namespace) -> int:
    _merge(args, {"model": None, "fleet": None, "fleet_size": None,
                  "dates": None, "seed": None, "resolution": 15,
                  "format": "long", "out": None, "jitter": True,
                  "duration_mode": "upper", "retry_budget": 100,
                  "midnight": "truncate"})
    seed = _require_seed(args)
    if not args.model:
        raise ConfigError("--model is required")
    if not args.dates:
        raise ConfigError("--dates is required")
    out = _out_dir(args)
    _check_distinct([args.model, args.fleet, args.config], out)
    with open(args.model, encoding="utf-8") as fh:
        model = load_model(fh)
    if args.fleet and args.fleet_size:
        raise ConfigError("--fleet and --fleet-size are mutually exclusive")
    if args.fleet:
        fleet = _read_fleet_file(args.fleet)
    elif args.fleet_size:
        from .scenario import quota_type_sequence

        n = int(args.fleet_size)
        if n < 1:
            raise ConfigError("--fleet-size must be positive")
        types = quota_type_sequence(_model_mix(model), n)
        fleet = [
            EvRecord(ev_id=f"ev{i:05d}", rated_power=DEFAULT_EV_POWERS[t], ev_type=t)
            for i, t in enumerate(types)
        ]
    else:
        raise ConfigError("one of --fleet or --fleet-size is required")
    dates_raw = args.dates if isinstance(args.dates, list) else [args.dates]
    if len(dates_raw) == 1:
        start = end = _parse_date(dates_raw[0])
    elif len(dates_raw) == 2:
        start, end = _parse_date(dates_raw[0]), _parse_date(dates_raw[1])
    else:
        raise ConfigError("--dates takes one or two ISO dates")
    if end < start:
        raise ConfigError("date range end precedes start")
    from datetime import timedelta

    dates = [start + timedelta(days=k) for k in range((end - start).days + 1)]
    grid = TimeGrid(int(args.resolution))
    stats = GenerationStats()
    profiles = generate_fleet(
        model, fleet, dates, seed=seed, grid=grid,
        options=_generation_options(args), stats=stats,
    )
    path = out / "profiles.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if args.format == "wide":
            write_profiles_wide(profiles, fh)
        else:
            write_profiles_long(profiles, fh)
    print(
        f"wrote {path} ev_days={stats.ev_days} events={stats.events} "
        f"dropped={stats.dropped_events}"
    )
    return EXIT_OK


def _cmd_scenario(args: argparse.Namespace) -> int:
    _merge(args, {"model": None, "base": None, "penetrations": None,
                  "seed": None, "out": None, "mix": None, "powers": None,
                  "jitter": True, "duration_mode": "upper",
                  "retry_budget": 100, "midnight": "truncate"})
    seed = _require_seed(args)
    if not args.model or not args.base:
        raise ConfigError("--model and --base are required")
    if not args.penetrations:
        raise ConfigError("--penetrations is required")
    out = _out_dir(args)
    _check_distinct([args.model, args.base, args.config], out)
    with open(args.model, encoding="utf-8") as fh:
        model = load_model(fh)
    with open(args.base, encoding="utf-8", newline="") as fh:
        base = read_base_loads(fh)
    if args.mix:
        mix = {t: float(v) for t, v in zip(EvType, args.mix)}
    else:
        mix = _model_mix(model)
    powers = dict(DEFAULT_EV_POWERS)
    if args.powers:
        powers = {t: float(v) for t, v in zip(EvType, args.powers)}
    config = ScenarioConfig(
        penetrations=tuple(float(p) for p in args.penetrations),
        fleet_mix=mix,
        seed=seed,
        ev_powers=powers,
    )
    result = apply_penetration(
        base, config, model, options=_generation_options(args)
    )
    with open(out / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        write_scenario_summary(result, fh)
    for i, level in enumerate(result.levels):
        name = out / f"penetration_{i:02d}.csv"
        with open(name, "w", encoding="utf-8", newline="") as fh:
            write_profile_curve(level.profile, fh)
    print(f"wrote {out / 'summary.csv'} and {len(result.levels)} curve files")
    return EXIT_OK


def _cmd_sensitivity(args: argparse.Namespace) -> int:
    _merge(args, {"events": None, "sizes": None, "reps": None, "seed": None,
                  "out": None, "weekday": DayOfWeek.MON.label,
                  "season": Season.WINTER.label,
                  "season_map": None, "max_power": DEFAULT_MAX_POWER_KW})
    seed = _require_seed(args)
    if not args.events:
        raise ConfigError("--events is required")
    if not args.sizes or args.reps is None:
        raise ConfigError("--sizes and --reps are required")
    out = _out_dir(args)
    _check_distinct([args.events, args.season_map, args.config], out)
    weekday = None if args.weekday == "any" else DayOfWeek.from_label(args.weekday)
    season = None if args.season == "any" else Season.from_label(args.season)
    stratum = ProfileStratum(
        weekday=weekday, season=season, season_map=_load_season_map(args.season_map)
    )
    with open(args.events, encoding="utf-8", newline="") as fh:
        result = parse_events(fh, max_power_kw=float(args.max_power))
    report = sample_size_study(
        result.events,
        sizes=[int(s) for s in args.sizes],
        reps=int(args.reps),
        seed=seed,
        stratum=stratum,
    )
    with open(out / "similarity.csv", "w", encoding="utf-8", newline="") as fh:
        write_similarity_table(report, fh)
    with open(out / "profile_stats.csv", "w", encoding="utf-8", newline="") as fh:
        write_profile_table(report, fh)
    failures = sum(r.failures for r in report.results)
    print(f"wrote {out / 'similarity.csv'} and {out / 'profile_stats.csv'}")
    print(f"sizes={list(report.sizes)} reps={report.reps} failed_reps={failures}")
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace) -> int:
    _merge(args, {"forecast": None, "reference": None, "out": None})
    if not args.forecast or not args.reference:
        raise ConfigError("--forecast and --reference are required")
    with open(args.forecast, encoding="utf-8", newline="") as fh:
        forecast = read_profile_curve(fh, ev_id="forecast")
    with open(args.reference, encoding="utf-8", newline="") as fh:
        reference = read_profile_curve(fh, ev_id="reference")
    metrics = compare_profiles(forecast, reference)
    rows = [
        ("cosine", repr(metrics.cosine)),
        ("peak_time_diff_minutes", str(metrics.peak_time_diff_minutes)),
        ("peak_ratio", repr(metrics.peak_ratio)),
        ("energy_ratio", repr(metrics.energy_ratio)),
        ("energy_error_before_peak_kwh", repr(metrics.energy_error_before_peak_kwh)),
        ("energy_error_after_peak_kwh", repr(metrics.energy_error_after_peak_kwh)),
    ]
    lines = "\n".join(f"{k},{v}" for k, v in rows)
    print("metric,value")
    print(lines)
    if args.out:
        out = _out_dir(args)
        with open(out / "comparison.csv", "w", encoding="utf-8") as fh:
            fh.write("metric,value\n" + lines + "\n")
    return EXIT_OK


def _cmd_synth(args: argparse.Namespace) -> int:
    _merge(args, {"fleet_size": 500, "window": None, "seed": None,
                  "out": None, "jitter": False, "season_map": None})
    seed = _require_seed(args)
    out = _out_dir(args)
    _check_distinct([args.config, args.season_map], out)
    kwargs = {"fleet_size": int(args.fleet_size),
              "season_map": _load_season_map(args.season_map)}
    if args.window:
        kwargs["window"] = (_parse_date(args.window[0]),
                            _parse_date(args.window[1]))
    spec = default_ground_truth(**kwargs)
    model = make_ground_truth_model(spec)
    fleet = synth_fleet(spec)
    options = ORACLE_OPTIONS if not args.jitter else GenerationOptions()
    events = sample_events_from_model(
        model, fleet, spec.window, seed, options=options
    )
    with open(out / "events.csv", "w", encoding="utf-8", newline="") as fh:
        write_events(events, fh)
    with open(out / "fleet.csv", "w", encoding="utf-8", newline="") as fh:
        _write_fleet_file(fleet, fh)
    with open(out / "model.json", "w", encoding="utf-8") as fh:
        save_model(model, fh)
    print(
        f"wrote {out / 'events.csv'} ({len(events)} events, "
        f"{len(fleet)} EVs over {spec.window[0]}..{spec.window[1]})"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly and dispatch.
# ---------------------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; explicit flags win")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--seed", type=int, help="random seed (u64)")


def _add_generation_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--jitter", action=argparse.BooleanOptionalAction,
                     default=None, help="uniform start minute within each 15-min bin")
    sub.add_argument("--duration-mode", choices=["upper", "uniform"], default=None)
    sub.add_argument("--retry-budget", type=int, default=None)
    sub.add_argument("--midnight", choices=["truncate", "carryover"], default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evload", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("fit", parents=[], help="fit PMFs from a charging-event CSV")
    _add_common(p)
    p.add_argument("--events", help="charging events CSV")
    p.add_argument("--season-map", help="JSON month-to-season file")
    p.add_argument("--max-power", type=float, help="plausibility cap in kW")
    p.add_argument("--window", nargs=2, metavar=("START", "END"),
                   help="study window (ISO dates, inclusive)")
    p.set_defaults(func=_cmd_fit)

    p = subs.add_parser("generate", help="generate daily charging profiles")
    _add_common(p)
    p.add_argument("--model", help="fitted model JSON")
    p.add_argument("--fleet", help="fleet CSV (ev_id,rated_power_kw)")
    p.add_argument("--fleet-size", type=int, help="synthesize a fleet of this size")
    p.add_argument("--dates", nargs="+", metavar="DATE",
                   help="one date or an inclusive start end pair")
    p.add_argument("--resolution", type=int, choices=[1, 15])
    p.add_argument("--format", choices=["long", "wide"])
    _add_generation_flags(p)
    p.set_defaults(func=_cmd_generate)

    p = subs.add_parser("scenario", help="penetration sweep over base loads")
    _add_common(p)
    p.add_argument("--model", help="fitted model JSON")
    p.add_argument("--base", help="base-load CSV")
    p.add_argument("--penetrations", nargs="+", type=float)
    p.add_argument("--mix", nargs=3, type=float,
                   metavar=("SMALL", "MEDIUM", "LARGE"))
    p.add_argument("--powers", nargs=3, type=float,
                   metavar=("SMALL", "MEDIUM", "LARGE"))
    _add_generation_flags(p)
    p.set_defaults(func=_cmd_scenario)

    p = subs.add_parser("sensitivity", help="database-size sensitivity study")
    _add_common(p)
    p.add_argument("--events", help="charging events CSV")
    p.add_argument("--sizes", nargs="+", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--weekday", choices=[d.label for d in DayOfWeek] + ["any"])
    p.add_argument("--season", choices=[s.label for s in Season] + ["any"])
    p.add_argument("--season-map", help="JSON month-to-season file")
    p.add_argument("--max-power", type=float)
    p.set_defaults(func=_cmd_sensitivity)

    p = subs.add_parser("compare", help="compare two daily curves")
    _add_common(p)
    p.add_argument("--forecast", help="forecast curve CSV")
    p.add_argument("--reference", help="reference curve CSV")
    p.set_defaults(func=_cmd_compare)

    p = subs.add_parser("synth", help="emit a synthetic ground-truth dataset")
    _add_common(p)
    p.add_argument("--fleet-size", type=int)
    p.add_argument("--window", nargs=2, metavar=("START", "END"))
    p.add_argument("--jitter", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--season-map", help="JSON month-to-season file")
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"evload: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _INPUT_ERRORS as exc:
        print(f"evload: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _DATA_ERRORS as exc:
        print(f"evload: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
