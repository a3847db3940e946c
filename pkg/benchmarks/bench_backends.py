"""Compare the compiled and pure-Python schedule kernels.

Both backends consume identical draw sequences, so the comparison is
pure speed; outputs are checked for equality while timing.  Run:

    python3 benchmarks/bench_backends.py [--ev-days 50000] [--seed 7]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from evload._kernel import _schedule_py
from evload.domain import DayOfWeek, DayType, EvType, Season
from evload.synth import default_ground_truth

try:
    from evload._kernel import _schedule_cy
except ImportError:
    _schedule_cy = None


def day_args(spec, ev_type, day, day_type, season):
    count = spec.recharge_count[(ev_type, day)]
    dur = spec.duration[ev_type]
    start = spec.start_time[(ev_type, day_type, season)]
    return (
        count.cdf, count.probs, count.labels,
        dur.cdf, dur.probs, dur.labels,
        start.cdf, start.probs, start.labels,
    )


def run(kernel, args, n_days, seed, jitter):
    rng = np.random.default_rng(seed)
    out = np.zeros(1440, dtype=np.float64)
    events = 0
    t0 = time.perf_counter()
    for _ in range(n_days):
        starts, durs, dropped = kernel.sample_day(*args, jitter, jitter, 100, rng)
        if starts.size:
            kernel.rasterize_into(starts, durs, 6.6, out)
            events += starts.size
    return time.perf_counter() - t0, events, out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--ev-days", type=int, default=50000)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    spec = default_ground_truth(fleet_size=10)
    kargs = day_args(spec, EvType.MEDIUM, DayOfWeek.TUE, DayType.TUE, Season.WINTER)

    rows = []
    outputs = {}
    for jitter in (False, True):
        for name, kernel in (("python", _schedule_py), ("cython", _schedule_cy)):
            if kernel is None:
                print(f"{name}: not built, skipping")
                continue
            dt, events, out = run(kernel, kargs, args.ev_days, args.seed, jitter)
            rows.append((name, jitter, dt, events))
            outputs[(name, jitter)] = out

    print(f"{'backend':8s} {'jitter':6s} {'seconds':>8s} {'EV-days/s':>12s} {'events':>8s}")
    for name, jitter, dt, events in rows:
        print(
            f"{name:8s} {str(jitter):6s} {dt:8.3f} {args.ev_days / dt:12,.0f} {events:8d}"
        )

    if _schedule_cy is not None:
        for jitter in (False, True):
            same = np.array_equal(outputs[("python", jitter)], outputs[("cython", jitter)])
            print(f"identical aggregate (jitter={jitter}): {same}")
        base = next(r[2] for r in rows if r[0] == "python" and not r[1])
        fast = next(r[2] for r in rows if r[0] == "cython" and not r[1])
        print(f"speedup (no jitter): {base / fast:.1f}x")


if __name__ == "__main__":
    main()
