"""Pure-Python (numpy) scheduling kernel.

This module and the compiled twin ``_schedule_cy`` implement exactly the
same uniform-draw pattern so that, given the same ``numpy.random.Generator``
state, both backends return bit-identical schedules:

1. one scalar draw selects the daily event count n (inverse transform,
   boundary ties resolve to the lower label, zero-mass bins skipped,
   draws past a float-shortfall cumsum take the highest nonzero bin),
2. if n > 0, one block of n draws selects duration bins, plus one block
   of n draws when durations are uniform within their bin,
3. each placement attempt consumes one block of n draws for start bins,
   plus one block of n draws when within-bin start jitter is on,
4. the drop fallback after an exhausted retry budget consumes no draws.

Durations are sampled once; only start times are re-drawn on overlap.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_EMPTY_I64 = np.empty(0, dtype=np.int64)


def _inverse_cdf_scalar(cdf: np.ndarray, probs: np.ndarray, u: float) -> int:
    i = int(np.searchsorted(cdf, u, side="left"))
    if i == probs.shape[0]:
        # Float cumsum can top out a hair below 1.0; such a draw belongs
        # to the highest nonzero-mass bin.
        i -= 1
        while probs[i] == 0.0:
            i -= 1
    else:
        while probs[i] == 0.0:
            i += 1
    return i


def _inverse_cdf_block(cdf: np.ndarray, probs: np.ndarray, us: np.ndarray) -> np.ndarray:
    m = probs.shape[0]
    idx = np.searchsorted(cdf, us, side="left")
    over = idx == m
    if over.any():
        idx[over] = m - 1
    # Zero-mass hits are near-measure-zero but must match the compiled
    # backend: walk forward normally, backward for cumsum overshoot.
    step = np.where(over, -1, 1)
    bad = probs[idx] == 0.0
    while bad.any():
        idx[bad] += step[bad]
        bad = probs[idx] == 0.0
    return idx


def _is_valid(starts_sorted: np.ndarray, durs_sorted: np.ndarray) -> bool:
    if starts_sorted.size <= 1:
        return True
    ends = starts_sorted[:-1] + durs_sorted[:-1]
    return bool(np.all(starts_sorted[1:] > ends))


def sample_day(
    count_cdf: np.ndarray,
    count_probs: np.ndarray,
    count_labels: np.ndarray,
    dur_cdf: np.ndarray,
    dur_probs: np.ndarray,
    dur_labels: np.ndarray,
    start_cdf: np.ndarray,
    start_probs: np.ndarray,
    start_labels: np.ndarray,
    jitter: bool,
    dur_uniform: bool,
    retry_budget: int,
    rng: np.random.Generator,
):
    """Sample one EV-day schedule.

    Returns (starts, durations, dropped): start minutes sorted ascending,
    matching durations, and how many sampled events the overlap fallback
    had to drop (0 in the overwhelmingly common case).
    """
    u = rng.random()
    n = int(count_labels[_inverse_cdf_scalar(count_cdf, count_probs, u)])
    if n == 0:
        return _EMPTY_I64, _EMPTY_I64, 0

    ud = rng.random(n)
    durs = dur_labels[_inverse_cdf_block(dur_cdf, dur_probs, ud)]
    if dur_uniform:
        uj = rng.random(n)
        durs = durs - 14 + (uj * 15.0).astype(np.int64)

    starts = None
    for _ in range(retry_budget + 1):
        us = rng.random(n)
        starts = start_labels[_inverse_cdf_block(start_cdf, start_probs, us)]
        if jitter:
            uj = rng.random(n)
            starts = starts + (uj * 15.0).astype(np.int64)
        order = np.argsort(starts, kind="stable")
        ss, ds = starts[order], durs[order]
        if _is_valid(ss, ds):
            return ss, ds, 0

    # Retry budget exhausted: on the last attempt's placements, repeatedly
    # drop the most recently sampled event involved in a violation.
    keep = list(range(n))
    dropped = 0
    while True:
        order = sorted(keep, key=lambda k: (int(starts[k]), k))
        victim = -1
        for a, b in zip(order, order[1:]):
            if int(starts[b]) <= int(starts[a]) + int(durs[a]):
                victim = max(victim, max(a, b))
        if victim < 0:
            break
        keep.remove(victim)
        dropped += 1
    order = sorted(keep, key=lambda k: (int(starts[k]), k))
    return (
        starts[order].astype(np.int64),
        durs[order].astype(np.int64),
        dropped,
    )


def rasterize_into(
    starts: np.ndarray,
    durs: np.ndarray,
    power: float,
    out: np.ndarray,
) -> int:
    """Add a pulse train at ``power`` kW into a 1440-slot minute array.

    Events are clipped at minute 1440; returns the clipped minutes so a
    carryover mode can credit them to the next day.
    """
    n_steps = out.shape[0]
    carry = 0
    for i in range(starts.shape[0]):
        s = int(starts[i])
        e = s + int(durs[i])
        if e > n_steps:
            carry += e - n_steps
            e = n_steps
        if s < e:
            out[s:e] += power
    return carry
