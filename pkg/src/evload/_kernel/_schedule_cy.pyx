# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: initializedcheck=False
# cython: cdivision=True
"""Compiled scheduling kernel.

Mirrors ``_schedule_py`` draw for draw; see that module's docstring for
the shared uniform-consumption contract.  Given the same generator state
both backends return bit-identical schedules.
"""

from libc.stdint cimport int64_t

import numpy as np

BACKEND_NAME = "cython"

_EMPTY_I64 = np.empty(0, dtype=np.int64)


cdef inline Py_ssize_t _pick(
    const double[::1] cdf, const double[::1] probs, double u
) noexcept nogil:
    # lower-bound binary search == searchsorted(..., side="left")
    cdef Py_ssize_t lo = 0, hi = cdf.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] < u:
            lo = mid + 1
        else:
            hi = mid
    if lo == probs.shape[0]:
        lo -= 1
        while probs[lo] == 0.0:
            lo -= 1
    else:
        while probs[lo] == 0.0:
            lo += 1
    return lo


cdef void _sort_stable(
    const int64_t[::1] starts, int64_t[::1] idx, Py_ssize_t m
) noexcept nogil:
    # insertion sort; stability keeps equal starts in sampling order
    cdef Py_ssize_t i, j
    cdef int64_t k
    for i in range(1, m):
        k = idx[i]
        j = i - 1
        while j >= 0 and starts[idx[j]] > starts[k]:
            idx[j + 1] = idx[j]
            j -= 1
        idx[j + 1] = k


cdef tuple _gather(
    const int64_t[::1] starts,
    const int64_t[::1] durs,
    const int64_t[::1] idx,
    Py_ssize_t m,
    int dropped,
):
    out_s = np.empty(m, dtype=np.int64)
    out_d = np.empty(m, dtype=np.int64)
    cdef int64_t[::1] vs = out_s
    cdef int64_t[::1] vd = out_d
    cdef Py_ssize_t i
    for i in range(m):
        vs[i] = starts[idx[i]]
        vd[i] = durs[idx[i]]
    return out_s, out_d, dropped


def sample_day(
    const double[::1] count_cdf,
    const double[::1] count_probs,
    const int64_t[::1] count_labels,
    const double[::1] dur_cdf,
    const double[::1] dur_probs,
    const int64_t[::1] dur_labels,
    const double[::1] start_cdf,
    const double[::1] start_probs,
    const int64_t[::1] start_labels,
    bint jitter,
    bint dur_uniform,
    int retry_budget,
    rng,
):
    """Sample one EV-day schedule.

    Returns (starts, durations, dropped): start minutes sorted ascending,
    matching durations, and how many sampled events the overlap fallback
    had to drop (0 in the overwhelmingly common case).
    """
    cdef double u = rng.random()
    cdef Py_ssize_t n = <Py_ssize_t> count_labels[_pick(count_cdf, count_probs, u)]
    if n == 0:
        return _EMPTY_I64, _EMPTY_I64, 0

    durs_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] durs = durs_arr
    cdef const double[::1] ud = rng.random(n)
    cdef Py_ssize_t i
    for i in range(n):
        durs[i] = dur_labels[_pick(dur_cdf, dur_probs, ud[i])]
    cdef const double[::1] uj
    if dur_uniform:
        uj = rng.random(n)
        for i in range(n):
            durs[i] = durs[i] - 14 + <int64_t> (uj[i] * 15.0)

    starts_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] starts = starts_arr
    idx_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] idx = idx_arr
    cdef const double[::1] us
    cdef Py_ssize_t attempt
    cdef bint ok
    for attempt in range(retry_budget + 1):
        us = rng.random(n)
        for i in range(n):
            starts[i] = start_labels[_pick(start_cdf, start_probs, us[i])]
        if jitter:
            uj = rng.random(n)
            for i in range(n):
                starts[i] = starts[i] + <int64_t> (uj[i] * 15.0)
        for i in range(n):
            idx[i] = i
        _sort_stable(starts, idx, n)
        ok = True
        for i in range(n - 1):
            if starts[idx[i + 1]] <= starts[idx[i]] + durs[idx[i]]:
                ok = False
                break
        if ok:
            return _gather(starts, durs, idx, n, 0)

    # Retry budget exhausted: on the last attempt's placements, repeatedly
    # drop the most recently sampled event involved in a violation.
    keep_arr = np.ones(n, dtype=np.uint8)
    cdef unsigned char[::1] keep = keep_arr
    cdef int dropped = 0
    cdef Py_ssize_t m, victim, a, b
    while True:
        m = 0
        for i in range(n):
            if keep[i]:
                idx[m] = i
                m += 1
        _sort_stable(starts, idx, m)
        victim = -1
        for i in range(m - 1):
            a = idx[i]
            b = idx[i + 1]
            if starts[b] <= starts[a] + durs[a]:
                if a > b:
                    b = a
                if b > victim:
                    victim = b
        if victim < 0:
            break
        keep[victim] = 0
        dropped += 1
    m = 0
    for i in range(n):
        if keep[i]:
            idx[m] = i
            m += 1
    _sort_stable(starts, idx, m)
    return _gather(starts, durs, idx, m, dropped)


def rasterize_into(
    const int64_t[::1] starts,
    const int64_t[::1] durs,
    double power,
    double[::1] out,
):
    """Add a pulse train at ``power`` kW into a 1440-slot minute array.

    Events are clipped at minute 1440; returns the clipped minutes so a
    carryover mode can credit them to the next day.
    """
    cdef Py_ssize_t n_steps = out.shape[0]
    cdef int64_t carry = 0
    cdef Py_ssize_t i, t
    cdef int64_t s, e
    for i in range(starts.shape[0]):
        s = starts[i]
        e = s + durs[i]
        if e > n_steps:
            carry += e - n_steps
            e = n_steps
        for t in range(s, e):
            out[t] += power
    return carry
