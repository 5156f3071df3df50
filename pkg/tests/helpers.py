"""Shared test utilities: independent oracles and signal builders."""

import math

import numpy as np


def consensus_oracle(estimates, tolerance):
    """Brute-force consensus vote, coded independently of the library.

    Enumerates every reported period, builds its supporter set explicitly,
    applies the short/long eligibility rule and walks the tie-break chain
    (support, mean supporter score, supporter distance, smaller period)
    with explicit comparisons.
    """
    scales = sorted(e.scale for e in estimates)
    mid = len(scales) // 2
    if len(scales) % 2 == 1:
        split = float(scales[mid])
    else:
        split = (scales[mid - 1] + scales[mid]) / 2.0

    rows = []
    for period in sorted({e.period for e in estimates}):
        delta = max(1, math.ceil(tolerance * period))
        supporters = []
        for e in estimates:
            if abs(e.period - period) <= delta:
                supporters.append(e)
        support = len(supporters)
        mean_score = sum(e.score for e in supporters) / support
        spread = sum(abs(e.period - period) for e in supporters)
        short = False
        long = False
        for e in supporters:
            if e.scale <= split:
                short = True
            else:
                long = True
        rows.append((period, support, mean_score, spread, short and long))

    eligible = [r for r in rows if r[4]]
    pool = eligible if eligible else rows
    best = pool[0]
    for row in pool[1:]:
        if row[1] > best[1]:
            best = row
        elif row[1] == best[1]:
            if row[2] > best[2]:
                best = row
            elif row[2] == best[2]:
                if row[3] < best[3]:
                    best = row
                elif row[3] == best[3] and row[0] < best[0]:
                    best = row
    return best[0]


def sine_stream(period, n, phase=0.0):
    t = np.arange(n)
    return np.sin(2 * np.pi * (t / period) + phase)


def square_stream(period, n):
    t = np.arange(n)
    return np.where((t % period) < period / 2, 1.0, 0.0)


def exact_tile(values, n):
    values = np.asarray(values, dtype=np.float64)
    reps = -(-n // values.size)
    return np.tile(values, reps)[:n]
