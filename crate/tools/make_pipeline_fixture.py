#!/usr/bin/env python3
"""Deterministic generator for fixtures/ticks_6pair_2w.csv.

Six FX pairs over the business days 2020-06-01..2020-06-12. Each day a
shared market factor and per-pair idiosyncratic noise drive minute-level
log-price walks; every pair then quotes at a few random times per hour.
The seed is fixed, so the fixture regenerates byte-identically.

Usage: python3 tools/make_pipeline_fixture.py > fixtures/ticks_6pair_2w.csv
"""

import math
import random

PAIRS = [
    # symbol, base price, factor loading, quote decimals
    ("EUR/USD", 1.1043, 1.0, 5),
    ("GBP/USD", 1.2559, 0.8, 5),
    ("USD/JPY", 107.59, -0.9, 3),
    ("AUD/USD", 0.6893, 1.2, 5),
    ("USD/CHF", 0.9621, -0.7, 5),
    ("USD/CAD", 1.3517, -1.1, 5),
]
DAYS = [
    "20200601", "20200602", "20200603", "20200604", "20200605",
    "20200608", "20200609", "20200610", "20200611", "20200612",
]
MINUTES = 1440
STEP_VOL = 2.2e-4  # per-minute log-return sd, ~0.8% daily
HALF_SPREAD = 6e-5  # relative half spread
TICKS_PER_HOUR = 5

rng = random.Random(20200601)


def walk(vol):
    path = [0.0]
    for _ in range(MINUTES - 1):
        path.append(path[-1] + rng.gauss(0.0, vol))
    return path


def main():
    rows = []
    for day in DAYS:
        factor = walk(STEP_VOL)
        for symbol, base, beta, decimals in PAIRS:
            idio = walk(STEP_VOL * 0.8)
            log_base = math.log(base)
            times = set()
            for hour in range(24):
                for _ in range(TICKS_PER_HOUR):
                    times.add((hour, rng.randrange(60), rng.randrange(60)))
            for hour, minute, second in sorted(times):
                t = hour * 60 + minute
                mid = math.exp(log_base + beta * factor[t] + idio[t])
                bid = round(mid * (1.0 - HALF_SPREAD), decimals)
                ask = round(mid * (1.0 + HALF_SPREAD), decimals)
                if bid >= ask:  # rounding collapsed the spread
                    ask = bid + 10.0 ** -decimals
                ts = f"{day} {hour:02d}:{minute:02d}:{second:02d}.000"
                rows.append(f"{symbol},{ts},{bid:.{decimals}f},{ask:.{decimals}f}")
    print("\n".join(rows))


if __name__ == "__main__":
    main()
