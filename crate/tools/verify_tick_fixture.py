#!/usr/bin/env python3
"""Independent reference for the realized-correlation ingestion pipeline.

Recomputes the per-day correlation matrices of a tick CSV from scratch
(last-tick sampling on a 5-minute grid, log returns, pairwise-complete
uncentered correlation) without touching the Rust implementation. Used to
freeze the expected values of fixtures/ticks_3pair_2day.csv into the
acceptance suite.

Usage: python3 tools/verify_tick_fixture.py fixtures/ticks_3pair_2day.csv
"""

import math
import sys
from collections import defaultdict
from datetime import datetime, timezone

INTERVAL_MS = 5 * 60 * 1000
DAY_MS = 24 * 60 * 60 * 1000
GRID_POINTS = DAY_MS // INTERVAL_MS  # 288


def parse(path):
    ticks = defaultdict(list)  # (pair, day) -> [(ms_of_day, mid)]
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            pair, ts, bid, ask = line.split(",")
            dt = datetime.strptime(ts, "%Y%m%d %H:%M:%S.%f")
            dt = dt.replace(tzinfo=timezone.utc)
            day = dt.date()
            midnight = datetime(day.year, day.month, day.day, tzinfo=timezone.utc)
            ms = int((dt - midnight).total_seconds() * 1000)
            mid = (float(bid) + float(ask)) / 2
            ticks[(pair, day)].append((ms, mid))
    return ticks


def grid_mids(day_ticks):
    day_ticks = sorted(day_ticks, key=lambda t: t[0])
    mids = []
    last = None
    k = 0
    for i in range(GRID_POINTS):
        t = i * INTERVAL_MS
        while k < len(day_ticks) and day_ticks[k][0] <= t:
            last = day_ticks[k][1]
            k += 1
        mids.append(last)
    return mids


def log_returns(mids):
    out = []
    for a, b in zip(mids, mids[1:]):
        out.append(math.log(b / a) if a is not None and b is not None else None)
    return out


def correlation(r1, r2):
    sxy = sxx = syy = 0.0
    for a, b in zip(r1, r2):
        if a is None or b is None:
            continue
        sxy += a * b
        sxx += a * a
        syy += b * b
    return sxy / math.sqrt(sxx * syy)


def main():
    path = sys.argv[1] if len(sys.argv) > 1 else "fixtures/ticks_3pair_2day.csv"
    ticks = parse(path)
    pairs = sorted({p for p, _ in ticks})
    days = sorted({d for _, d in ticks})
    print(f"pairs: {pairs}")
    for day in days:
        returns = {p: log_returns(grid_mids(ticks[(p, day)])) for p in pairs}
        entries = []
        for i, a in enumerate(pairs):
            for b in pairs[i + 1:]:
                entries.append(correlation(returns[a], returns[b]))
        print(day, " ".join(f"{v:.17g}" for v in entries))


if __name__ == "__main__":
    main()
