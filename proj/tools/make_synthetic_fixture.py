#!/usr/bin/env python3
"""Writes the offline fixture used by the test and acceptance suites.

usrec.csv is the monthly NBER recession indicator (USREC convention: 1 from
the month after a business-cycle peak through the trough, inclusive), built
from the published peak/trough chronology.

yields_synthetic.csv is NOT market data. It is a seeded Nelson-Siegel
simulation over the nine constant-maturity tenors whose slope factor tends to
flatten ahead of NBER peaks. It exists so the full pipeline can be exercised
without network access; replace it with real FRED files (GS3M/TB3MS, TB6MS,
GS1, GS2, GS3, GS5, GS7, GS10, GS20) for a faithful run.
"""
import argparse
import pathlib

import numpy as np

PEAK_TROUGH = [
    ((1960, 4), (1961, 2)),
    ((1969, 12), (1970, 11)),
    ((1973, 11), (1975, 3)),
    ((1980, 1), (1980, 7)),
    ((1981, 7), (1982, 11)),
    ((1990, 7), (1991, 3)),
    ((2001, 3), (2001, 11)),
    ((2007, 12), (2009, 6)),
    ((2020, 2), (2020, 4)),
]

TENOR_MONTHS = [3, 6, 12, 24, 36, 60, 84, 120, 240]
COLUMNS = ["GS3M", "GS6M", "GS1", "GS2", "GS3", "GS5", "GS7", "GS10", "GS20"]

# (year, rough level of the middle of the curve)
LEVEL_ANCHORS = [
    (1969.0, 6.5), (1974.5, 7.8), (1977.0, 7.0), (1981.5, 14.0), (1984.5, 11.5),
    (1987.0, 8.2), (1989.5, 8.6), (1993.5, 5.6), (1998.5, 5.3), (2000.5, 6.2),
    (2003.5, 3.3), (2006.5, 4.9), (2009.0, 2.6), (2012.5, 1.6), (2016.5, 1.8),
    (2019.0, 2.4), (2020.9, 0.8),
]


def ordinal(y, m):
    return y * 12 + m - 1


def months(first, last):
    return list(range(ordinal(*first), ordinal(*last) + 1))


def label(o):
    return f"{o // 12:04d}-{o % 12 + 1:02d}-01"


def recession_flag(o):
    for peak, trough in PEAK_TROUGH:
        if ordinal(*peak) < o <= ordinal(*trough):
            return 1
    return 0


def slope_target(o):
    """Long-minus-short slope profile: flattens before peaks, steepens after."""
    target = 1.6
    for peak, trough in PEAK_TROUGH:
        p, t = ordinal(*peak), ordinal(*trough)
        if p - 20 <= o <= p:
            target = min(target, 1.6 - 2.1 * (o - (p - 20)) / 20.0)
        elif p < o <= t + 24:
            target = max(target, 2.8 - 1.2 * max(0, o - t) / 24.0)
    return target


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--seed", type=int, default=19690101)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "usrec.csv", "w", newline="\n") as fh:
        fh.write("DATE,USREC\n")
        for o in months((1960, 1), (2020, 12)):
            fh.write(f"{label(o)},{recession_flag(o)}\n")

    rng = np.random.default_rng(args.seed)
    span = months((1969, 1), (2020, 11))
    years = np.array([o / 12.0 for o in span])
    anchor_x = [a for a, _ in LEVEL_ANCHORS]
    anchor_y = [b for _, b in LEVEL_ANCHORS]
    level = np.interp(years, anchor_x, anchor_y)

    lam = 0.0609
    tau = np.array(TENOR_MONTHS, dtype=float)
    f1 = (1 - np.exp(-lam * tau)) / (lam * tau)
    f2 = f1 - np.exp(-lam * tau)
    spread_load = f1[0] - f1[-1]

    level_noise = 0.0
    slope_noise = 0.0
    curve = 0.0
    rows = []
    for i, o in enumerate(span):
        level_noise = 0.9 * level_noise + rng.normal(0, 0.25)
        slope_noise = 0.85 * slope_noise + rng.normal(0, 0.18)
        curve = 0.9 * curve + rng.normal(0, 0.25)
        slope = slope_target(o) + slope_noise
        beta2 = -slope / spread_load
        beta1 = level[i] + level_noise - beta2 * f1.mean()
        y = beta1 + beta2 * f1 + curve * f2 + rng.normal(0, 0.04, size=tau.size)
        y = np.maximum(np.round(y, 2), 0.01)
        rows.append((label(o), y))

    with open(out / "yields_synthetic.csv", "w", newline="\n") as fh:
        fh.write("DATE," + ",".join(COLUMNS) + "\n")
        for d, y in rows:
            fh.write(d + "," + ",".join(f"{v:.2f}" for v in y) + "\n")


if __name__ == "__main__":
    main()
