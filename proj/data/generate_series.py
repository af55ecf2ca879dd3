#!/usr/bin/env python3
"""Writes the synthetic weather and load series shipped with the scenarios.

Three days per season: sinusoidal outdoor temperature, a clear-sky
irradiance bell scaled by a per-day cloud factor, and daily load shapes
with morning and evening peaks. Run from this directory.
"""
import csv
import math
from pathlib import Path

HERE = Path(__file__).resolve().parent

SEASONS = {
    # mean degC, swing degC, sunrise, sunset, peak kW/m2, per-day offsets and cloud factors
    "winter": dict(mean=-2.0, swing=4.0, rise=8.0, set=16.5, peak=0.35,
                   offsets=[-1.0, 0.0, 1.5], clouds=[1.0, 0.55, 0.85]),
    "spring": dict(mean=10.0, swing=5.0, rise=6.5, set=19.5, peak=0.70,
                   offsets=[0.0, -1.5, 1.0], clouds=[0.9, 1.0, 0.6]),
    "summer": dict(mean=22.0, swing=6.0, rise=5.5, set=21.0, peak=0.90,
                   offsets=[0.0, 1.0, -1.0], clouds=[1.0, 0.95, 0.8]),
}

# kW_e base load and kW_th hot-water draw of a single-family house by hour
SFH_BASE = [0.30, 0.25, 0.25, 0.25, 0.25, 0.30, 0.55, 0.95, 0.80, 0.50, 0.40, 0.45,
            0.60, 0.50, 0.40, 0.40, 0.50, 0.80, 1.20, 1.35, 1.15, 0.90, 0.60, 0.40]
SFH_DHW = [0.05, 0.05, 0.05, 0.05, 0.05, 0.10, 0.80, 1.60, 0.90, 0.30, 0.20, 0.20,
           0.40, 0.20, 0.15, 0.15, 0.20, 0.30, 0.60, 1.00, 0.70, 0.40, 0.20, 0.10]


def weather(season):
    p = SEASONS[season]
    rows = []
    for day in range(3):
        for h in range(24):
            t = p["mean"] + p["offsets"][day] + p["swing"] * math.sin(2 * math.pi * (h - 9) / 24)
            mid = h + 0.5
            if p["rise"] < mid < p["set"]:
                x = (mid - p["rise"]) / (p["set"] - p["rise"])
                irr = p["peak"] * p["clouds"][day] * math.sin(math.pi * x) ** 1.5
            else:
                irr = 0.0
            rows.append((day * 24 + h, round(t, 3), round(irr, 4)))
    with open(HERE / "weather" / f"{season}.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["hour", "t_out", "irradiance"])
        w.writerows(rows)


def loads(name, scale_base, scale_dhw):
    with open(HERE / "loads" / f"{name}.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["hour", "base_load", "dhw_draw"])
        for h in range(24):
            w.writerow([h, round(SFH_BASE[h] * scale_base, 4), round(SFH_DHW[h] * scale_dhw, 4)])


def main():
    (HERE / "weather").mkdir(exist_ok=True)
    (HERE / "loads").mkdir(exist_ok=True)
    for s in SEASONS:
        weather(s)
    loads("sfh", 1.0, 1.0)
    # six dwellings sharing one building
    loads("mfh", 4.0, 5.0)


if __name__ == "__main__":
    main()
