"""Regenerate the bundled synthetic price and demand files.

The price file is a December-like hourly series of 744 hours in $/kWh. It
has a night trough, morning and evening peaks, cheaper weekends, a colder
high-price stretch from day 12 to day 18, and small seeded noise. Its
largest value is below 1.03 / 0.4, so every builtin scenario satisfies the
profitability condition for a 0.4 kWh battery.

The demand file is a weekly template of 168 hourly mean swap requests for a
7-battery station. It has two weekday peaks, morning and late afternoon,
and a flatter weekend.
"""

import csv
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "sairp" / "data"


def bump(h, centre, width):
    return np.exp(-0.5 * ((h - centre) / width) ** 2)


def prices() -> np.ndarray:
    rng = np.random.default_rng(20181212)
    hours = np.arange(744)
    hod = hours % 24
    day = hours // 24  # day 0 is December 1st, a Saturday in 2018
    weekend = np.isin(day % 7, (0, 1))
    shape = 0.030 + 0.022 * bump(hod, 8.0, 1.8) + 0.030 * bump(hod, 18.0, 2.2)
    shape = np.where(weekend, 0.85 * shape, shape)
    cold = np.where((day >= 11) & (day <= 17), 1.6, 1.0)
    noise = 1.0 + 0.08 * rng.standard_normal(744)
    return np.round(np.clip(shape * cold * noise, 0.01, None), 5)


def demand() -> np.ndarray:
    hours = np.arange(168)
    hod = hours % 24
    weekend = (hours // 24) >= 5
    weekday = 0.25 + 1.9 * bump(hod, 8.0, 1.5) + 0.9 * bump(hod, 12.5, 2.0) + 2.3 * bump(hod, 17.5, 2.0)
    weekend_shape = 0.25 + 1.4 * bump(hod, 13.0, 3.5)
    return np.round(np.where(weekend, weekend_shape, weekday), 4)


def write(path: Path, header: tuple[str, str], values: np.ndarray) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for h, v in enumerate(values):
            w.writerow([h, f"{v:g}"])


if __name__ == "__main__":
    write(OUT / "prices_december_synthetic.csv", ("hour", "usd_per_kwh"), prices())
    write(OUT / "demand_weekly_template.csv", ("hour", "lambda"), demand())
