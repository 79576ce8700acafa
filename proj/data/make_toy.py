"""Regenerates data/toy.csv: 2,000 synthetic workforce records.

Columns: age, hours, income (continuous), education (ordinal), sector (nominal).
Run from the repository root: python3 data/make_toy.py
"""

import csv

import numpy as np

EDUCATION = ["primary", "secondary", "bachelor", "master", "doctorate"]
SECTORS = ["private", "public", "self"]


def main(path="data/toy.csv", n=2000, seed=20240611):
    rng = np.random.default_rng(seed)
    young = rng.random(n) < 0.45
    age = np.where(young, rng.normal(27, 4, n), rng.normal(50, 7, n)).clip(18, 80)
    edu = np.clip(np.round(rng.normal(1.6 + 0.02 * (age - 30), 1.0)), 0, 4).astype(int)
    logits = np.stack([np.full(n, 0.8), 0.35 * edu - 0.6, 0.03 * (age - 40)], axis=1)
    p = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
    sector = np.array([rng.choice(3, p=row) for row in p])
    part_time = rng.random(n) < 0.2
    hours = np.where(part_time, rng.normal(20, 4, n), rng.normal(41, 5, n)).clip(5, 80)
    hours += np.where(sector == 2, 6.0, 0.0)
    income = 8 + 6 * edu + 0.35 * (age - 18) + 0.4 * (hours - 40) + 5 * (sector == 2) + rng.normal(0, 6, n)
    income = income.clip(0, None)

    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["age", "hours", "income", "education", "sector"])
        for i in range(n):
            w.writerow([f"{age[i]:.1f}", f"{hours[i]:.1f}", f"{income[i]:.2f}", EDUCATION[edu[i]], SECTORS[sector[i]]])


if __name__ == "__main__":
    main()
