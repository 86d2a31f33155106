"""Synthetic benchmark data and CSV ingestion."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .series import Series

DEFAULT_COLUMN = "value"


def make_synthetic_seasonal(
    n: int = 2048,
    period: int = 24,
    level: float = 10.0,
    amplitude: float = 2.0,
    trend_slope: float = 0.002,
    noise_std: float = 0.3,
    seed: int = 7,
) -> Series:
    """Seasonal benchmark series: level + linear drift + sinusoid + noise.

    The level keeps values well away from zero so percentage errors stay
    defined everywhere.
    """
    if n < 2 or period < 2:
        raise ValueError("need n >= 2 and period >= 2")
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=float)
    values = (
        level
        + trend_slope * t
        + amplitude * np.sin(2.0 * math.pi * t / period)
        + rng.normal(0.0, noise_std, size=n)
    )
    return Series(tuple(float(v) for v in values))


def write_csv(path: str | Path, series: Series, column: str = DEFAULT_COLUMN) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", column])
        for i, value in enumerate(series.values):
            writer.writerow([i, "" if value is None else repr(value)])


def read_csv(path: str | Path, column: str = DEFAULT_COLUMN) -> Series:
    """Load one column as a Series; blank cells and NaN tokens are missing."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            names = ", ".join(reader.fieldnames or [])
            raise ValueError(f"column {column!r} not found (have: {names})")
        values: list[float | None] = []
        for row in reader:
            cell = (row.get(column) or "").strip()
            if not cell or cell.lower() in ("nan", "na", "null", "none"):
                values.append(None)
                continue
            values.append(float(cell))
    if not values:
        raise ValueError("CSV contains no data rows")
    return Series(tuple(values))


def main(argv: list[str] | None = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="Write the synthetic benchmark CSV.")
    parser.add_argument("--out", required=True, help="output CSV path")
    parser.add_argument("--n", type=int, default=2048)
    parser.add_argument("--period", type=int, default=24)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--noise", type=float, default=0.3)
    args = parser.parse_args(argv)
    series = make_synthetic_seasonal(n=args.n, period=args.period, seed=args.seed, noise_std=args.noise)
    write_csv(args.out, series)
    print(f"wrote {len(series)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
