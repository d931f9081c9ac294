"""Timing table for gears of doubling size, with empirical complexity orders.

Usage: python3 demos/timing_table.py
"""
from primdetect.calibration import calibrate
from primdetect.experiments import format_benchmark, run_benchmark


def main() -> None:
    rows, _ = run_benchmark((4, 8, 16, 32, 64), repeats=3, profile=calibrate())
    print(format_benchmark(rows))
    print("\norders are log2 of the time ratio between consecutive sizes; quadratic growth gives 2")


if __name__ == "__main__":
    main()
