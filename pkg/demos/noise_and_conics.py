"""Noise sweep on the gear and the random-conics misclassification rate.

Usage: python3 demos/noise_and_conics.py [runs]
"""
import sys

from primdetect.experiments import conics_rate, format_noise, noise_sweep


def main(runs: int) -> None:
    print("noisy 8-tooth gear (rate without / with the known cluster count)")
    print(format_noise(noise_sweep()))
    rep = conics_rate(runs, seed=0)
    print(f"\nrandom conics: {rep.runs} runs, mean rate {rep.mean_rate:.4f}, runs with errors {rep.failed_runs}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 50)
