"""Benchmark and experiment harness: gear timings, random conics, noisy gears."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .calibration import CalibrationProfile, _subseed, calibrate
from .clustering import default_samples, detect_primitives, misclassification_rate
from .errors import InvalidInputError
from .geometry import add_noise, generate_conic_family, generate_gear

NOISE_LEVELS = (1e-5, 1e-4, 1e-3, 1e-2)
NOISE_SEEDS = (0, 1, 2)


@dataclass
class BenchmarkRow:
    teeth: int
    segments: int
    t_assembly: float
    t_clustering: float
    t_total: float
    o_assembly: float | None = None
    o_clustering: float | None = None
    o_total: float | None = None


def _order(t_next, t_prev):
    if t_prev <= 0 or t_next <= 0:
        return None
    return math.log2(t_next / t_prev)


def run_benchmark(
    teeth_list=(4, 8, 16, 32, 64),
    repeats: int = 3,
    profile: CalibrationProfile | None = None,
    *,
    mode: str = "cubic_bezier",
    threads: int = 1,
    samples: int | None = None,
    min_time: float = 1.0,
    max_rounds: int = 50,
):
    """Best-of-``repeats`` phase timings of the full pipeline on growing gears.

    Sizes are timed in interleaved rounds so a slow stretch of the machine
    hits every size alike.  At least ``repeats`` rounds run, more until
    ``min_time`` seconds have been spent (at most ``max_rounds``); the minimum
    of each phase is kept.  Returns ``(rows, partitions)`` with the partitions
    of the last round, so callers can check that repeats do not change results.
    """
    teeth_list = [int(t) for t in teeth_list]
    if any(b <= a for a, b in zip(teeth_list, teeth_list[1:])):
        raise InvalidInputError("teeth list must be strictly increasing")
    if repeats < 1:
        raise InvalidInputError("repeats must be >= 1")
    profile = profile or calibrate()
    gears = [generate_gear(t, mode) for t in teeth_list]
    best = [None] * len(gears)
    parts = [None] * len(gears)
    spent, rounds = 0.0, 0
    while rounds < repeats or (spent < min_time and rounds < max_rounds):
        for i, gear in enumerate(gears):
            res = detect_primitives(gear, profile, "relative", threads=threads, samples=samples)
            t = res.timings
            cur = (t["assembly"], t["clustering"], t["total"])
            best[i] = cur if best[i] is None else tuple(min(a, b) for a, b in zip(best[i], cur))
            parts[i] = res
            spent += t["total"]
        rounds += 1
    rows = []
    for teeth, gear, times in zip(teeth_list, gears, best):
        row = BenchmarkRow(teeth, len(gear), *times)
        if rows:
            prev = rows[-1]
            row.o_assembly = _order(row.t_assembly, prev.t_assembly)
            row.o_clustering = _order(row.t_clustering, prev.t_clustering)
            row.o_total = _order(row.t_total, prev.t_total)
        rows.append(row)
    return rows, parts


def format_benchmark(rows) -> str:
    def cell(v, fmt):
        return "-" if v is None else format(v, fmt)

    head = f"{'teeth':>6} {'segments':>9} {'t_asm':>9} {'o_asm':>6} {'t_clu':>9} {'o_clu':>6} {'t_tot':>9} {'o_tot':>6}"
    lines = [head]
    for r in rows:
        lines.append(
            f"{r.teeth:>6} {r.segments:>9} {r.t_assembly:>9.4f} {cell(r.o_assembly, '.3f'):>6} "
            f"{r.t_clustering:>9.4f} {cell(r.o_clustering, '.3f'):>6} {r.t_total:>9.4f} {cell(r.o_total, '.3f'):>6}"
        )
    return "\n".join(lines)


def benchmark_rows_to_dicts(rows):
    return [asdict(r) for r in rows]


# --- random conics ----------------------------------------------------------


@dataclass
class ConicsReport:
    runs: int
    mean_rate: float
    failed_runs: int
    rates: list = field(default_factory=list)


def conics_rate(
    runs: int = 200,
    seed: int = 0,
    profile: CalibrationProfile | None = None,
    *,
    curves=(2, 6),
    segments=(2, 4),
    mode: str = "absolute",
) -> ConicsReport:
    """Mean misclassification over ``runs`` random line/conic families.

    The default profile is calibrated up to degree 2, the largest degree
    present in these datasets.
    """
    if runs < 1:
        raise InvalidInputError("runs must be >= 1")
    profile = profile or calibrate(m_cap=2, seed=seed)
    rng = np.random.default_rng(_subseed(seed, 31))
    rates = []
    for i in range(runs):
        L = int(rng.integers(curves[0], curves[1] + 1))
        ds = generate_conic_family(L, segments, _subseed(seed, 32, i))
        res = detect_primitives(ds, profile, mode)
        rates.append(misclassification_rate(res, ds.truth_labels))
    return ConicsReport(runs, float(np.mean(rates)), int(np.sum(np.array(rates) > 0)), rates)


# --- noisy gear -------------------------------------------------------------


@dataclass
class NoiseRow:
    sigma: float
    seed: int
    rate: float
    rate_override: float

    @property
    def correct(self) -> bool:
        return self.rate == 0.0

    @property
    def correct_override(self) -> bool:
        return self.rate_override == 0.0


def noise_profile(sigma: float, seed: int = 0, samples: int | None = None) -> CalibrationProfile:
    """Degree-2 profile trained on clouds carrying the same noise level."""
    return calibrate(m_cap=2, seed=seed, noise=sigma, samples=samples)


def noise_sweep(
    sigmas=NOISE_LEVELS,
    seeds=NOISE_SEEDS,
    *,
    teeth: int = 8,
    mode: str = "exact",
    calibration_seed: int = 0,
    samples: int | None = None,
    clusters_per_degree: dict | None = None,
):
    """Cluster a noisy gear with and without a known cluster count per degree."""
    gear = generate_gear(teeth, mode)
    samples = samples or default_samples(2, 2)
    # radial sides lie on `teeth` lines through the origin; arcs on 3 circles
    override = clusters_per_degree or {1: teeth, 2: 3}
    rows = []
    for sigma in sigmas:
        profile = noise_profile(sigma, calibration_seed, samples)
        for s in seeds:
            noisy = add_noise(gear, sigma, s, samples)
            plain = detect_primitives(noisy, profile, "relative", samples=samples)
            forced = detect_primitives(
                noisy, profile, "relative", samples=samples, clusters_per_degree=override
            )
            rows.append(
                NoiseRow(
                    sigma,
                    s,
                    misclassification_rate(plain, gear.truth_labels),
                    misclassification_rate(forced, gear.truth_labels),
                )
            )
    return rows


def format_noise(rows) -> str:
    lines = [f"{'sigma':>8} {'seed':>5} {'rate':>8} {'override':>9}"]
    for r in rows:
        lines.append(f"{r.sigma:>8.0e} {r.seed:>5} {r.rate:>8.4f} {r.rate_override:>9.4f}")
    return "\n".join(lines)
