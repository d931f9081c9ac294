"""Command-line interface: ``primdetect <command> [options]``.

Exit codes: 0 success, 1 internal or numerical failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import os
import sys
import warnings

import numpy as np

from . import serialization as io
from .calibration import calibrate
from .clustering import DEFAULT_LAMBDA, default_samples, detect_primitives, misclassification_rate
from .errors import InvalidInputError, PrimDetectError, UnsupportedDegreeError
from .experiments import (
    benchmark_rows_to_dicts,
    conics_rate,
    format_benchmark,
    format_noise,
    noise_sweep,
    run_benchmark,
)
from .geometry import (
    CONIC_TYPES,
    SURFACE_KINDS,
    CloudDataset,
    add_noise,
    generate_conic_family,
    generate_gear,
    generate_quadric_surfaces,
    sample_patch,
)
from .implicitization import approximate_implicitize
from .plotting import save_svg

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _int_list(text: str):
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def parse_clusters_per_degree(text: str) -> dict:
    """``"1:8,2:3"`` -> ``{1: 8, 2: 3}``."""
    out = {}
    for item in text.replace(" ", "").split(","):
        if not item:
            continue
        try:
            m, k = item.split(":")
            out[int(m)] = int(k)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected 'degree:count' pairs, got {item!r}") from None
        if out[int(m)] < 1:
            raise argparse.ArgumentTypeError("cluster counts must be >= 1")
    return out


def _global_options(parser, suppress: bool, skip=()):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = parser.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=default(0), help="random seed (default 0)")
    g.add_argument("--threads", type=int, default=default(None), help="worker threads (default: all cores)")
    g.add_argument("--samples", type=int, default=default(None), help="samples per parameter direction")
    g.add_argument("--lambda", dest="lambda_", type=float, default=default(DEFAULT_LAMBDA),
                   help="centre-of-mass weight (default 1e-10)")
    g.add_argument("--m-cap", type=int, default=default(4), help="largest implicit degree (default 4)")
    if "mode" not in skip:
        g.add_argument("--mode", choices=("absolute", "relative"), default=default("relative"),
                       help="stopping rule (default relative)")
    g.add_argument("--eta", type=float, default=default(None), help="absolute tolerance, overrides the profile")
    g.add_argument("--clusters-per-degree", type=parse_clusters_per_degree, default=default(None),
                   metavar="M:K,...", help="force K clusters in degree class M")
    g.add_argument("--json", action="store_true", default=default(False), help="print JSON instead of text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="primdetect", description=__doc__.splitlines()[0])
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, skip=()):
        p = sub.add_parser(name, help=help_)
        _global_options(p, suppress=True, skip=skip)
        return p

    # `generate gear --mode` picks the arc construction, not a stopping rule
    p = add("generate", "write a synthetic dataset", skip=("mode",))
    p.add_argument("kind", choices=("gear", "conics", "quadrics"))
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--teeth", type=int, default=8)
    p.add_argument("--mode", dest="gear_mode", choices=("exact", "cubic_bezier"), default="exact",
                   help="gear arcs: rational (exact) or cubic approximations")
    p.add_argument("--curves", type=int, default=4)
    p.add_argument("--segments", type=_int_list, default=[2, 4], metavar="LO,HI")
    p.add_argument("--types", default=",".join(CONIC_TYPES))
    p.add_argument("--kinds", default=",".join(SURFACE_KINDS))
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--splits", type=_int_list, default=[2, 2], metavar="A,B")
    p.add_argument("--noise", type=float, default=0.0, help="sample and perturb with N(0, noise^2)")

    p = add("calibrate", "compute xi and eta thresholds")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--Q1", type=int, default=200)
    p.add_argument("--Q2", type=int, default=200)
    p.add_argument("--P3", type=int, default=50)
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p.add_argument("--noise", type=float, default=0.0, help="train on clouds with this noise level")

    p = add("cluster", "detect primitives in a dataset")
    p.add_argument("dataset")
    p.add_argument("--profile", help="calibration profile JSON (calibrated on the fly if omitted)")
    p.add_argument("-o", "--out")
    p.add_argument("--svg", help="also write a coloured SVG")
    p.add_argument("--method", choices=("naive", "nn_chain"), default="naive")

    p = add("implicitize", "fit an implicit polynomial to one patch")
    p.add_argument("dataset")
    p.add_argument("--patch", type=int, default=0)
    p.add_argument("--degree", type=int, required=True)

    p = add("benchmark", "time the pipeline on gears of growing size")
    p.add_argument("--teeth", type=_int_list, default=[4, 8, 16, 32, 64])
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--gear-mode", dest="gear_mode", choices=("exact", "cubic_bezier"), default="cubic_bezier")
    p.add_argument("--profile")
    p.add_argument("-o", "--out")

    p = add("experiment", "run a reference experiment", skip=("mode",))
    p.add_argument("name", choices=("conics_rate", "noise_sweep"))
    p.add_argument("--mode", choices=("absolute", "relative"), default="absolute",
                   help="stopping rule for conics_rate (default absolute)")
    p.add_argument("--runs", type=int, default=200)
    p.add_argument("-o", "--out")

    p = add("plot", "render a dataset as SVG, coloured by a clustering result")
    p.add_argument("dataset")
    p.add_argument("--result")
    p.add_argument("-o", "--out", required=True)
    return parser


# --- commands ---------------------------------------------------------------


def _emit(args, payload: dict, text: str):
    if args.json:
        print(io.dumps(payload))
    elif text:
        print(text)


def cmd_generate(args):
    if args.kind == "gear":
        ds = generate_gear(args.teeth, args.gear_mode)
    elif args.kind == "conics":
        if len(args.segments) != 2:
            raise UsageError("--segments takes LO,HI")
        types = [t for t in args.types.split(",") if t]
        ds = generate_conic_family(args.curves, tuple(args.segments), args.seed, types=types)
    else:
        if len(args.splits) != 2:
            raise UsageError("--splits takes A,B")
        kinds = [k for k in args.kinds.split(",") if k]
        ds = generate_quadric_surfaces(kinds, args.count, args.seed, tuple(args.splits))
    if args.noise:
        samples = args.samples or default_samples(ds.ambient_dim, args.m_cap)
        ds = add_noise(ds, args.noise, args.seed, samples)
    io.save_dataset(ds, args.out)
    _emit(args, {"out": args.out, "patches": len(ds)}, f"wrote {len(ds)} patches to {args.out}")


def cmd_calibrate(args):
    prof = calibrate(
        args.m_cap,
        args.Q1,
        args.Q2,
        args.P3,
        args.seed,
        ambient_dim=args.dim,
        lambda_=args.lambda_,
        samples=args.samples,
        noise=args.noise,
    )
    io.save_profile(prof, args.out)
    lines = [f"m_cap {prof.m_cap}"] + [f"xi[{m}] {v:.6e}" for m, v in prof.xi.items()] + [f"eta {prof.eta:.6e}"]
    _emit(args, io.profile_to_dict(prof), "\n".join(lines))


def _load_profile(args, ambient_dim):
    if getattr(args, "profile", None):
        return io.load_profile(args.profile)
    return calibrate(args.m_cap, seed=args.seed, ambient_dim=ambient_dim, lambda_=args.lambda_)


def cmd_cluster(args):
    ds = io.load_dataset(args.dataset)
    if len(ds) == 0:
        raise UsageError("dataset has no patches")
    prof = _load_profile(args, ds.ambient_dim)
    res = detect_primitives(
        ds,
        prof,
        args.mode,
        lambda_=args.lambda_,
        eta=args.eta,
        clusters_per_degree=args.clusters_per_degree,
        samples=args.samples,
        threads=args.threads or os.cpu_count() or 1,
        method=args.method,
    )
    payload = io.result_to_dict(res, ds.truth_labels)
    if args.out:
        io.write_json(payload, args.out)
    if args.svg:
        save_svg(ds, args.svg, res.assignment)
    lines = [f"{len(ds)} patches, {res.n_clusters} clusters ({args.mode} mode)"]
    for m, groups in res.per_degree.items():
        lines.append(f"degree {m}: {len(groups)} cluster(s) " + " ".join(str(g) for g in groups))
    if res.rejected:
        lines.append(f"rejected (degree > {prof.m_cap}): {res.rejected}")
    if ds.truth_labels is not None:
        lines.append(f"misclassification rate {misclassification_rate(res, ds.truth_labels):.4f}")
    _emit(args, payload, "\n".join(lines))


def cmd_implicitize(args):
    ds = io.load_dataset(args.dataset)
    if not 0 <= args.patch < len(ds):
        raise UsageError(f"patch index {args.patch} out of range (dataset has {len(ds)})")
    if isinstance(ds, CloudDataset):
        cloud = ds.clouds[args.patch]
    else:
        samples = args.samples or default_samples(ds.ambient_dim, max(args.degree, 2))
        cloud = sample_patch(ds.patches[args.patch], samples)
    res = approximate_implicitize(cloud, args.degree)
    terms = [f"{c:+.12g}*{_monomial(e)}" for c, e in zip(res.coefficients, res.basis.exponents)]
    _emit(args, io.implicit_to_dict(res), f"sigma_min {res.sigma_min:.6e}\nq = " + " ".join(terms))


def _monomial(exps):
    names = "xyz"
    parts = [names[i] + (f"^{k}" if k > 1 else "") for i, k in enumerate(exps) if k]
    return "*".join(parts) or "1"


def cmd_benchmark(args):
    teeth = args.teeth
    if any(t < 2 for t in teeth) or any(b <= a for a, b in zip(teeth, teeth[1:])):
        raise UsageError("--teeth must be an increasing list of integers >= 2")
    prof = io.load_profile(args.profile) if args.profile else calibrate(args.m_cap, seed=args.seed)
    rows, _ = run_benchmark(
        teeth, args.repeats, prof, mode=args.gear_mode, threads=args.threads or 1, samples=args.samples
    )
    payload = {"rows": benchmark_rows_to_dicts(rows)}
    if args.out:
        io.write_json(payload, args.out)
    _emit(args, payload, format_benchmark(rows))


def cmd_experiment(args):
    if args.name == "conics_rate":
        rep = conics_rate(args.runs, args.seed, mode=args.mode)
        payload = {"runs": rep.runs, "mean_rate": rep.mean_rate, "failed_runs": rep.failed_runs}
        text = f"runs {rep.runs}  mean misclassification {rep.mean_rate:.4f}  runs with errors {rep.failed_runs}"
    else:
        rows = noise_sweep(seeds=tuple(args.seed + k for k in range(3)), samples=args.samples)
        payload = {
            "rows": [
                {"sigma": r.sigma, "seed": r.seed, "rate": r.rate, "rate_override": r.rate_override}
                for r in rows
            ]
        }
        text = format_noise(rows)
    if args.out:
        io.write_json(payload, args.out)
    _emit(args, payload, text)


def cmd_plot(args):
    ds = io.load_dataset(args.dataset)
    assignment = None
    if args.result:
        res = io.read_json(args.result)
        assignment = np.asarray(res.get("assignment", []), dtype=int)
        if assignment.shape != (len(ds),):
            raise UsageError("result does not match the dataset's patch count")
    save_svg(ds, args.out, assignment)
    _emit(args, {"out": args.out, "paths": len(ds)}, f"wrote {args.out}")


COMMANDS = {
    "generate": cmd_generate,
    "calibrate": cmd_calibrate,
    "cluster": cmd_cluster,
    "implicitize": cmd_implicitize,
    "benchmark": cmd_benchmark,
    "experiment": cmd_experiment,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            COMMANDS[args.command](args)
    except (UsageError, InvalidInputError, UnsupportedDegreeError, FileNotFoundError) as exc:
        print(f"primdetect {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PrimDetectError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"primdetect {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as exc:  # noqa: BLE001 - last-resort guard for the exit-code contract
        print(f"primdetect {args.command}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
