"""JSON files for datasets, calibration profiles, implicit results and clusterings.

Floats are written with 17 significant digits so every value round-trips
exactly.
"""
from __future__ import annotations

import json
import math
import re
from pathlib import Path

import numpy as np

from .calibration import CalibrationProfile
from .clustering import ClusterPartition
from .errors import InvalidInputError
from .geometry import CloudDataset, CompositeCurve, LabeledDataset, Patch, PointCloud
from .implicitization import ImplicitResult, build_basis

_FLOAT_TOKEN = re.compile(r'"@f:([^"]*)@"')


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = f"{x:.17g}"
    # keep floats recognisable as floats when read back
    if not any(c in s for c in ".eEn"):
        s += ".0"
    return s


def _tokenize(obj):
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        return f"@f:{_fmt(float(obj))}@"
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _tokenize(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _tokenize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tokenize(v) for v in obj]
    return obj


def dumps(obj, indent: int | None = 1) -> str:
    """``json.dumps`` with every float printed as ``%.17g``."""
    text = json.dumps(_tokenize(obj), indent=indent)
    return _FLOAT_TOKEN.sub(lambda m: m.group(1), text)


def write_json(obj, path, indent: int | None = 1) -> None:
    Path(path).write_text(dumps(obj, indent) + "\n", encoding="utf-8")


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not valid JSON ({exc})") from exc


# --- datasets ---------------------------------------------------------------


def _patch_to_dict(patch) -> dict:
    if isinstance(patch, CompositeCurve):
        pieces = [_patch_to_dict(p) for p in patch.pieces]
        return {
            "param_dim": 1,
            "degree": list(patch.degree),
            "domain": [list(d) for d in patch.domain],
            "control_points": [pt for p in pieces for pt in p["control_points"]],
            "pieces": pieces,
        }
    n = patch.ambient_dim
    out = {
        "param_dim": patch.param_dim,
        "degree": list(patch.degree),
        "domain": [list(d) for d in patch.domain],
        "control_points": patch.control_points.reshape(-1, n),
    }
    if patch.weights is not None:
        out["weights"] = patch.weights.reshape(-1)
    return out


def _patch_from_dict(d: dict, ambient_dim: int):
    if "pieces" in d:
        return CompositeCurve(tuple(_patch_from_dict(p, ambient_dim) for p in d["pieces"]))
    try:
        degree = [int(k) for k in d["degree"]]
        shape = [k + 1 for k in degree]
        cp = np.asarray(d["control_points"], dtype=float)
        if cp.shape != (int(np.prod(shape)), ambient_dim):
            raise InvalidInputError(f"control_points shape {cp.shape} does not match degree {degree}")
        if int(d.get("param_dim", len(degree))) != len(degree):
            raise InvalidInputError("param_dim does not match the length of degree")
        weights = d.get("weights")
        if weights is not None:
            weights = np.asarray(weights, dtype=float).reshape(shape)
        return Patch(cp.reshape(*shape, ambient_dim), weights, d.get("domain"))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed patch entry: {exc}") from exc


def dataset_to_dict(dataset) -> dict:
    out: dict = {"ambient_dim": dataset.ambient_dim}
    if isinstance(dataset, CloudDataset):
        out["clouds"] = [c.points for c in dataset.clouds]
    else:
        out["patches"] = [_patch_to_dict(p) for p in dataset.patches]
    if dataset.truth_labels is not None:
        out["truth_labels"] = list(dataset.truth_labels)
    if dataset.truth_degrees is not None:
        out["truth_degrees"] = list(dataset.truth_degrees)
    return out


def dataset_from_dict(d: dict):
    if not isinstance(d, dict) or "ambient_dim" not in d:
        raise InvalidInputError("dataset JSON needs an 'ambient_dim' field")
    n = int(d["ambient_dim"])
    labels, degrees = d.get("truth_labels"), d.get("truth_degrees")
    if "clouds" in d:
        clouds = [PointCloud(np.asarray(c, dtype=float).reshape(-1, n)) for c in d["clouds"]]
        return CloudDataset(clouds, labels, degrees)
    if "patches" not in d:
        raise InvalidInputError("dataset JSON needs 'patches' or 'clouds'")
    return LabeledDataset([_patch_from_dict(p, n) for p in d["patches"]], labels, degrees)


def save_dataset(dataset, path) -> None:
    write_json(dataset_to_dict(dataset), path, indent=None)


def load_dataset(path):
    return dataset_from_dict(read_json(path))


# --- calibration profiles ---------------------------------------------------


def profile_to_dict(profile: CalibrationProfile) -> dict:
    return {
        "m_cap": profile.m_cap,
        "xi": {str(m): float(v) for m, v in sorted(profile.xi.items())},
        "eta": float(profile.eta),
        "lambda": float(profile.lambda_),
        "seed": profile.seed,
        "Q1": profile.Q1,
        "Q2": profile.Q2,
        "P3": profile.P3,
        "ambient_dim": profile.ambient_dim,
        "noise": float(profile.noise),
    }


def profile_from_dict(d: dict) -> CalibrationProfile:
    try:
        return CalibrationProfile(
            xi={int(k): float(v) for k, v in d["xi"].items()},
            eta=float(d["eta"]),
            m_cap=int(d["m_cap"]),
            lambda_=float(d.get("lambda", 1e-10)),
            Q1=int(d.get("Q1", 200)),
            Q2=int(d.get("Q2", 200)),
            P3=int(d.get("P3", 50)),
            seed=int(d.get("seed", 0)),
            ambient_dim=int(d.get("ambient_dim", 2)),
            noise=float(d.get("noise", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed profile JSON: {exc}") from exc


def save_profile(profile, path) -> None:
    write_json(profile_to_dict(profile), path)


def load_profile(path) -> CalibrationProfile:
    return profile_from_dict(read_json(path))


# --- implicit results and clusterings ---------------------------------------


def implicit_to_dict(result: ImplicitResult) -> dict:
    return {
        "degree": result.degree,
        "ambient_dim": result.basis.ambient_dim,
        "basis_order": "graded_lex",
        "exponents": [list(e) for e in result.basis.exponents],
        "coefficients": result.coefficients,
        "sigma_min": float(result.sigma_min),
    }


def implicit_from_dict(d: dict) -> ImplicitResult:
    if d.get("basis_order", "graded_lex") != "graded_lex":
        raise InvalidInputError(f"unsupported basis order {d['basis_order']!r}")
    basis = build_basis(int(d.get("ambient_dim", 2)), int(d["degree"]))
    return ImplicitResult(int(d["degree"]), np.asarray(d["coefficients"], float), float(d["sigma_min"]), basis)


def result_to_dict(result: ClusterPartition, truth_labels=None) -> dict:
    from .clustering import misclassification_rate

    out = {
        "mode": result.mode,
        "assignment": result.assignment,
        "clusters": [list(c) for c in result.clusters],
        "degrees": {str(i): m for i, m in sorted(result.degrees.items())},
        "rejected": list(result.rejected),
        "merge_trace": {
            str(m): [{"k": s.k, "merged": list(s.merged), "error": s.error} for s in trace.steps]
            for m, trace in result.traces.items()
        },
        "accepted_merges": {str(m): trace.accepted for m, trace in result.traces.items()},
        "timings": dict(result.timings),
    }
    if truth_labels is not None:
        out["misclassification_rate"] = misclassification_rate(result, truth_labels)
    return out


def save_result(result, path, truth_labels=None) -> None:
    write_json(result_to_dict(result, truth_labels), path)
