import json
import subprocess
import sys

import numpy as np
import pytest

from oracles import gram_sigma_min, monomials
from primdetect import serialization as io
from primdetect.cli import main, parse_clusters_per_degree
from primdetect.geometry import LabeledDataset, circle_arc, generate_bezier_family, line_segment, sample_patch


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def profile_file(workdir, profile):
    path = workdir / "profile.json"
    io.save_profile(profile, path)
    return path


@pytest.fixture(scope="module")
def conic_profile_file(workdir, conic_profile):
    path = workdir / "profile2.json"
    io.save_profile(conic_profile, path)
    return path


@pytest.fixture(scope="module")
def gear_file(workdir):
    path = workdir / "gear.json"
    assert main(["generate", "gear", "--teeth", "8", "--mode", "exact", "-o", str(path)]) == 0
    return path


def run_json(capsys, argv):
    capsys.readouterr()
    code = main(argv + ["--json"])
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 else None)


class TestGenerate:
    def test_gear_sizes(self, gear_file, workdir):
        assert len(io.load_dataset(gear_file)) == 33
        path = workdir / "g3.json"
        assert main(["generate", "gear", "--teeth", "3", "-o", str(path)]) == 0
        assert len(io.load_dataset(path)) == 13

    def test_bad_teeth(self, workdir, capsys):
        assert main(["generate", "gear", "--teeth", "1", "-o", str(workdir / "x.json")]) == 2
        assert "error" in capsys.readouterr().err

    def test_single_conic(self, workdir):
        path = workdir / "c1.json"
        assert main(["generate", "conics", "--curves", "1", "--seed", "0", "-o", str(path)]) == 0
        assert len(set(io.load_dataset(path).truth_labels)) == 1

    def test_quadrics_and_noise(self, workdir):
        path = workdir / "q.json"
        assert main(["generate", "quadrics", "--kinds", "plane,sphere", "--count", "2", "-o", str(path)]) == 0
        assert io.load_dataset(path).ambient_dim == 3
        path = workdir / "noisy.json"
        assert main(["generate", "gear", "--noise", "1e-3", "--samples", "9", "-o", str(path)]) == 0
        assert len(io.load_dataset(path).clouds[0]) == 9

    def test_deterministic(self, workdir):
        a, b = workdir / "a.json", workdir / "b.json"
        for p in (a, b):
            assert main(["generate", "conics", "--curves", "3", "--seed", "5", "-o", str(p)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestCalibrate:
    def test_rerun_identical(self, workdir):
        args = ["calibrate", "--m-cap", "2", "--Q1", "20", "--Q2", "20", "--P3", "10", "--seed", "3"]
        a, b = workdir / "p1.json", workdir / "p2.json"
        assert main(args + ["-o", str(a)]) == 0
        assert main(args + ["-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        d = io.read_json(a)
        assert sorted(d["xi"]) == ["1", "2"] and d["eta"] > 0
        assert all(v > 0 for v in d["xi"].values())

    def test_unsupported_degree(self, workdir):
        assert main(["calibrate", "--m-cap", "9", "-o", str(workdir / "p.json")]) == 2


class TestCluster:
    def test_exact_gear(self, gear_file, profile_file, workdir, capsys):
        out, svg = workdir / "r.json", workdir / "r.svg"
        code, payload = run_json(
            capsys, ["cluster", str(gear_file), "--profile", str(profile_file), "-o", str(out), "--svg", str(svg)]
        )
        assert code == 0 and payload["misclassification_rate"] == 0.0
        assert io.read_json(out)["assignment"] == payload["assignment"]
        assert svg.read_text().count("<path") == 33

    def test_thread_count_irrelevant(self, gear_file, profile_file, capsys):
        base = ["cluster", str(gear_file), "--profile", str(profile_file)]
        _, one = run_json(capsys, base + ["--threads", "1"])
        _, four = run_json(capsys, base + ["--threads", "4", "--method", "nn_chain"])
        assert one["assignment"] == four["assignment"]

    def test_override(self, gear_file, profile_file, capsys):
        code, payload = run_json(
            capsys,
            ["cluster", str(gear_file), "--profile", str(profile_file), "--clusters-per-degree", "1:1,2:1"],
        )
        assert code == 0 and len(payload["clusters"]) == 2

    def test_low_cap_profile_reports_rejects(self, workdir, conic_profile_file, capsys):
        path = workdir / "cubic.json"
        io.save_dataset(generate_bezier_family(3, 2, (2, 2), seed=1), path)
        capsys.readouterr()
        assert main(["cluster", str(path), "--profile", str(conic_profile_file)]) == 0
        assert "rejected" in capsys.readouterr().out
        _, payload = run_json(capsys, ["cluster", str(path), "--profile", str(conic_profile_file)])
        assert payload["rejected"] == [0, 1, 2, 3]

    def test_noisy_gear_misclassified(self, workdir, profile_file, capsys):
        path = workdir / "noisy2.json"
        assert main(["generate", "gear", "--noise", "1e-2", "--seed", "0", "-o", str(path)]) == 0
        code, payload = run_json(capsys, ["cluster", str(path), "--profile", str(profile_file)])
        assert code == 0 and payload["misclassification_rate"] > 0

    def test_missing_file(self, profile_file):
        assert main(["cluster", "/nonexistent.json", "--profile", str(profile_file)]) == 2

    def test_malformed_dataset(self, workdir, profile_file):
        path = workdir / "bad.json"
        path.write_text('{"ambient_dim": 2, "patches": [{"degree": [2]}]}')
        assert main(["cluster", str(path), "--profile", str(profile_file)]) == 2


@pytest.fixture(scope="module")
def shapes(workdir):
    path = workdir / "shapes.json"
    io.save_dataset(LabeledDataset([line_segment((0, 0), (0.6, 0.8)), circle_arc((0, 0), 1.0, 0.2, 2.0)]), path)
    return path


class TestImplicitize:
    def test_line(self, shapes, capsys):
        code, d = run_json(capsys, ["implicitize", str(shapes), "--patch", "0", "--degree", "1"])
        assert code == 0 and d["sigma_min"] < 1e-14
        np.testing.assert_allclose(d["coefficients"], [0, 0.8, -0.6], atol=1e-14)

    def test_circle(self, shapes, capsys):
        code, d = run_json(capsys, ["implicitize", str(shapes), "--patch", "1", "--degree", "2"])
        np.testing.assert_allclose(d["coefficients"], np.array([1, 0, 0, -1, 0, -1]) / np.sqrt(3), atol=1e-12)
        assert d["exponents"][3:] == [[2, 0], [1, 1], [0, 2]]

    def test_circle_degree_one_matches_gram(self, shapes, capsys):
        _, d = run_json(capsys, ["implicitize", str(shapes), "--patch", "1", "--degree", "1", "--samples", "17"])
        pts = sample_patch(circle_arc((0, 0), 1.0, 0.2, 2.0), 17).points
        assert d["sigma_min"] == pytest.approx(gram_sigma_min(monomials(pts, 1)), rel=1e-9)
        capsys.readouterr()
        main(["implicitize", str(shapes), "--patch", "1", "--degree", "1", "--samples", "17"])
        assert capsys.readouterr().out.startswith("sigma_min ")

    def test_bad_index(self, shapes):
        assert main(["implicitize", str(shapes), "--patch", "7", "--degree", "1"]) == 2


class TestBenchmarkAndExperiment:
    def test_segment_counts(self, profile_file, workdir, capsys):
        out = workdir / "bench.json"
        code, d = run_json(
            capsys,
            ["benchmark", "--teeth", "4,8,16,32", "--repeats", "1", "--profile", str(profile_file), "-o", str(out)],
        )
        assert code == 0
        assert [r["segments"] for r in d["rows"]] == [17, 33, 65, 129]
        assert d["rows"][0]["o_total"] is None and d["rows"][1]["o_total"] is not None
        assert io.read_json(out) == d

    def test_bad_teeth_list(self):
        assert main(["benchmark", "--teeth", "8,4"]) == 2

    def test_conics_rate_small(self, capsys):
        code, d = run_json(capsys, ["experiment", "conics_rate", "--runs", "3"])
        assert code == 0 and d["runs"] == 3 and 0 <= d["mean_rate"] <= 1


class TestPlotAndExitCodes:
    def test_plot_round_trip(self, gear_file, profile_file, workdir):
        res = workdir / "res.json"
        assert main(["cluster", str(gear_file), "--profile", str(profile_file), "-o", str(res)]) == 0
        svg = workdir / "plot.svg"
        assert main(["plot", str(gear_file), "--result", str(res), "-o", str(svg)]) == 0
        text = svg.read_text()
        assert text.count("<path") == 33 and "#9a9a9a" not in text

    def test_plot_mismatched_result(self, gear_file, workdir):
        res = workdir / "short.json"
        res.write_text('{"assignment": [0, 1]}')
        assert main(["plot", str(gear_file), "--result", str(res), "-o", str(workdir / "p.svg")]) == 2

    def test_usage_errors(self):
        assert main([]) == 2
        assert main(["frobnicate"]) == 2
        assert main(["cluster"]) == 2
        assert main(["--help"]) == 0

    def test_parse_clusters_per_degree(self):
        assert parse_clusters_per_degree("1:8, 2:3") == {1: 8, 2: 3}

    def test_module_entry_point(self, gear_file, profile_file):
        proc = subprocess.run(
            [sys.executable, "-m", "primdetect", "cluster", str(gear_file), "--profile", str(profile_file)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0 and "misclassification rate 0.0000" in proc.stdout
