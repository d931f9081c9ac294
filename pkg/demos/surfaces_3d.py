"""Cluster split planes and spheres in 3D.

Usage: python3 demos/surfaces_3d.py [output_dir]
"""
import sys
from pathlib import Path

from primdetect.calibration import calibrate
from primdetect.clustering import detect_primitives, misclassification_rate
from primdetect.geometry import generate_surface_primitives
from primdetect.plotting import save_svg


def main(out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    ds = generate_surface_primitives(["plane"] * 3 + ["sphere"] * 2, seed=1, splits=(2, 2))
    profile = calibrate(m_cap=2, seed=0, ambient_dim=3)
    res = detect_primitives(ds, profile, "relative")
    print(f"{len(ds)} sub-patches -> {res.n_clusters} clusters")
    for m, groups in res.per_degree.items():
        print(f"degree {m}: {groups}")
    print(f"misclassification rate: {misclassification_rate(res, ds.truth_labels)}")
    save_svg(ds, out_dir / "surfaces.svg", res.assignment)
    print(f"wrote {out_dir / 'surfaces.svg'}")


if __name__ == "__main__":
    main(Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output"))
