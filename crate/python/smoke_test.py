#!/usr/bin/env python3
"""Smoke test for the opticnot_py extension module.

Builds the extension with cargo (release), copies the shared library next to
this script under the importable name, and exercises the main entry points.

Usage: python3 python/smoke_test.py [--skip-build]
"""

import argparse
import pathlib
import shutil
import subprocess
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build_and_stage(skip_build: bool) -> pathlib.Path:
    if not skip_build:
        subprocess.run(
            ["cargo", "build", "-p", "opticnot-python", "--release"],
            cwd=ROOT,
            check=True,
        )
    built = ROOT / "target" / "release" / "libopticnot_py.so"
    if not built.exists():  # macOS fallback
        built = ROOT / "target" / "release" / "libopticnot_py.dylib"
    staged = pathlib.Path(__file__).resolve().parent / "opticnot_py.so"
    shutil.copyfile(built, staged)
    return staged


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"expected {b}, got {a} (tol {tol})"


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--skip-build", action="store_true")
    args = parser.parse_args()

    staged = build_and_stage(args.skip_build)
    sys.path.insert(0, str(staged.parent))
    import opticnot_py as on

    # herald probability is exactly 1/4 for ideal inputs
    approx(on.herald_probability((1, 0), (0, 1)), 0.25)
    s = 2 ** -0.5
    approx(on.herald_probability((s, s), (1, 0)), 0.25)

    # ideal truth table is the CNOT permutation
    table = on.truth_table()
    expected_cols = [0, 1, 3, 2]
    for i, col in enumerate(expected_cols):
        approx(table[i][col], 1.0)
    approx(on.truth_table_overlap(table), 1.0)

    # |D,H> input produces the four Bell states across the herald branches
    branches = on.run_gate((s, s), (1, 0))
    assert [b["branch"] for b in branches] == ["DH", "DV", "AH", "AV"]
    targets = ["phi_plus", "psi_plus", "phi_minus", "psi_minus"]
    for b, target in zip(branches, targets):
        approx(b["probability"], 1 / 16)
        approx(on.fidelity_to_bell(b["density_matrix"], target), 1.0)
        approx(on.fidelity_to_bell(b["density_matrix_corrected"], "phi_plus"), 1.0)

    # two-photon interference visibility equals the squared overlap
    for x in (0.0, 0.5, 0.88, 1.0):
        approx(on.hom_visibility(x), x)

    # fiber-to-waveguide coupling figures
    waveguide = on.GaussianMode.from_mfd(8.0, 11.0)
    fiber = on.GaussianMode.from_mfd(5.0, 5.0)
    expanded = on.GaussianMode.from_mfd(10.0, 10.0)
    eta_fiber = on.overlap_efficiency(fiber, waveguide)
    eta_expanded = on.overlap_efficiency(expanded, waveguide)
    approx(eta_fiber, 0.677, 0.001)
    assert eta_expanded > 0.96
    ratio = on.improvement_ratio(eta_expanded, eta_fiber)
    assert 0.41 <= ratio <= 0.44, ratio

    # splitter design: 2:1 rate ratio admits an exact length
    d = on.design_pbs(2.0, 1.0, 10.0)
    assert d["leakage"] < 1e-12, d
    assert on.extinction_over_bandwidth(2.0, 1.0, d["length_mm"], 0.0) >= 1e6

    # calibrated noise degrades the truth table into the measured range
    noisy = on.truth_table(on.NoiseConfig.calibrated())
    overlap = on.truth_table_overlap(noisy)
    assert 0.78 <= overlap <= 0.90, overlap

    # MLE on uniform counts reconstructs the maximally mixed state
    rho = on.mle_reconstruct([[250.0, 250.0, 250.0, 250.0]] * 9)
    trace = sum(rho[i][i][0] for i in range(4))
    approx(trace, 1.0, 1e-6)
    approx(on.fidelity_to_bell(rho, "phi_plus"), 0.25, 1e-3)

    # compensation never reduces fidelity
    branch_rho = branches[0]["density_matrix"]
    _, _, fid = on.compensate_local_unitaries(branch_rho, "phi_plus")
    assert fid >= on.fidelity_to_bell(branch_rho, "phi_plus") - 1e-12

    # end-to-end noisy experiment summary
    summary = on.truth_table_experiment(mc_samples=50, seed=11)
    assert 0.78 <= summary["analytic_overlap"] <= 0.90
    assert summary["overlap_std"] > 0.0

    print("smoke test passed")


if __name__ == "__main__":
    main()
