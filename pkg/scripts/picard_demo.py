"""Picard iterations for the small-contrast and small-core regimes: iteration
counts against the contrast budget f0 and the relaxation factor.

Writes ``<out>/picard_small_contrast.csv``.
"""

import argparse
from pathlib import Path

import numpy as np

from gptcloak.cli import csv_text
from gptcloak.solver import FixedCore, SolverConfig, picard_small_contrast, picard_small_core, solve_vanishing
from gptcloak.structure import LayerStructure

RADII = (2.0, 1.75, 1.5, 1.25, 1.0)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results/picard")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    s = LayerStructure(2, RADII)
    rows = []
    for f0 in (0.005, 0.01, 0.015, 0.02, 0.03):
        for omega in (1.0, 0.8, 0.6, 0.4):
            r = picard_small_contrast(s, f0, SolverConfig(picard_relaxation=omega, max_iters=300))
            rows.append([f0, omega, r.status, r.n_iterations, abs(float(np.sum(r.eta)) - f0), r.max_residual])
            print(f"f0 = {f0:<6} omega = {omega:<4} {r.status:<20} {r.n_iterations:4d} iterations")
    (out / "picard_small_contrast.csv").write_text(
        csv_text(["f0", "relaxation", "status", "iterations", "sum_error", "max_residual"], rows)
    )
    small = LayerStructure(2, RADII[:-1] + (0.25,))
    p = picard_small_core(small, -1.0)
    n = solve_vanishing(small, FixedCore(eta=-1.0))
    print(f"small core: {p.status} in {p.n_iterations} iterations, |eta - eta_newton| = {np.max(np.abs(p.eta - n.eta)):.1e}")


if __name__ == "__main__":
    main()
