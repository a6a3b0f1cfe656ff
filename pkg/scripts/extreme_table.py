"""Thin-coating design on proportional radii: solved contrasts and conductivities
against a reference table and the leading-order formula, plus a delta sweep of
the deviation from that formula with fitted exponents.

Writes ``<out>/extreme_table.csv`` and ``<out>/extreme_deviation.csv``.
"""

import argparse
from pathlib import Path

import numpy as np

from gptcloak.cli import csv_text
from gptcloak.proportional import extreme_asymptotic
from gptcloak.solver import continuation_solve
from gptcloak.structure import LayerStructure, proportional_radii

REFERENCE_ETA = [-0.4485, 0.9215, -0.9844, 0.9944, -0.9975, 0.9989, -0.9996, 0.9999]
REFERENCE_SIGMA = [0.3436, 8.4117, 0.0661, 23.3907, 0.0288, 52.6041, 0.0112, 188.4053]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results/extreme")
    parser.add_argument("--coatings", type=int, default=8)
    parser.add_argument("--delta", type=float, default=0.01)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    N, d = args.coatings, args.delta

    s = LayerStructure(2, proportional_radii(1.0, 1.0 + d, N))
    report = continuation_solve(s, -1.0)
    asym = np.asarray(extreme_asymptotic(N, d))
    rows = []
    for k in range(N):
        ref_eta = REFERENCE_ETA[k] if N == 8 else None
        ref_sigma = REFERENCE_SIGMA[k] if N == 8 else None
        rows.append([k + 1, report.eta[k], asym[k], ref_eta, report.sigma[k + 1], ref_sigma])
    (out / "extreme_table.csv").write_text(
        csv_text(["k", "eta", "eta_asymptotic", "eta_reference", "sigma", "sigma_reference"], rows)
    )
    print(f"N = {N}, delta = {d}: {report.status}, backward error {report.cross_check.get('backward', float('nan')):.1e}")
    for row in rows:
        print("  " + "  ".join("-" if v is None else f"{v:.6g}" for v in row))

    deltas = [0.04, 0.02, 0.01, 0.005]
    dev = []
    for delta in deltas:
        sd = LayerStructure(2, proportional_radii(1.0, 1.0 + delta, N))
        rd = continuation_solve(sd, -1.0)
        dev.append(np.abs(rd.eta[:N] - np.asarray(extreme_asymptotic(N, delta))) if rd.converged else np.full(N, np.nan))
        print(f"delta = {delta}: {rd.status}")
    dev = np.array(dev)
    (out / "extreme_deviation.csv").write_text(
        csv_text(["delta"] + [f"dev_eta_{k}" for k in range(1, N + 1)], [[dl, *row] for dl, row in zip(deltas, dev)])
    )
    ok = np.all(np.isfinite(dev), axis=1)
    small = ok & (np.array(deltas) <= 0.02)
    exps = [np.polyfit(np.log(np.array(deltas)[small]), np.log(dev[small, k]), 1)[0] for k in range(N)]
    print("fitted exponents (delta <= 0.02): " + " ".join(f"{p:.2f}" for p in exps))


if __name__ == "__main__":
    main()
