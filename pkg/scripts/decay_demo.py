"""Far-field decay |u - H| against R for designed structures with N = 1..5 and an
uncoated insulating disk.

Writes ``<out>/decay_N<k>.csv`` and prints fitted slopes against -(N+1).
"""

import argparse
from pathlib import Path

import numpy as np

from gptcloak.farfield import decay_exponent
from gptcloak.solver import FixedCore, solve_vanishing
from gptcloak.structure import LayerStructure, equidistant_radii


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results/decay")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    plain = decay_exponent(LayerStructure(2, (2.0,)), [-1.0], K=1)
    (out / "decay_N0.csv").write_text(plain.csv_text())
    print(f"N = 0: slope {plain.slope:.4f} (target {plain.target:.0f})")
    # beyond N = 4 the rounding floor of the lower modes masks R^{-(N+1)} at these radii
    for N in range(1, 5):
        s = LayerStructure(2, equidistant_radii(2.0, 1.0, N))
        report = solve_vanishing(s, FixedCore(sigma=0.0))
        decay = decay_exponent(s, report.eta, radii=np.geomspace(20.0, 2000.0, 13))
        (out / f"decay_N{N}.csv").write_text(decay.csv_text())
        print(f"N = {N}: {report.status}, slope {decay.slope:.4f} (target {decay.target:.0f})")


if __name__ == "__main__":
    main()
