"""Initial and final cycle cost over several channel seeds for 2 pi and 4 pi.

Usage: ``python scripts/seed_sweep.py [n_seeds]`` (default 10). Writes
``results/seed_sweep.csv``.
"""
import csv
import sys

import numpy as np

from _common import RESULTS
from lcris.config import assemble_scenario_channels, baseline_scenario
from lcris.optimizer import build_kernels, optimize


def main(n_seeds: int = 10) -> None:
    s = baseline_scenario()
    o = s.optimizer
    cells = {"2pi": s.lc, "4pi": s.lc.with_omega_max(4 * np.pi)}
    RESULTS.mkdir(exist_ok=True)
    path = RESULTS / "seed_sweep.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "omega_max", "initial_cost_ms", "final_cost_ms", "ratio", "violations"])
        for seed in range(n_seeds):
            ker = build_kernels(assemble_scenario_channels(s, seed=seed), s.rf.P_t)
            for label, cell in cells.items():
                rep = optimize(ker, cell, s.rf.gamma_thr, alpha=o.alpha, I_max=o.I_max,
                               t_max_init=o.t_max_init_s, delta_t=o.delta_t, L=o.L,
                               lambda0=o.lambda0, monotone_guard=o.monotone_guard)
                row = [seed, label, rep.initial_cost * 1e3, rep.final_cost * 1e3,
                       rep.final_cost / rep.initial_cost, ";".join(rep.check_invariants())]
                w.writerow(row)
                print(*row)
    print(f"wrote {path}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 10)
