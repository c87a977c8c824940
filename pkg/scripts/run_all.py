"""Regenerate every experiment output under ``results/``."""
import runpy
from pathlib import Path

HERE = Path(__file__).resolve().parent

if __name__ == "__main__":
    for name in ("cost_trace", "phase_histogram", "tdma_trace", "rate_sweep",
                 "pde_validation", "order_costs", "seed_sweep"):
        runpy.run_path(str(HERE / f"{name}.py"), run_name="__main__")
