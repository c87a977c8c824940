"""Cost trace of the optimizer for both phase ranges (seed 0)."""
import math

from _common import run

if __name__ == "__main__":
    run("cost_trace_2pi", "optimize")
    run("cost_trace_4pi", "optimize", "--omega-max", str(4 * math.pi))
