"""Director-PDE closed-form checks and exponential fits."""
from _common import run

if __name__ == "__main__":
    run("pde_validation", "pde-validate")
