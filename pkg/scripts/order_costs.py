"""Cycle cost of every serving order."""
from _common import run

if __name__ == "__main__":
    run("orders", "orders")
