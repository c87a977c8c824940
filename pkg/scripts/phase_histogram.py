"""Histogram of consecutive-user phase differences, proposed vs benchmark."""
from _common import run

if __name__ == "__main__":
    run("histogram", "histogram")
