"""Shared helper: run one ``lcris`` subcommand into ``results/<name>``."""
import sys
from pathlib import Path

from lcris.cli import main

RESULTS = Path(__file__).resolve().parent.parent / "results"


def run(name: str, *argv: str) -> None:
    out = RESULTS / name
    code = main([*argv, "--out", str(out)])
    print(f"{name}: exit {code}, outputs in {out}")
    if code:
        sys.exit(code)
