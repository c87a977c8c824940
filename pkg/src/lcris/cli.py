"""Command-line front end.

Every subcommand writes figure-ready CSV/JSON files into ``--out`` together
with ``manifest.json`` (resolved config, seed, version and SHA-256 digests
of the outputs). The exit status is 0 only when every invariant checked
during the run held; 2 signals bad input, 3 a violated invariant.

User ids on the command line and in CSV headers are 1-based.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, Scenario, assemble_scenario_channels, baseline_scenario, parse_scenario
from .lc_pde import (analytic_decay, exp_model, fit_single_exponential, integrated_rise_gap, phase_history,
                     phase_series, rise_error_bound, solve_director_pde, step_field)
from .optimizer import (InfeasibleError, benchmark_optimize, build_kernels, cycle_cost,
                        optimize)
from .tdma import (Schedule, delta_histogram, enumerate_orders, rate_sweep, simulate_cycle,
                   time_to_threshold)

DEFAULT_TS_MS = (1, 2, 5, 10, 20, 57, 100, 200, 500, 1000)


@dataclass
class RunManifest:
    command: str
    version: str
    seed: int
    config: dict
    outputs: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
        return path


class _Run:
    """Output directory bookkeeping for one subcommand."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files: list = []
        self.violations: list = []

    def csv(self, name: str, header, rows) -> Path:
        path = self.out_dir / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        self.files.append(path)
        return path

    def json(self, name: str, obj) -> Path:
        path = self.out_dir / name
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
        self.files.append(path)
        return path

    def digests(self) -> dict:
        return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in self.files}


# ------------------------------------------------------------ helpers

def _scenario(args) -> Scenario:
    s = parse_scenario(args.config) if args.config else baseline_scenario()
    if args.seed is not None:
        s = s.replace(seed=int(args.seed))
    if args.omega_max is not None:
        s = s.with_omega_max(float(args.omega_max))
    return s


def _order(args, K: int) -> tuple:
    if not args.order:
        return tuple(range(K))
    try:
        order = tuple(int(x) - 1 for x in args.order.split(","))
    except ValueError:
        raise ConfigError("--order", f"expected a comma list of user numbers, got {args.order!r}") from None
    if sorted(order) != list(range(K)):
        raise ConfigError("--order", f"must be a permutation of 1..{K}")
    return order


def _ts_list(args) -> list:
    if not args.ts_ms:
        return [t / 1000.0 for t in DEFAULT_TS_MS]
    try:
        vals = [float(x) / 1000.0 for x in args.ts_ms.split(",")]
    except ValueError:
        raise ConfigError("--ts-ms", f"expected a comma list of numbers, got {args.ts_ms!r}") from None
    if not vals or min(vals) <= 0:
        raise ConfigError("--ts-ms", "slot lengths must be positive")
    return vals


def _kernels(s: Scenario):
    ch = assemble_scenario_channels(s)
    return build_kernels(ch, s.rf.P_t), build_kernels(ch, s.rf.P_t, include_direct=True)


def _optimize(s: Scenario, kernels, order):
    o = s.optimizer
    return optimize(kernels, s.lc, s.rf.gamma_thr, order=order, alpha=o.alpha, I_max=o.I_max,
                    t_max_init=o.t_max_init_s, delta_t=o.delta_t, L=o.L, lambda0=o.lambda0,
                    monotone_guard=o.monotone_guard)


def _label(order) -> str:
    return "-".join(str(u + 1) for u in order)


def _ms(x):
    return "" if x is None else x * 1e3


# ------------------------------------------------------------ subcommands

def cmd_optimize(s: Scenario, args, run: _Run):
    ker, _ = _kernels(s)
    order = _order(args, s.n_users)
    rep = _optimize(s, ker, order)
    run.violations += rep.check_invariants()
    K = s.n_users
    header = (["iteration", "mean_max_transition_ms"]
              + [f"min_snr_dB_user_{u + 1}" for u in range(K)]
              + [f"accepted_user_{u + 1}" for u in range(K)])
    rows = [[r["iteration"], r["cost_s"] * 1e3, *r["min_snr_dB"], *(int(a) for a in r["accepted"])]
            for r in rep.trace]
    run.csv("cost_trace.csv", header, rows)
    run.json("optimize_report.json", rep.to_dict())


def cmd_simulate_tdma(s: Scenario, args, run: _Run):
    ker, ker_d = _kernels(s)
    order = _order(args, s.n_users)
    T_s = _ts_list(args)[0] if args.ts_ms else 0.057
    rep = _optimize(s, ker, order)
    run.violations += rep.check_invariants()
    bench = benchmark_optimize(ker, s.lc)
    sched = Schedule(order, T_s)
    thr = s.rf.gamma_thr_dB
    traces = {}
    for name, cfg in (("proposed", rep.configs), ("benchmark", bench)):
        tr = simulate_cycle(cfg, sched, s.lc, ker_d)
        traces[name] = tr
        run.csv(f"tdma_trace_{name}.csv", ["t_ms", "snr_min_dB", "active_user"],
                zip(tr.t * 1e3, tr.snr_min_dB, tr.active_user + 1))
    rows = []
    for j, u in enumerate(order):
        rows.append([j + 1, u + 1, _ms(time_to_threshold(traces["proposed"], j, thr)),
                     _ms(time_to_threshold(traces["benchmark"], j, thr))])
    run.csv("tdma_crossings.csv", ["slot", "user", "T_c_proposed_ms", "T_c_benchmark_ms"], rows)


def cmd_rate_sweep(s: Scenario, args, run: _Run):
    ker, ker_d = _kernels(s)
    order = _order(args, s.n_users)
    rep = _optimize(s, ker, order)
    run.violations += rep.check_invariants()
    bench = benchmark_optimize(ker, s.lc)
    rows = rate_sweep(rep.configs, bench, _ts_list(args), s.lc, ker_d, s.rf.gamma_thr_dB, order=order)
    cap = math.log2(1.0 + s.rf.gamma_thr)
    out = []
    for r in rows:
        for res in (r.proposed, r.benchmark):
            if not -1e-12 <= res.rate <= cap + 1e-12:
                run.violations.append(f"rate-bounds@T_s={r.T_s}")
        out.append([r.T_s * 1e3, r.proposed.rate, r.benchmark.rate,
                    r.proposed.T_c_mean * 1e3, r.benchmark.T_c_mean * 1e3])
    run.csv("rate_sweep.csv", ["T_s_ms", "rate_proposed", "rate_benchmark",
                               "T_c_proposed_ms", "T_c_benchmark_ms"], out)


def cmd_histogram(s: Scenario, args, run: _Run):
    ker, _ = _kernels(s)
    order = _order(args, s.n_users)
    rep = _optimize(s, ker, order)
    run.violations += rep.check_invariants()
    bench = benchmark_optimize(ker, s.lc)
    hp = delta_histogram([rep.configs[u] for u in order], s.lc.omega_max, args.bins)
    hb = delta_histogram([bench[u] for u in order], s.lc.omega_max, args.bins)
    n_total = ker[0].G.shape[1] * s.n_users
    for name, h in (("proposed", hp), ("benchmark", hb)):
        if int(h.counts.sum()) != n_total:
            run.violations.append(f"histogram-mass-{name}")
    run.csv("histogram.csv", ["bin_center_rad", "count_benchmark", "count_proposed"],
            zip(hb.centers, hb.counts, hp.counts))
    run.json("histogram_summary.json", {"mass_within_half_pi_benchmark": hb.mass_within_half_pi,
                                        "mass_within_half_pi_proposed": hp.mass_within_half_pi,
                                        "bins": args.bins, "omega_max_rad": s.lc.omega_max})


def pde_validation(p, nz: int = 201, n_out: int = 400) -> tuple:
    """Closed-form checks of the director solver; returns ``(metrics, curves)``."""
    dec = solve_director_pde(p, step_field(0.0), nz=nz, horizon=5 * p.tau_decay, n_out=n_out)
    Z, T = np.meshgrid(dec.z_grid, dec.t_grid)
    decay_err = float(np.abs(dec.phi - analytic_decay(Z, T, p)).max())
    rise = solve_director_pde(p, step_field(p.E_max), nz=nz, horizon=30 * p.tau_r, n_out=n_out,
                              exact_source=True)
    mid = nz // 2
    h_dec, h_rise = phase_history(dec, p), phase_history(rise, p)
    f_dec = fit_single_exponential(h_dec.t, h_dec.omega)
    f_rise = fit_single_exponential(h_rise.t, h_rise.omega)
    series = phase_series(p, dec.phi[0], np.zeros(nz), dec.z_grid, p.tau_decay, 12)
    series_err = float(np.abs(series(h_dec.t) - h_dec.omega).max() / np.abs(h_dec.omega).max())
    metrics = {
        "decay_sup_error_rad": decay_err,
        "rise_midpoint_gap_rad": float(np.pi / 2 - rise.phi[-1, mid]),
        "rise_integrated_gap": integrated_rise_gap(p),
        "rise_gap_bound": rise_error_bound(p),
        "fit_rmse_decay": f_dec.rmse,
        "fit_rmse_rise": f_rise.rmse,
        "tau_decay_s": p.tau_decay,
        "tau_r_s": p.tau_r,
        "series_P12_relative_error": series_err,
    }
    curves = {}
    for name, h, f in (("decay", h_dec, f_dec), ("rise", h_rise, f_rise)):
        metrics[f"fit_{name}"] = {"omega_0": f.omega_0, "omega_d": f.omega_d, "tau_c_s": f.tau_c,
                                  "rmse": f.rmse}
        curves[name] = (h, exp_model(h.t, f.omega_d, f.omega_0, f.tau_c))
    return metrics, curves


PDE_LIMITS = {
    "decay_sup_error_rad": 1e-3,
    "rise_midpoint_gap_rad": 1e-2,
    "fit_rmse_decay": 0.05,
    "fit_rmse_rise": 0.05,
    "series_P12_relative_error": 0.01,
}


def cmd_pde_validate(s: Scenario, args, run: _Run):
    metrics, curves = pde_validation(s.pde, nz=args.nz)
    for key, lim in PDE_LIMITS.items():
        if not abs(metrics[key]) <= lim:
            run.violations.append(f"pde:{key}")
    if not metrics["rise_integrated_gap"] <= metrics["rise_gap_bound"]:
        run.violations.append("pde:rise_gap_bound")
    for name, (h, wf) in curves.items():
        run.csv(f"pde_{name}.csv", ["t_s", "omega_rad", "kappa_rad_per_m", "omega_fit_rad"],
                zip(h.t, h.omega, h.kappa, wf))
    run.json("pde_validation.json", metrics)


def cmd_orders(s: Scenario, args, run: _Run):
    ker, _ = _kernels(s)
    bench = benchmark_optimize(ker, s.lc)
    W_b = np.array([c.phases for c in bench])
    rows = []
    for order in enumerate_orders(s.n_users):
        rep = _optimize(s, ker, order)
        run.violations += [f"{_label(order)}:{v}" for v in rep.check_invariants()]
        rows.append([_label(order), rep.initial_cost * 1e3, rep.final_cost * 1e3,
                     cycle_cost(W_b[list(order)], s.lc) * 1e3])
    run.csv("orders.csv", ["order", "initial_cost_ms", "final_cost_ms", "benchmark_cost_ms"], rows)


COMMANDS = {
    "optimize": cmd_optimize,
    "simulate-tdma": cmd_simulate_tdma,
    "rate-sweep": cmd_rate_sweep,
    "histogram": cmd_histogram,
    "pde-validate": cmd_pde_validate,
    "orders": cmd_orders,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario JSON (default: bundled baseline_scenario)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--order", help="serving order as 1-based user numbers, e.g. 1,3,2")
    common.add_argument("--omega-max", type=float, help="maximum differential phase in rad")
    common.add_argument("--ts-ms", help="comma list of slot lengths in ms")
    ap = argparse.ArgumentParser(prog="lcris", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "histogram":
            sp.add_argument("--bins", type=int, default=63)
        if name == "pde-validate":
            sp.add_argument("--nz", type=int, default=201)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        s = _scenario(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return 2
    run = _Run(out_dir)
    try:
        COMMANDS[args.command](s, args, run)
    except (ConfigError, InfeasibleError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    manifest = RunManifest(args.command, __version__, s.seed, s.to_dict(), run.digests(),
                           sorted(set(run.violations)))
    manifest.write(out_dir)
    for v in manifest.violations:
        print(f"invariant violated: {v}", file=sys.stderr)
    return 3 if manifest.violations else 0


if __name__ == "__main__":
    sys.exit(main())
