"""Time-domain evaluation of a TDMA cycle served by one LC-RIS.

At every slot start each element is driven (over/undershoot) from its
instantaneous phase towards the scheduled user's configuration. Phases are
carried continuously over slot boundaries, so a slot shorter than a
transition simply retargets the element mid-flight.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .lc_model import LCCellModel, PhaseConfig, drive_phases, transition_times

#: Largest K for which :func:`enumerate_orders` lists all schedules.
MAX_ENUMERATED_USERS = 8


@dataclass(frozen=True)
class Schedule:
    """Serving order (0-based user ids) and slot length ``T_s`` in seconds."""

    order: tuple
    T_s: float

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(u) for u in self.order))
        if sorted(self.order) != list(range(len(self.order))):
            raise ValueError(f"order {self.order} is not a permutation of 0..K-1")
        if not self.T_s > 0:
            raise ValueError("T_s must be positive")

    @property
    def K(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class TdmaTrace:
    """Sampled min-area SNR of the scheduled user over one cycle.

    ``slot_of[i]`` is the slot index of sample ``i``; ``slot_boundaries``
    holds the ``K`` slot start times.
    """

    t: np.ndarray
    snr_min_dB: np.ndarray
    active_user: np.ndarray
    slot_of: np.ndarray
    slot_boundaries: np.ndarray
    T_s: float
    final_phases: np.ndarray

    def slot(self, j: int):
        """``(t relative to slot start, snr_min_dB)`` of slot ``j``."""
        if not 0 <= j < len(self.slot_boundaries):
            raise IndexError(f"slot {j} out of range")
        m = self.slot_of == j
        return self.t[m] - self.slot_boundaries[j], self.snr_min_dB[m]


@dataclass(frozen=True)
class RateResult:
    T_s: float
    T_c_mean: float
    rate: float


@dataclass(frozen=True)
class RateSweepRow:
    T_s: float
    proposed: RateResult
    benchmark: RateResult


def default_dt(cell: LCCellModel, T_s: float) -> float:
    """``min(tau+, tau-) / 20``, tightened so a slot holds at least 50 samples."""
    return min(min(cell.tau_plus, cell.tau_minus) / 20.0, T_s / 50.0)


def _slot_snr(kernel, w0, target, cell, t_rel):
    """Min-area SNR in dB along one slot; samples after the last element
    settles reuse the settled value."""
    reach = transition_times(w0, target, cell)
    t_done = float(reach.max()) if reach.size else 0.0
    out = np.empty(t_rel.size)
    moving = t_rel < t_done
    for i in np.flatnonzero(moving):
        out[i] = kernel.snr(drive_phases(t_rel[i], w0, target, cell)).min()
    if not moving.all():
        out[~moving] = kernel.snr(target).min()
    return 10.0 * np.log10(np.maximum(out, np.finfo(float).tiny))


def simulate_cycle(configs, schedule: Schedule, cell: LCCellModel, kernels,
                   dt: float | None = None, start_phases=None,
                   warmup_cycles: int = 0, settled_starts: bool = False) -> TdmaTrace:
    """Trace one TDMA cycle.

    Parameters
    ----------
    configs, kernels : sequences indexed by user id
        Phase configurations and SNR kernels (the latter may carry the
        direct link).
    start_phases : array, optional
        Element phases at ``t = 0``. Defaults to the configuration of the
        last user in the order, i.e. the state left by the previous cycle
        when every transition had time to finish.
    warmup_cycles : int
        Cycles run (and discarded) before the recorded one, so that the
        start state is the periodic state when slots cut transitions short.
    settled_starts : bool
        Start every slot from the previous user's configuration instead of
        the carried-over phases. Each slot then shows one isolated
        transition, which is how the rate evaluation measures ``T_c``.
    """
    K = schedule.K
    if len(configs) != K or len(kernels) != K:
        raise ValueError("need one config and one kernel per user")
    T_s = schedule.T_s
    if dt is None:
        dt = default_dt(cell, T_s)
    if not dt > 0:
        raise ValueError("dt must be positive")
    if dt > T_s / 50.0 * (1 + 1e-12):
        raise ValueError(f"dt = {dt} exceeds T_s / 50 = {T_s / 50.0}")
    W = [np.asarray(c.phases if isinstance(c, PhaseConfig) else c, float) for c in configs]
    w = (W[schedule.order[-1]] if start_phases is None
         else np.asarray(start_phases, float)).copy()

    for _ in range(warmup_cycles):
        for u in schedule.order:
            w = drive_phases(T_s, w, W[u], cell)

    n_per = int(math.ceil(T_s / dt - 1e-9))
    t_rel = np.arange(n_per) * dt
    ts, snrs, users, slots = [], [], [], []
    for j, u in enumerate(schedule.order):
        if settled_starts:
            w = W[schedule.order[j - 1]]
        snrs.append(_slot_snr(kernels[u], w, W[u], cell, t_rel))
        ts.append(j * T_s + t_rel)
        users.append(np.full(n_per, u))
        slots.append(np.full(n_per, j))
        w = drive_phases(T_s, w, W[u], cell)
    return TdmaTrace(np.concatenate(ts), np.concatenate(snrs), np.concatenate(users),
                     np.concatenate(slots), np.arange(K) * T_s, T_s, w)


def time_to_threshold(trace: TdmaTrace, slot: int, gamma_thr_dB: float):
    """Seconds from the slot start until the SNR first reaches ``gamma_thr_dB``.

    Linear interpolation (in dB) between the bracketing samples; ``None``
    when the threshold is not reached within the slot.
    """
    t, s = trace.slot(slot)
    above = np.flatnonzero(s >= gamma_thr_dB)
    if above.size == 0:
        return None
    i = int(above[0])
    if i == 0:
        return 0.0
    frac = (gamma_thr_dB - s[i - 1]) / (s[i] - s[i - 1])
    return float(t[i - 1] + frac * (t[i] - t[i - 1]))


def effective_rate(T_s: float, T_c: float, gamma_thr_dB: float, base: float = 2.0) -> float:
    """Slot-efficiency weighted rate ``max(T_s - T_c, 0) / T_s * log(1 + gamma)``.

    ``base`` selects the logarithm (2 for bits, ``math.e`` for nats).
    """
    if not T_s > 0:
        raise ValueError("T_s must be positive")
    if T_c < 0:
        raise ValueError("T_c must be non-negative")
    gamma = 10.0 ** (gamma_thr_dB / 10.0)
    return max(T_s - T_c, 0.0) / T_s * math.log(1.0 + gamma, base)


def mean_crossing_time(trace: TdmaTrace, gamma_thr_dB: float) -> float:
    """Mean over slots of the threshold-crossing time; a slot that never
    reaches the threshold counts as a full slot."""
    times = []
    for j in range(len(trace.slot_boundaries)):
        tc = time_to_threshold(trace, j, gamma_thr_dB)
        times.append(trace.T_s if tc is None else tc)
    return float(np.mean(times))


def rate_sweep(configs_proposed, configs_benchmark, T_s_list, cell: LCCellModel, kernels,
               gamma_thr_dB: float, order=None, dt: float | None = None,
               base: float = 2.0) -> list:
    """Effective rate of both designs for every slot length in ``T_s_list``.

    ``T_c`` is the mean over users of the threshold-crossing time of the
    transition from the previous user's settled configuration; a slot too
    short to reach the threshold contributes ``T_s``.
    """
    T_s_list = list(T_s_list)
    if not T_s_list:
        raise ValueError("T_s_list must not be empty")
    K = len(kernels)
    order = tuple(range(K)) if order is None else tuple(order)
    rows = []
    for T_s in T_s_list:
        sched = Schedule(order, float(T_s))
        res = []
        for cfg in (configs_proposed, configs_benchmark):
            tr = simulate_cycle(cfg, sched, cell, kernels, dt=None if dt is None else min(dt, T_s / 50),
                                settled_starts=True)
            tc = mean_crossing_time(tr, gamma_thr_dB)
            res.append(RateResult(float(T_s), tc, effective_rate(T_s, tc, gamma_thr_dB, base)))
        rows.append(RateSweepRow(float(T_s), res[0], res[1]))
    return rows


@dataclass(frozen=True)
class DeltaHistogram:
    edges: np.ndarray
    counts: np.ndarray
    mass_within_half_pi: float

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.counts.sum() * np.diff(self.edges))


def phase_differences(configs) -> np.ndarray:
    """``omega_k - omega_{k-1}`` for every consecutive pair (cyclic), flattened."""
    W = np.array([np.asarray(c.phases if isinstance(c, PhaseConfig) else c, float) for c in configs])
    return (W - np.roll(W, 1, axis=0)).ravel()


def delta_histogram(configs, omega_max: float, bins: int = 63) -> DeltaHistogram:
    """Histogram of cyclic phase differences over ``[-omega_max, omega_max]``.

    ``configs`` are given in serving order. An odd ``bins`` centres one bin
    on zero.
    """
    if bins < 8:
        raise ValueError("bins must be at least 8")
    d = phase_differences(configs)
    edges = np.linspace(-omega_max, omega_max, bins + 1)
    counts, _ = np.histogram(d, bins=edges)
    mass = float(np.mean(np.abs(d) <= np.pi / 2)) if d.size else 0.0
    return DeltaHistogram(edges, counts, mass)


def triangular_density(x, omega_max: float = 2 * np.pi):
    """Density of the difference of two independent uniforms on ``[0, omega_max)``."""
    x = np.asarray(x, float)
    return np.clip(omega_max - np.abs(x), 0.0, None) / omega_max ** 2


def triangular_cdf(x, omega_max: float = 2 * np.pi):
    """Distribution function matching :func:`triangular_density`."""
    x = np.clip(np.asarray(x, float), -omega_max, omega_max)
    half = 0.5 * (omega_max - np.abs(x)) ** 2 / omega_max ** 2
    return np.where(x < 0, half, 1.0 - half)


def triangular_bin_density(edges, omega_max: float = 2 * np.pi) -> np.ndarray:
    """Triangular density averaged over each histogram bin, the exact
    expectation of :attr:`DeltaHistogram.density` for uniform inputs."""
    edges = np.asarray(edges, float)
    return np.diff(triangular_cdf(edges, omega_max)) / np.diff(edges)


def enumerate_orders(K: int) -> list:
    """The ``(K-1)!`` cyclically distinct serving orders, user 0 first."""
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > MAX_ENUMERATED_USERS:
        raise ValueError(f"refusing to enumerate {math.factorial(K - 1)} orders for K = {K}")
    return [(0,) + p for p in itertools.permutations(range(1, K))]
