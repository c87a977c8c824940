"""Transition-aware RIS phase design for a TDMA cycle of users.

Each user ``k`` owns an area of candidate positions and an SNR kernel
``G_k`` with ``SNR(v, u) = |G_k[u] @ v|^2`` for ``v = exp(1j * omega)``.
Users are visited cyclically, so configuration ``k`` is reached from
``k - 1`` and left towards ``k + 1`` (indices modulo K, in serving order).

The design loop alternates, per user, a parallel per-element line search
on the surrogate

    xi_next * t(omega -> omega_next) + xi_prev * t(omega_prev -> omega)
        - lambda * cos(omega - phi)

with an accept/reject test on the min-area SNR; multipliers shrink by
``alpha`` on accept and grow by ``1 / alpha`` on reject.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ChannelSet, lin2db, steering_vector
from .lc_model import LCCellModel, PhaseConfig, transition_times


class InfeasibleError(RuntimeError):
    """The focusing start point already violates the SNR threshold."""

    def __init__(self, user: int, point: int, snr_dB: float, thr_dB: float):
        super().__init__(f"user {user} infeasible at grid point {point}: "
                         f"min-area SNR {snr_dB:.2f} dB < {thr_dB:.2f} dB")
        self.user, self.point, self.snr_dB = user, point, snr_dB


@dataclass(frozen=True)
class SnrKernel:
    """Generating vectors ``G`` (|U|, N) and optional direct terms ``d`` (|U|,).

    ``SNR(v, u) = |d[u] + G[u] @ v|^2``.
    """

    G: np.ndarray
    d: np.ndarray | None = None

    @property
    def n_points(self) -> int:
        return self.G.shape[0]

    def snr(self, phases) -> np.ndarray:
        field_ = self.G @ np.exp(1j * np.asarray(phases, float))
        if self.d is not None:
            field_ = field_ + self.d
        return np.abs(field_) ** 2

    def matrix(self, u: int) -> np.ndarray:
        g = self.G[u]
        return np.outer(np.conj(g), g)


def mf_beamformer(channels: ChannelSet, P_t: float) -> np.ndarray:
    """Matched filter towards the RIS centre, ``||q||^2 = P_t``.

    The LOS BS->RIS matrix is ``c0 a_RIS a_BS^T`` with ``a_BS`` the BS
    steering vector, so the coherent choice is ``conj(a_BS)``.
    """
    a = steering_vector(channels.bs, channels.ris.center, channels.wavenumber)
    return np.sqrt(P_t) * np.conj(a) / np.linalg.norm(a)


def build_snr_kernel(channels: ChannelSet, user: int, q: np.ndarray,
                     include_direct: bool = False) -> SnrKernel:
    """Kernel of one user's area; the direct link is dropped unless asked for."""
    sigma = np.sqrt(channels.sigma2)
    Htq = channels.H_t @ q
    G = np.conj(channels.h_r[user]) * Htq[None, :] / sigma
    d = None
    if include_direct:
        d = (np.conj(channels.h_d[user]) @ q) / sigma
    return SnrKernel(G, d)


def build_kernels(channels: ChannelSet, P_t: float, include_direct: bool = False) -> list:
    q = mf_beamformer(channels, P_t)
    return [build_snr_kernel(channels, k, q, include_direct) for k in range(len(channels.h_r))]


def wrap_phase(phi, cell: LCCellModel) -> np.ndarray:
    """Reduce modulo 2*pi into ``[omega_min, min(omega_max, omega_min + 2*pi))``."""
    out = cell.omega_min + np.mod(np.asarray(phi, float) - cell.omega_min, 2 * np.pi)
    out = np.where(out >= cell.omega_min + 2 * np.pi, cell.omega_min, out)
    return out


def focusing_phases(g: np.ndarray, cell: LCCellModel) -> PhaseConfig:
    """Phases turning every ``g[n] * exp(1j * phase[n])`` onto the positive real axis."""
    return PhaseConfig(wrap_phase(-np.angle(g), cell))


def min_area_snr(phases, kernel: SnrKernel):
    """``(min SNR, index of the worst grid point)``; ties go to the lowest index."""
    snr = kernel.snr(phases.phases if isinstance(phases, PhaseConfig) else phases)
    idx = int(np.argmin(snr))
    return float(snr[idx]), idx


def assign_points(N: int, n_points: int) -> np.ndarray:
    """Cyclic element -> grid point map, ``n -> n mod |U|`` (0-based)."""
    if n_points < 1:
        raise ValueError("area must contain at least one point")
    return np.arange(N) % n_points


def area_focusing(kernel: SnrKernel, cell: LCCellModel) -> PhaseConfig:
    """Every element focuses on its assigned grid point."""
    N = kernel.G.shape[1]
    pts = assign_points(N, kernel.n_points)
    return focusing_phases(kernel.G[pts, np.arange(N)], cell)


def benchmark_optimize(kernels, cell: LCCellModel) -> list:
    """Transition-unaware design: area focusing for each user independently."""
    return [area_focusing(k, cell) for k in kernels]


# ------------------------------------------------------------- line search

def line_search_grid(cell: LCCellModel, L: int) -> np.ndarray:
    """``L`` uniform points strictly inside ``(omega_min, omega_max)``."""
    if L < 2:
        raise ValueError("L must be at least 2")
    span = cell.omega_max - cell.omega_min
    return cell.omega_min + span * np.arange(1, L + 1) / (L + 1)


def _times_from(w0, grid, cell):
    """t(w0[n] -> grid[g]) as (N, L); unreachable pairs give inf."""
    w0 = np.asarray(w0, float)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        up = cell.tau_plus * (np.log(cell.omega_max - w0) - np.log(cell.omega_max - grid)[None, :])
        dn = cell.tau_minus * (np.log(w0 - cell.omega_min) - np.log(grid - cell.omega_min)[None, :])
    return np.where(grid[None, :] > w0, up, np.where(grid[None, :] < w0, dn, 0.0))


def _times_to(grid, wd, cell):
    """t(grid[g] -> wd[n]) as (N, L); unreachable pairs give inf."""
    wd = np.asarray(wd, float)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        up = cell.tau_plus * (np.log(cell.omega_max - grid)[None, :] - np.log(cell.omega_max - wd))
        dn = cell.tau_minus * (np.log(grid - cell.omega_min)[None, :] - np.log(wd - cell.omega_min))
    up = np.where(np.isnan(up), np.inf, up)
    dn = np.where(np.isnan(dn), np.inf, dn)
    return np.where(wd > grid[None, :], up, np.where(wd < grid[None, :], dn, 0.0))


def coordinate_cost(omega, prev, nxt, lam, xi_prev, xi_next, phi, cell: LCCellModel):
    """Per-element surrogate cost at candidate phases ``omega``.

    All arguments broadcast against each other; returns an array of costs.
    """
    omega, prev, nxt, lam, xi_prev, xi_next, phi = np.broadcast_arrays(
        *(np.asarray(x, float) for x in (omega, prev, nxt, lam, xi_prev, xi_next, phi)))
    t_in = transition_times(prev, omega, cell)
    t_out = transition_times(omega, nxt, cell)
    time = np.where(xi_prev > 0, xi_prev * t_in, 0.0) + np.where(xi_next > 0, xi_next * t_out, 0.0)
    return time - lam * np.cos(omega - phi)


def line_search(prev, nxt, lam, xi_prev, xi_next, phi, cell: LCCellModel, L: int,
                chunk: int = 4096) -> np.ndarray:
    """Grid minimiser of :func:`coordinate_cost` for every element at once.

    Exact ties go to the smaller weighted time, then to the lower grid index.
    """
    grid = line_search_grid(cell, L)
    prev, nxt, lam, xi_prev, xi_next, phi = (np.atleast_1d(np.asarray(x, float))
                                             for x in (prev, nxt, lam, xi_prev, xi_next, phi))
    N = prev.size
    out = np.empty(N)
    cos_g, sin_g = np.cos(grid), np.sin(grid)
    for s in range(0, N, chunk):
        sl = slice(s, s + chunk)
        cost = -lam[sl, None] * (np.cos(phi[sl])[:, None] * cos_g + np.sin(phi[sl])[:, None] * sin_g)
        time = np.zeros_like(cost)
        # unflagged elements carry no time term, so only flagged rows are evaluated
        rows = np.flatnonzero(xi_prev[sl] > 0)
        if rows.size:
            time[rows] += xi_prev[sl][rows, None] * _times_from(prev[sl][rows], grid, cell)
        rows = np.flatnonzero(xi_next[sl] > 0)
        if rows.size:
            time[rows] += xi_next[sl][rows, None] * _times_to(grid, nxt[sl][rows], cell)
        cost += time
        best = cost.min(axis=1, keepdims=True)
        tied = np.where(cost <= best, time, np.inf)
        out[sl] = grid[np.argmin(tied, axis=1)]
    return out


def line_search_element(prev, nxt, lam, xi_prev, xi_next, phi, cell: LCCellModel, L: int) -> float:
    return float(line_search([prev], [nxt], [lam], [xi_prev], [xi_next], [phi], cell, L)[0])


# ------------------------------------------------------------- main loop

@dataclass
class OptimizeReport:
    """Outcome of :func:`optimize`.

    ``trace`` holds one row per outer iteration (row 0 is the start point)
    with the mean over users of the max element transition time, per-user
    min-area SNR in dB and per-user status (``accept``, ``reject`` or
    ``init``). Per-user arrays are indexed by user id.
    """

    order: tuple
    configs: list
    trace: list
    max_times: np.ndarray
    element_times: list
    lambdas: list = field(default_factory=list)
    gamma_thr_dB: float = 10.0

    @property
    def costs(self) -> np.ndarray:
        return np.array([row["cost_s"] for row in self.trace])

    @property
    def initial_cost(self) -> float:
        return float(self.trace[0]["cost_s"])

    @property
    def final_cost(self) -> float:
        return float(self.trace[-1]["cost_s"])

    def check_invariants(self) -> list:
        """Names of violated invariants (empty when all hold)."""
        bad = []
        for row in self.trace:
            for u, st in enumerate(row["status"]):
                if st in ("accept", "init") and row["min_snr_dB"][u] < self.gamma_thr_dB - 1e-9:
                    bad.append(f"snr-constraint@iter{row['iteration']}/user{u}")
        c = self.costs
        if np.any(np.diff(c) > 1e-15):
            bad.append("cost-monotonicity")
        return bad

    def to_dict(self) -> dict:
        return {
            "order": list(self.order),
            "gamma_thr_dB": self.gamma_thr_dB,
            "initial_cost_s": self.initial_cost,
            "final_cost_s": self.final_cost,
            "trace": self.trace,
            "users": [
                {"user": u, "max_transition_s": float(self.max_times[u]),
                 "element_transition_s": self.element_times[u].tolist(),
                 "phases_rad": self.configs[u].phases.tolist()}
                for u in range(len(self.configs))
            ],
        }


def _hold_slow_elements(cand, cur, prev, nxt, cell):
    """Keep the current phase wherever the candidate would exceed the user's
    present slowest incoming or outgoing transition."""
    t_in = transition_times(prev, cand, cell)
    t_out = transition_times(cand, nxt, cell)
    cap_in = transition_times(prev, cur, cell).max()
    cap_out = transition_times(cur, nxt, cell).max()
    return np.where((t_in > cap_in) | (t_out > cap_out), cur, cand)


def cycle_times(W: np.ndarray, cell: LCCellModel) -> np.ndarray:
    """(K, N) times to reach row k from row k-1 (cyclic)."""
    return transition_times(np.roll(W, 1, axis=0), W, cell)


def cycle_cost(W: np.ndarray, cell: LCCellModel) -> float:
    """Mean over users of the slowest element's transition time."""
    return float(cycle_times(W, cell).max(axis=1).mean())


def optimize(kernels, cell: LCCellModel, gamma_thr: float, order=None, alpha: float = 0.95,
             I_max: int = 35, t_max_init: float = 0.1, delta_t: float | None = None,
             L: int = 256, lambda0: float = 0.2, monotone_guard: bool = True) -> OptimizeReport:
    """Design one phase configuration per user for the cyclic serving ``order``.

    ``kernels`` is indexed by user id and must not contain direct-link terms.
    The start point is :func:`area_focusing` for every user; it must meet
    ``gamma_thr`` on every grid point.

    With ``monotone_guard`` an element whose candidate phase would exceed
    the user's current slowest incoming or outgoing transition keeps its
    phase, so accepted steps never raise the cycle cost.
    """
    K = len(kernels)
    order = tuple(range(K)) if order is None else tuple(order)
    if sorted(order) != list(range(K)):
        raise ValueError(f"order {order} is not a permutation of {K} users")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    delta_t = t_max_init / I_max if delta_t is None else delta_t
    thr_dB = float(lin2db(gamma_thr))

    ker = [kernels[u] for u in order]
    N = ker[0].G.shape[1]
    phi = np.empty((K, N))
    W = np.empty((K, N))
    for k, kern in enumerate(ker):
        pts = assign_points(N, kern.n_points)
        phi[k] = focusing_phases(kern.G[pts, np.arange(N)], cell).phases
        W[k] = phi[k]
        snr, idx = min_area_snr(W[k], kern)
        if snr < gamma_thr:
            raise InfeasibleError(order[k], idx, float(lin2db(snr)), thr_dB)

    lam = np.full((K, N), float(lambda0))
    t_max = np.full(K, float(t_max_init))
    snr_now = [min_area_snr(W[k], ker[k])[0] for k in range(K)]

    def row(it, status):
        by_user = np.empty(K)
        st = [""] * K
        for k in range(K):
            by_user[order[k]] = lin2db(snr_now[k])
            st[order[k]] = status[k]
        return {"iteration": it, "cost_s": cycle_cost(W, cell),
                "min_snr_dB": by_user.tolist(), "status": st,
                "accepted": [s == "accept" for s in st]}

    trace = [row(0, ["init"] * K)]
    for it in range(1, I_max + 1):
        T = cycle_times(W, cell)
        xi = (T >= t_max[:, None]).astype(float)
        status = []
        for k in range(K):
            kp, kn = (k - 1) % K, (k + 1) % K
            cand = line_search(W[kp], W[kn], lam[k], xi[k], xi[kn], phi[k], cell, L)
            if monotone_guard and K > 1:
                cand = _hold_slow_elements(cand, W[k], W[kp], W[kn], cell)
            snr, _ = min_area_snr(cand, ker[k])
            if snr < gamma_thr:
                lam[k] /= alpha
                status.append("reject")
                continue
            lam[k] *= alpha
            W[k] = cand
            snr_now[k] = snr
            status.append("accept")
        t_max -= delta_t
        trace.append(row(it, status))

    times = cycle_times(W, cell)
    configs, max_times, elem_times, lams = [None] * K, np.empty(K), [None] * K, [None] * K
    for k in range(K):
        u = order[k]
        configs[u] = PhaseConfig(W[k].copy())
        max_times[u] = times[k].max()
        elem_times[u] = times[k].copy()
        lams[u] = lam[k].copy()
    return OptimizeReport(order, configs, trace, max_times, elem_times, lams, thr_dB)
