"""1-D director dynamics of an LC cell and the phase it produces.

The solver integrates

    gamma1 * dphi/dt = K * d2phi/dz2 + eps0_delta_eps * E(t)**2 * source(phi)

on ``0 <= z <= d`` with ``phi = 0`` at both plates, starting from
``A1 * sin(pi z / d)``. ``source`` is the cubic ``phi * (1 - phi**2 / 2)`` by
default or the exact ``sin(phi) cos(phi)``.

Closed forms for the two extreme drives, the effective molecular length, the
wavenumber integral and a power series for the phase are provided as
independent references for the numerical solution.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import integrate, optimize

EPS0 = 8.8541878128e-12
C0 = 299_792_458.0


def _default_E_max(gamma1=0.1, K_bar=10e-12, eps0_delta_eps=0.8 * EPS0, d=4.6e-6, e=0.02):
    return float(np.sqrt(np.pi ** 2 * K_bar / (d ** 2 * eps0_delta_eps * e)))


def _kappa(eps_r, freq):
    return 2 * np.pi * freq * np.sqrt(eps_r) / C0


@dataclass(frozen=True)
class MaterialParams:
    """LC layer and molecule parameters (SI units).

    Defaults give a smallness parameter ``e = 0.02``; ``kappa_lc`` and
    ``kappa_0`` are the 28 GHz wavenumbers for ``eps_r = 3.3`` and vacuum.
    """

    gamma1: float = 0.1
    K_bar: float = 10e-12
    eps0_delta_eps: float = 0.8 * EPS0
    d: float = 4.6e-6
    E_max: float = field(default_factory=_default_E_max)
    A1: float = 0.5
    a: float = 3.0
    b: float = 1.0
    ell_lc: float = 0.02
    kappa_lc: float = _kappa(3.3, 28e9)
    kappa_0: float = _kappa(1.0, 28e9)
    alpha_tune: float = 1.0

    def __post_init__(self):
        for name in ("gamma1", "K_bar", "eps0_delta_eps", "d", "E_max", "a", "b",
                     "ell_lc", "kappa_lc", "kappa_0", "alpha_tune"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.A1 < 1:
            raise ValueError("A1 must lie in (0, 1)")
        if not self.b < self.a:
            raise ValueError("semi-minor axis b must be below semi-major axis a")

    @property
    def smallness(self) -> float:
        """``e = pi^2 K / (d^2 eps0_delta_eps E_max^2)``."""
        return np.pi ** 2 * self.K_bar / (self.d ** 2 * self.eps0_delta_eps * self.E_max ** 2)

    @property
    def tau_decay(self) -> float:
        """Relaxation constant ``(gamma1 / K) (d / pi)^2`` at zero field."""
        return self.gamma1 / self.K_bar * (self.d / np.pi) ** 2

    @property
    def tau_r(self) -> float:
        drive = self.eps0_delta_eps * self.E_max ** 2 - np.pi ** 2 / self.d ** 2 * self.K_bar
        return self.gamma1 / (2.0 * abs(drive))

    @property
    def tau_rise(self) -> float:
        return self.alpha_tune * self.tau_r

    def with_(self, **kw) -> "MaterialParams":
        return replace(self, **kw)


@dataclass(frozen=True)
class DirectorField:
    z_grid: np.ndarray
    t_grid: np.ndarray
    phi: np.ndarray  # (len(t_grid), len(z_grid))


@dataclass(frozen=True)
class PhaseHistory:
    t: np.ndarray
    omega: np.ndarray
    kappa: np.ndarray


@dataclass(frozen=True)
class ExpFit:
    omega_d: float
    omega_0: float
    tau_c: float
    rmse: float
    degenerate: bool = False


def cubic_source(phi):
    return phi * (1.0 - phi ** 2 / 2.0)


def sincos_source(phi):
    return np.sin(phi) * np.cos(phi)


def step_field(value: float, t_on: float = 0.0) -> Callable[[float], float]:
    """``E(t) = value`` for ``t >= t_on`` and 0 before."""
    return lambda t: value if t >= t_on else 0.0


def solve_director_pde(p: MaterialParams, E_of_t: Callable[[float], float], nz: int = 201,
                       horizon: float = 0.05, n_out: int = 400, exact_source: bool = False,
                       safety: float = 0.4, max_steps: int = 50_000_000) -> DirectorField:
    """Explicit finite-difference solution of the director equation.

    Forward Euler in time, central differences in space, with
    ``dt = safety * gamma1 * dz^2 / K`` (further reduced if the reaction term
    is the tighter limit). ``n_out`` evenly spaced snapshots are stored,
    including ``t = 0`` and ``t = horizon``.
    """
    if nz < 51:
        raise ValueError("nz must be at least 51")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    z = np.linspace(0.0, p.d, nz)
    dz = z[1] - z[0]
    dt = safety * p.gamma1 * dz ** 2 / p.K_bar
    dt_react = safety * p.gamma1 / (p.eps0_delta_eps * p.E_max ** 2)
    dt = min(dt, dt_react)
    t_out = np.linspace(0.0, horizon, n_out)
    n_steps = int(np.ceil(horizon / dt))
    if n_steps > max_steps:
        raise MemoryError(f"{n_steps} time steps exceed the budget of {max_steps}")
    dt = horizon / n_steps
    source = sincos_source if exact_source else cubic_source

    phi = p.A1 * np.sin(np.pi * z / p.d)
    phi[0] = phi[-1] = 0.0
    out = np.empty((n_out, nz))
    out[0] = phi
    diff = p.K_bar * dt / (p.gamma1 * dz ** 2)
    react = p.eps0_delta_eps * dt / p.gamma1
    half_pi = np.pi / 2
    j = 1
    for step in range(1, n_steps + 1):
        t_prev = (step - 1) * dt
        E = E_of_t(t_prev)
        lap = phi[:-2] - 2.0 * phi[1:-1] + phi[2:]
        inner = phi[1:-1] + diff * lap
        if E != 0.0:
            inner += react * E * E * source(phi[1:-1])
        np.clip(inner, 0.0, half_pi, out=inner)
        phi[1:-1] = inner
        t_now = step * dt
        while j < n_out and t_out[j] <= t_now + 1e-15 * horizon:
            out[j] = phi
            j += 1
    while j < n_out:
        out[j] = phi
        j += 1
    return DirectorField(z, t_out, out)


def analytic_decay(z, t, p: MaterialParams):
    """Zero-field relaxation ``A1 sin(pi z / d) exp(-t / tau_decay)``."""
    z, t = np.asarray(z, float), np.asarray(t, float)
    return p.A1 * np.sin(np.pi * z / p.d) * np.exp(-t / p.tau_decay)


def analytic_rise(z, t, p: MaterialParams):
    """Full-field response; returns ``(exact, single_exponential)``.

    The exact form is the logistic-type solution with time constant
    ``tau_r``; the approximation relaxes exponentially to ``pi/2`` with
    ``tau_rise = alpha_tune * tau_r``.
    """
    z, t = np.asarray(z, float), np.asarray(t, float)
    shape = np.sin(np.pi * z / p.d)
    c = np.pi ** 2 / (4 * p.A1 ** 2) - 1.0
    exact = np.pi / 2 * np.sqrt(1.0 / (1.0 + c * np.exp(-t / p.tau_r))) * shape
    approx = (np.pi / 2 - (np.pi / 2 - p.A1) * np.exp(-t / p.tau_rise)) * shape
    return exact, approx


def rise_error_bound(p: MaterialParams) -> float:
    """Stated bound ``tau_rise * beta`` on the time-integrated gap at mid-cell."""
    q = np.pi / (2 * p.A1)
    beta = (np.log((q + 1) / (q - 1)) + np.log((q ** 2 - 1) / 4) + np.pi / 2 - p.A1)
    return p.tau_rise * beta


def integrated_rise_gap(p: MaterialParams) -> float:
    """``int_0^inf |exact - approx| dt`` at ``z = d/2`` by adaptive quadrature."""
    zc = p.d / 2

    def gap(t):
        ex, ap = analytic_rise(zc, t, p)
        return abs(float(ex) - float(ap))

    scale = max(p.tau_r, p.tau_rise)
    val, _ = integrate.quad(gap, 0.0, 60 * scale, limit=400, points=[scale, 5 * scale])
    return val


def effective_length(phi, a: float, b: float):
    """Projected length of an elliptic molecule tilted by ``phi``.

    Accepts complex ``phi`` (used for Taylor coefficients).
    """
    s = np.sin(phi)
    return b * np.sqrt(1.0 / (1.0 + (b ** 2 / a ** 2 - 1.0) * s * s))


def kappa_profile(phi, p: MaterialParams):
    """Local wavenumber mix ``(l/a) kappa_lc + ((a - l)/a) kappa_0``."""
    ell = effective_length(phi, p.a, p.b)
    return ell / p.a * p.kappa_lc + (p.a - ell) / p.a * p.kappa_0


def kappa_of_field(field: DirectorField, p: MaterialParams) -> np.ndarray:
    """Cell-averaged wavenumber per snapshot, trapezoidal in z."""
    k = kappa_profile(field.phi, p)
    return integrate.trapezoid(k, field.z_grid, axis=-1) / (field.z_grid[-1] - field.z_grid[0])


def kappa_perp(p: MaterialParams) -> float:
    return p.b / p.a * p.kappa_lc + (p.a - p.b) / p.a * p.kappa_0


def max_phase_range(p: MaterialParams) -> float:
    """``ell_lc * (kappa_lc - kappa_perp)``, the phase of a fully aligned cell."""
    return p.ell_lc * (p.kappa_lc - kappa_perp(p))


def omega_of_time(t, kappa_t, p: MaterialParams) -> PhaseHistory:
    kappa_t = np.asarray(kappa_t, float)
    omega = p.ell_lc * (kappa_t - kappa_perp(p))
    # quadrature round-off can dip a hair below the relaxed reference
    omega = np.where((omega < 0) & (omega > -1e-9 * max(1.0, abs(max_phase_range(p)))), 0.0, omega)
    return PhaseHistory(np.asarray(t, float), omega, kappa_t)


def phase_history(field: DirectorField, p: MaterialParams) -> PhaseHistory:
    return omega_of_time(field.t_grid, kappa_of_field(field, p), p)


def exp_model(t, omega_d, omega_0, tau):
    return omega_d + (omega_0 - omega_d) * np.exp(-t / tau)


def fit_single_exponential(t, omega) -> ExpFit:
    """Least-squares fit of ``omega_d + (omega_0 - omega_d) exp(-t / tau)``.

    ``rmse`` is normalised by the fitted swing ``|omega_d - omega_0|``. A
    swing below 1e-9 rad is flagged degenerate and reported with zero error.
    """
    t = np.asarray(t, float)
    omega = np.asarray(omega, float)
    if t.size < 8 or t.size != omega.size:
        raise ValueError("need at least 8 paired samples")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t must be strictly increasing")
    if np.ptp(omega) < 1e-9:
        w = float(omega.mean())
        return ExpFit(w, w, float("nan"), 0.0, degenerate=True)

    t0 = t - t[0]
    w_start, w_end = omega[0], omega[-1]
    swing = w_end - w_start
    # time to cover 63% of the swing as tau guess
    frac = (omega - w_start) / swing
    idx = np.searchsorted(np.maximum.accumulate(frac), 1 - np.exp(-1))
    tau0 = t0[min(max(idx, 1), t0.size - 1)]
    scale = abs(swing)

    def resid(x):
        return (exp_model(t0, x[0], x[1], np.exp(x[2])) - omega) / scale

    sol = optimize.least_squares(resid, [w_end, w_start, np.log(tau0)], method="lm",
                                 xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    wd, w0, tau = sol.x[0], sol.x[1], float(np.exp(sol.x[2]))
    # shift the fitted start back to the caller's time origin
    w0 = wd + (w0 - wd) * np.exp(t[0] / tau)
    swing_fit = abs(wd - w0)
    r = exp_model(t, wd, w0, tau) - omega
    rmse = float(np.sqrt(np.mean(r ** 2)) / swing_fit) if swing_fit > 1e-9 else 0.0
    return ExpFit(float(wd), float(w0), tau, rmse, degenerate=swing_fit <= 1e-9)


def taylor_coefficients(f, x0, order: int, radius: float, n_nodes: int = 128) -> np.ndarray:
    """Taylor coefficients of an analytic ``f`` about each ``x0``.

    Uses the discrete Cauchy integral on a circle of ``radius``; returns an
    array of shape ``(order + 1,) + x0.shape``.
    """
    x0 = np.asarray(x0, float)
    theta = 2 * np.pi * np.arange(n_nodes) / n_nodes
    nodes = radius * np.exp(1j * theta)
    vals = f(x0[..., None] + nodes)
    fft = np.fft.fft(vals, axis=-1) / n_nodes
    p = np.arange(order + 1)
    coefs = fft[..., : order + 1] / radius ** p
    return np.moveaxis(coefs.real, -1, 0)


@dataclass(frozen=True)
class PhaseSeries:
    """Truncated exponential series ``ell_lc * sum_p D_p exp(-p t / tau)``."""

    D: np.ndarray
    tau: float
    ell_lc: float

    def __call__(self, t):
        t = np.asarray(t, float)
        p = np.arange(self.D.size)
        return self.ell_lc * np.tensordot(np.exp(-np.multiply.outer(t, p) / self.tau), self.D, axes=([-1], [0]))


def phase_series(p: MaterialParams, phi_start, phi_end, z_grid, tau_mol: float, P: int,
                 radius: float = 0.5) -> PhaseSeries:
    """Phase as a power series in ``exp(-t / tau_mol)``.

    Expands ``l(phi)`` about the settled profile ``phi_end(z)``, with
    ``phi(z, t) - phi_end(z) = (phi_start - phi_end) exp(-t / tau_mol)``, and
    integrates each order over ``z``. ``radius`` must stay inside the
    convergence disc of ``l``.
    """
    if P < 0:
        raise ValueError("P must be non-negative")
    phi_start = np.asarray(phi_start, float)
    phi_end = np.asarray(phi_end, float)
    z_grid = np.asarray(z_grid, float)
    coefs = taylor_coefficients(lambda x: effective_length(x, p.a, p.b), phi_end, P, radius)
    delta = phi_start - phi_end
    powers = delta[None, :] ** np.arange(P + 1)[:, None]
    integrand = coefs * powers
    integrand[0] -= p.b
    length = z_grid[-1] - z_grid[0]
    D = integrate.trapezoid(integrand, z_grid, axis=-1) / length * (p.kappa_lc - p.kappa_0) / p.a
    return PhaseSeries(D, float(tau_mol), p.ell_lc)
