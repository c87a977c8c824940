"""Array geometry, near-field channels, path loss and noise.

Conventions
-----------
Positions are ``(3,)`` float arrays in meters. A channel matrix returned by
:func:`los_channel` has shape ``(n_rx, n_tx)`` and entry ``(m, n)`` equal to
``c0 * exp(1j * k * |u_rx[m] - u_tx[n]|)``.

The RIS-to-point vector ``h_r`` and the BS-to-point vector ``h_d`` are stored
so that the received signal reads ``(h_d^H + h_r^H diag(v) H_t) x``; i.e. the
propagation row is ``h_r^H`` and ``h_r`` itself is its conjugate.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

#: K-factors at or above this many dB are treated as a pure LOS channel.
KF_LOS_SENTINEL_DB = 300.0


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array.

    ``element_positions`` is ``(rows * cols, 3)``, row-major: the row index
    runs along the first in-plane axis (x for ``XZ``, y for ``YZ``) and the
    column index along z.
    """

    element_positions: np.ndarray
    rows: int
    cols: int
    spacing: float
    plane: str
    center: np.ndarray

    @property
    def n(self) -> int:
        return self.rows * self.cols


@dataclass(frozen=True)
class PathLossParams:
    beta_dB: float = -61.0
    d0: float = 1.0
    eta: float = 2.0
    blockage_dB: float = 0.0

    def __post_init__(self):
        if self.d0 <= 0:
            raise ValueError("d0 must be positive")


@dataclass(frozen=True)
class UserArea:
    """Rectangular area of candidate user positions at fixed height."""

    center: tuple
    half_widths: tuple = (1.0, 1.0)
    grid: tuple = (5, 5)

    def __post_init__(self):
        gx, gy = self.grid
        if gx < 1 or gy < 1:
            raise ValueError("area grid must be at least 1x1")

    @property
    def z_plane(self) -> float:
        return float(self.center[2])

    def points(self) -> np.ndarray:
        """Lattice points, ``(gx * gy, 3)``, x-major ordering."""
        cx, cy, cz = (float(c) for c in self.center)
        gx, gy = self.grid
        dx, dy = self.half_widths
        xs = np.linspace(cx - dx, cx + dx, gx) if gx > 1 else np.array([cx])
        ys = np.linspace(cy - dy, cy + dy, gy) if gy > 1 else np.array([cy])
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel(), np.full(X.size, cz)])

    @property
    def n_points(self) -> int:
        return self.grid[0] * self.grid[1]


@dataclass(frozen=True)
class ChannelSet:
    """All channels of a scenario.

    Attributes
    ----------
    H_t : ndarray, (N, N_t)
        BS -> RIS.
    h_r : list of ndarray, each (|U_k|, N)
        RIS -> grid point, one row per grid point of user k.
    h_d : list of ndarray, each (|U_k|, N_t)
        BS -> grid point (with blockage).
    sigma2 : float
        Noise power in watts.
    """

    H_t: np.ndarray
    h_r: list
    h_d: list
    sigma2: float
    wavenumber: float
    bs: ArrayGeometry
    ris: ArrayGeometry
    points: list

    @property
    def n_elements(self) -> int:
        return self.H_t.shape[0]


def wavelength(freq_Hz: float) -> float:
    return SPEED_OF_LIGHT / freq_Hz


def wavenumber(freq_Hz: float) -> float:
    return 2.0 * np.pi / wavelength(freq_Hz)


def build_upa(rows: int, cols: int, spacing: float, center=(0.0, 0.0, 0.0),
              plane: str = "YZ") -> ArrayGeometry:
    """Regular ``rows x cols`` grid centred at ``center`` in ``plane``."""
    if rows < 1 or cols < 1:
        raise ValueError(f"array dimensions must be positive, got {rows}x{cols}")
    if spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    plane = plane.upper()
    if plane not in ("XZ", "YZ"):
        raise ValueError(f"plane must be 'XZ' or 'YZ', got {plane!r}")
    center = np.asarray(center, dtype=float)
    a = (np.arange(rows) - (rows - 1) / 2.0) * spacing
    b = (np.arange(cols) - (cols - 1) / 2.0) * spacing
    A, B = np.meshgrid(a, b, indexing="ij")
    pos = np.zeros((rows * cols, 3))
    first = 0 if plane == "XZ" else 1
    pos[:, first] = A.ravel()
    pos[:, 2] = B.ravel()
    pos += center
    return ArrayGeometry(pos, rows, cols, float(spacing), plane, center)


def _distances(points: np.ndarray, others: np.ndarray) -> np.ndarray:
    """``(len(points), len(others))`` Euclidean distance matrix."""
    diff = np.asarray(points, float)[:, None, :] - np.asarray(others, float)[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def steering_vector(array: ArrayGeometry, point, k: float) -> np.ndarray:
    """Near-field response ``exp(1j * k * |p_n - point|)`` over elements."""
    d = _distances(array.element_positions, np.atleast_2d(point))[:, 0]
    if np.any(d == 0):
        raise ValueError("point coincides with an array element")
    return np.exp(1j * k * d)


def los_channel(tx: ArrayGeometry | np.ndarray, rx: ArrayGeometry | np.ndarray,
                k: float, c0: float) -> np.ndarray:
    """Near-field LOS matrix, shape ``(n_rx, n_tx)``.

    ``tx`` and ``rx`` may be geometries or raw ``(n, 3)`` position arrays.
    """
    tx_pos = tx.element_positions if isinstance(tx, ArrayGeometry) else np.atleast_2d(tx)
    rx_pos = rx.element_positions if isinstance(rx, ArrayGeometry) else np.atleast_2d(rx)
    d = _distances(rx_pos, tx_pos)
    if np.any(d == 0):
        raise ValueError("a tx element coincides with an rx element")
    return c0 * np.exp(1j * k * d)


def rician_channel(los: np.ndarray, K_f_dB: float, rng: np.random.Generator) -> np.ndarray:
    """Mix a LOS matrix with i.i.d. complex Gaussian scattering.

    The scattered part has the same per-entry average power as ``los`` so the
    total per-entry power is preserved. A K-factor at or above
    ``KF_LOS_SENTINEL_DB`` returns ``los`` unchanged and draws nothing.
    """
    los = np.asarray(los)
    if not np.all(np.isfinite(los)):
        raise ValueError("LOS matrix must be finite")
    if K_f_dB >= KF_LOS_SENTINEL_DB:
        return los
    kf = 10.0 ** (K_f_dB / 10.0)
    power = np.mean(np.abs(los) ** 2)
    nlos = (rng.standard_normal(los.shape) + 1j * rng.standard_normal(los.shape))
    nlos *= np.sqrt(power / 2.0)
    return np.sqrt(kf / (kf + 1.0)) * los + np.sqrt(1.0 / (kf + 1.0)) * nlos


def path_gain(d: float, p: PathLossParams) -> float:
    """Amplitude gain ``10**((beta - 10 eta log10(d/d0)) / 20)``."""
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    return 10.0 ** ((p.beta_dB - 10.0 * p.eta * np.log10(d / p.d0)) / 20.0)


def noise_power(bandwidth_Hz: float, N0_dBm_per_Hz: float = -174.0, Nf_dB: float = 6.0) -> float:
    """Thermal noise power ``W * N0 * Nf`` in watts."""
    if bandwidth_Hz <= 0:
        raise ValueError("bandwidth must be positive")
    dbm = N0_dBm_per_Hz + 10.0 * np.log10(bandwidth_Hz) + Nf_dB
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin2db(x):
    return 10.0 * np.log10(x)


def assemble_channels(bs: ArrayGeometry, ris: ArrayGeometry, areas: Sequence[UserArea],
                      k: float, sigma2: float, beta_dB: float, d0: float,
                      eta: Sequence[float], K_f_dB: Sequence[float], blockage_dB: float,
                      rng_for) -> ChannelSet:
    """Synthesize every channel of a scenario.

    ``eta`` and ``K_f_dB`` are ordered ``(BS-UE, BS-RIS, RIS-UE)``.
    ``rng_for(name, index)`` returns an independent generator per work unit,
    so the result does not depend on evaluation order.
    """
    eta_d, eta_t, eta_r = eta
    kf_d, kf_t, kf_r = K_f_dB

    def gain(a, b, eta_link, block=0.0):
        dist = float(np.linalg.norm(np.asarray(a) - np.asarray(b)))
        return path_gain(dist, PathLossParams(beta_dB + block, d0, eta_link))

    c_t = gain(bs.center, ris.center, eta_t)
    H_t = rician_channel(los_channel(bs, ris, k, c_t), kf_t, rng_for("H_t", 0))

    h_r, h_d, pts_all = [], [], []
    for ui, area in enumerate(areas):
        pts = area.points()
        rows_r = np.empty((len(pts), ris.n), dtype=complex)
        rows_d = np.empty((len(pts), bs.n), dtype=complex)
        for j, p in enumerate(pts):
            idx = ui * 10_000 + j
            c_r = gain(ris.center, p, eta_r)
            row = rician_channel(los_channel(ris, p, k, c_r), kf_r, rng_for("h_r", idx))[0]
            rows_r[j] = np.conj(row)
            c_d = gain(bs.center, p, eta_d, blockage_dB)
            row = rician_channel(los_channel(bs, p, k, c_d), kf_d, rng_for("h_d", idx))[0]
            rows_d[j] = np.conj(row)
        h_r.append(rows_r)
        h_d.append(rows_d)
        pts_all.append(pts)
    return ChannelSet(H_t, h_r, h_d, float(sigma2), float(k), bs, ris, pts_all)
