"""Closed-form transient model of a single LC phase-shifter cell.

Phases are plain floats (or arrays) in radians inside ``[omega_min,
omega_max)``; nothing here wraps modulo 2*pi.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np


class UnreachableTarget(ValueError):
    """Target sits on the saturation level of the drive and needs infinite time."""


@dataclass(frozen=True)
class LCCellModel:
    tau_plus: float = 9e-3
    tau_minus: float = 29e-3
    omega_max: float = 2 * np.pi
    omega_min: float = 0.0

    def __post_init__(self):
        if self.tau_plus <= 0 or self.tau_minus <= 0:
            raise ValueError("time constants must be positive")
        if not self.omega_min < self.omega_max:
            raise ValueError("omega_min must be below omega_max")

    def with_omega_max(self, omega_max: float) -> "LCCellModel":
        return LCCellModel(self.tau_plus, self.tau_minus, omega_max, self.omega_min)


@dataclass(frozen=True)
class PhaseConfig:
    phases: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=float))

    def __len__(self):
        return len(self.phases)

    def validate(self, cell: LCCellModel) -> None:
        p = self.phases
        if np.any(p < cell.omega_min) or np.any(p >= cell.omega_max):
            raise ValueError("phase outside [omega_min, omega_max)")


class DriveMode(Enum):
    OVERSHOOT = "overshoot"
    UNDERSHOOT = "undershoot"
    HOLD = "hold"


def phase_at(t, omega0, omega_d, tau):
    """Exponential response ``omega_d + (omega0 - omega_d) * exp(-t / tau)``."""
    if np.any(np.asarray(tau) <= 0):
        raise ValueError("tau must be positive")
    x = -np.asarray(t, dtype=float) / tau
    # weighted form keeps both end points exact in floating point
    return omega0 * np.exp(x) - omega_d * np.expm1(x)


def transition_times(omega0, omega_d, cell: LCCellModel) -> np.ndarray:
    """Vectorised over/undershoot settling times, in seconds.

    Rising targets saturate towards ``omega_max`` with ``tau_plus`` and
    falling ones towards ``omega_min`` with ``tau_minus``.
    """
    w0 = np.asarray(omega0, dtype=float)
    wd = np.asarray(omega_d, dtype=float)
    w0, wd = np.broadcast_arrays(w0, wd)
    rise = wd > w0
    fall = wd < w0
    if np.any(rise & (wd >= cell.omega_max)):
        raise UnreachableTarget("rising target at omega_max is unreachable")
    if np.any(fall & (wd <= cell.omega_min)):
        raise UnreachableTarget("falling target at omega_min is unreachable")
    out = np.zeros(w0.shape)
    if np.any(rise):
        gap = cell.omega_max - wd[rise]
        out[rise] = cell.tau_plus * np.log1p((wd[rise] - w0[rise]) / gap)
    if np.any(fall):
        gap = wd[fall] - cell.omega_min
        with np.errstate(over="ignore"):
            ratio = (w0[fall] - wd[fall]) / gap
        out[fall] = cell.tau_minus * np.where(
            np.isfinite(ratio), np.log1p(ratio),
            np.log(w0[fall] - cell.omega_min) - np.log(gap))
    return out


def transition_time(omega0: float, omega_d: float, cell: LCCellModel) -> float:
    return float(transition_times(omega0, omega_d, cell))


@dataclass(frozen=True)
class DriveTrajectory:
    omega0: float
    omega_d: float
    mode: DriveMode
    t_reach: float
    cell: LCCellModel

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.mode is DriveMode.HOLD:
            return np.full(t.shape, self.omega_d) if t.ndim else self.omega_d
        if self.mode is DriveMode.OVERSHOOT:
            moving = phase_at(t, self.omega0, self.cell.omega_max, self.cell.tau_plus)
        else:
            moving = phase_at(t, self.omega0, self.cell.omega_min, self.cell.tau_minus)
        out = np.where(t < self.t_reach, moving, self.omega_d)
        return out if out.ndim else float(out)


def drive_trajectory(omega0: float, omega_d: float, cell: LCCellModel) -> DriveTrajectory:
    t_reach = transition_time(omega0, omega_d, cell)
    if omega_d > omega0:
        mode = DriveMode.OVERSHOOT
    elif omega_d < omega0:
        mode = DriveMode.UNDERSHOOT
    else:
        mode = DriveMode.HOLD
    return DriveTrajectory(float(omega0), float(omega_d), mode, t_reach, cell)


def drive_phases(t, omega0, omega_d, cell: LCCellModel) -> np.ndarray:
    """Element-wise drive trajectory for whole phase vectors at time ``t``."""
    w0 = np.asarray(omega0, dtype=float)
    wd = np.asarray(omega_d, dtype=float)
    t_reach = transition_times(w0, wd, cell)
    rise = wd > w0
    target = np.where(rise, cell.omega_max, cell.omega_min)
    tau = np.where(rise, cell.tau_plus, cell.tau_minus)
    moving = target + (w0 - target) * np.exp(-t / tau)
    return np.where(t < t_reach, moving, wd)


def config_transition_time(prev: PhaseConfig, nxt: PhaseConfig, cell: LCCellModel):
    """Per-element settling times and their maximum."""
    if len(prev) != len(nxt):
        raise ValueError(f"length mismatch: {len(prev)} vs {len(nxt)}")
    times = transition_times(prev.phases, nxt.phases, cell)
    return times, float(times.max()) if times.size else 0.0


def steady_phase_from_voltage(v, lut) -> np.ndarray:
    """Piecewise-linear voltage -> phase lookup, clamped to the table ends.

    ``lut`` is a pair ``(volts, phases_rad)``.
    """
    volts, phases = (np.asarray(a, dtype=float) for a in lut)
    if volts.ndim != 1 or volts.size == 0 or volts.shape != phases.shape:
        raise ValueError("LUT must be two equal-length non-empty 1-D arrays")
    if np.any(np.diff(volts) <= 0):
        raise ValueError("LUT voltages must be strictly increasing")
    if np.any(np.diff(phases) < 0):
        raise ValueError("LUT phases must be non-decreasing")
    return np.interp(v, volts, phases)


def load_voltage_lut(path):
    """Read a two-column ``volts,degrees`` CSV; returns ``(volts, radians)``."""
    volts, degs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                v, d = float(row[0]), float(row[1])
            except ValueError:
                continue  # header
            volts.append(v)
            degs.append(d)
    lut = (np.array(volts), np.deg2rad(degs))
    steady_phase_from_voltage(lut[0][:1], lut)
    return lut
