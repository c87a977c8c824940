"""Scenario configuration: dataclasses, JSON loading and seeded sub-streams."""
from __future__ import annotations

import dataclasses
import json
import zlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .geometry import (ChannelSet, UserArea, assemble_channels, build_upa, noise_power,
                       wavelength, wavenumber)
from .lc_model import LCCellModel
from .lc_pde import MaterialParams


class ConfigError(ValueError):
    """Schema violation; ``key_path`` names the offending entry."""

    def __init__(self, key_path: str, msg: str):
        super().__init__(f"{key_path}: {msg}")
        self.key_path = key_path


@dataclass(frozen=True)
class RFConfig:
    freq_Hz: float = 28e9
    bandwidth_Hz: float = 20e6
    N0_dBm_per_Hz: float = -174.0
    Nf_dB: float = 6.0
    P_t_dBm: float = 38.0
    gamma_thr_dB: float = 10.0

    @property
    def P_t(self) -> float:
        return 10.0 ** ((self.P_t_dBm - 30.0) / 10.0)

    @property
    def gamma_thr(self) -> float:
        return 10.0 ** (self.gamma_thr_dB / 10.0)


@dataclass(frozen=True)
class ArraySpec:
    rows: int
    cols: int
    center: tuple
    plane: str
    spacing_wavelengths: float = 0.5


@dataclass(frozen=True)
class AreaSpec:
    center: tuple
    half_widths: tuple = (1.0, 1.0)


@dataclass(frozen=True)
class GeometryConfig:
    bs: ArraySpec = ArraySpec(4, 4, (40.0, 20.0, 5.0), "XZ")
    ris: ArraySpec = ArraySpec(64, 64, (0.0, 0.0, 0.0), "YZ")
    users: tuple = (
        AreaSpec((10.0, 2.0, -5.0)),
        AreaSpec((10.0, -5.0, -5.0)),
        AreaSpec((10.0, 5.0, -5.0)),
    )


@dataclass(frozen=True)
class ChannelConfig:
    """Link-wise values are ordered ``(BS-UE, BS-RIS, RIS-UE)``."""

    beta_dB: float = -61.0
    d0_m: float = 1.0
    eta: tuple = (2.0, 2.0, 2.0)
    K_f_dB: tuple = (-100.0, 10.0, 10.0)
    blockage_dB: float = -40.0


@dataclass(frozen=True)
class OptimizerConfig:
    alpha: float = 0.95
    I_max: int = 35
    t_max_init_s: float = 0.1
    delta_t_s: object = "t_max/I_max"
    L: int = 256
    lambda0: float = 0.2
    area_grid: tuple = (3, 3)
    monotone_guard: bool = True

    @property
    def delta_t(self) -> float:
        if self.delta_t_s == "t_max/I_max":
            return self.t_max_init_s / self.I_max
        return float(self.delta_t_s)


@dataclass(frozen=True)
class Scenario:
    rf: RFConfig = RFConfig()
    geometry: GeometryConfig = GeometryConfig()
    channel: ChannelConfig = ChannelConfig()
    lc: LCCellModel = LCCellModel()
    optimizer: OptimizerConfig = OptimizerConfig()
    pde: MaterialParams = field(default_factory=MaterialParams)
    seed: int = 0

    @property
    def n_users(self) -> int:
        return len(self.geometry.users)

    def areas(self) -> list:
        return [UserArea(tuple(u.center), tuple(u.half_widths), tuple(self.optimizer.area_grid))
                for u in self.geometry.users]

    def replace(self, **kw) -> "Scenario":
        return dataclasses.replace(self, **kw)

    def with_omega_max(self, omega_max: float) -> "Scenario":
        return self.replace(lc=self.lc.with_omega_max(omega_max))

    def with_ris(self, rows: int, cols: int) -> "Scenario":
        ris = dataclasses.replace(self.geometry.ris, rows=rows, cols=cols)
        return self.replace(geometry=dataclasses.replace(self.geometry, ris=ris))

    def to_dict(self) -> dict:
        return _to_jsonable(dataclasses.asdict(self))


def _to_jsonable(x):
    if isinstance(x, dict):
        return {k: _to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_to_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


# ---------------------------------------------------------------- parsing

def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected an object, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
    kw = {}
    for name, value in data.items():
        kp = f"{path}.{name}" if path else name
        kw[name] = _convert(cls, name, value, kp)
    try:
        return cls(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(path or "<root>", str(exc)) from None


_NESTED = {
    (None, "rf"): RFConfig,
    (None, "geometry"): GeometryConfig,
    (None, "channel"): ChannelConfig,
    (None, "lc"): LCCellModel,
    (None, "optimizer"): OptimizerConfig,
    (None, "pde"): MaterialParams,
    (GeometryConfig, "bs"): ArraySpec,
    (GeometryConfig, "ris"): ArraySpec,
}


def _convert(cls, name, value, kp):
    owner = None if cls is Scenario else cls
    sub = _NESTED.get((owner, name))
    if sub is not None:
        return _build(sub, value, kp)
    if cls is GeometryConfig and name == "users":
        if not isinstance(value, list) or not value:
            raise ConfigError(kp, "expected a non-empty list of user areas")
        return tuple(_build(AreaSpec, u, f"{kp}[{i}]") for i, u in enumerate(value))
    if isinstance(value, list):
        return tuple(value)
    return value


def _validate(s: Scenario) -> Scenario:
    o = s.optimizer
    if not 0 < o.alpha < 1:
        raise ConfigError("optimizer.alpha", f"must lie in (0, 1), got {o.alpha}")
    if o.I_max < 1:
        raise ConfigError("optimizer.I_max", "must be >= 1")
    if o.L < 2:
        raise ConfigError("optimizer.L", "must be >= 2")
    if o.lambda0 <= 0:
        raise ConfigError("optimizer.lambda0", "must be positive")
    if o.t_max_init_s <= 0:
        raise ConfigError("optimizer.t_max_init_s", "must be positive")
    if o.delta_t_s != "t_max/I_max":
        try:
            float(o.delta_t_s)
        except (TypeError, ValueError):
            raise ConfigError("optimizer.delta_t_s", "number or 't_max/I_max'") from None
    if len(o.area_grid) != 2 or min(o.area_grid) < 1:
        raise ConfigError("optimizer.area_grid", "two positive integers expected")
    for key in ("freq_Hz", "bandwidth_Hz"):
        if getattr(s.rf, key) <= 0:
            raise ConfigError(f"rf.{key}", "must be positive")
    for key in ("eta", "K_f_dB"):
        if len(getattr(s.channel, key)) != 3:
            raise ConfigError(f"channel.{key}", "three link values expected (BS-UE, BS-RIS, RIS-UE)")
    if s.channel.d0_m <= 0:
        raise ConfigError("channel.d0_m", "must be positive")
    for key in ("bs", "ris"):
        a = getattr(s.geometry, key)
        if a.rows < 1 or a.cols < 1:
            raise ConfigError(f"geometry.{key}", "rows and cols must be positive")
        if a.plane.upper() not in ("XZ", "YZ"):
            raise ConfigError(f"geometry.{key}.plane", "must be XZ or YZ")
        if len(a.center) != 3:
            raise ConfigError(f"geometry.{key}.center", "three coordinates expected")
    if not isinstance(s.seed, int) or s.seed < 0:
        raise ConfigError("seed", "must be a non-negative integer")
    return s


def scenario_from_dict(data: dict) -> Scenario:
    return _validate(_build(Scenario, data, ""))


def parse_scenario(path) -> Scenario:
    """Load a JSON scenario; missing keys take defaults, unknown keys fail."""
    text = Path(path).read_text()
    if not text.strip():
        return scenario_from_dict({})
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    return scenario_from_dict(data)


def baseline_scenario() -> Scenario:
    ref = resources.files("lcris") / "data" / "baseline.json"
    return scenario_from_dict(json.loads(ref.read_text()))


# ---------------------------------------------------------------- seeding

def substream(seed: int, name: str, index: int = 0) -> np.random.Generator:
    """Generator keyed by ``(seed, name, index)``; independent of call order."""
    return np.random.default_rng([seed, zlib.crc32(name.encode()), index])


def build_arrays(s: Scenario):
    lam = wavelength(s.rf.freq_Hz)
    out = []
    for spec in (s.geometry.bs, s.geometry.ris):
        out.append(build_upa(spec.rows, spec.cols, spec.spacing_wavelengths * lam,
                             spec.center, spec.plane))
    return tuple(out)


def assemble_scenario_channels(s: Scenario, seed: int | None = None) -> ChannelSet:
    seed = s.seed if seed is None else seed
    bs, ris = build_arrays(s)
    sigma2 = noise_power(s.rf.bandwidth_Hz, s.rf.N0_dBm_per_Hz, s.rf.Nf_dB)
    c = s.channel
    return assemble_channels(bs, ris, s.areas(), wavenumber(s.rf.freq_Hz), sigma2,
                             c.beta_dB, c.d0_m, c.eta, c.K_f_dB, c.blockage_dB,
                             lambda name, idx: substream(seed, name, idx))
