"""Top-level simulation config with YAML round-tripping."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .array_channel import ChannelParams, UpaGeometry
from .association import METRICS, SOLVERS
from .initial_access import SCHEMES, IaConfig
from .scenario import ProcessNoise, ScenarioConfig
from .sensing import DrxSchedule, RadarNoiseModel, VisionErrorModel
from .tracking import JACOBIAN_MODES

WEIGHT_MODES = ("dynamic", "static", "position", "velocity")
SOLVER_ALIASES = {"brute": "bruteforce", "km": "hungarian", "matchpairs": "scipy"}


def canonical_solver(name: str) -> str:
    name = SOLVER_ALIASES.get(name, name)
    if name not in SOLVERS:
        raise ValueError(f"unknown solver {name!r}")
    return name


@dataclass(frozen=True)
class Variant:
    """One association pipeline: similarity metric, weight mode and solver."""

    metric: str = "md"
    weights: str = "dynamic"
    solver: str = "lapjv"

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.weights not in WEIGHT_MODES:
            raise ValueError(f"unknown weight mode {self.weights!r}")
        object.__setattr__(self, "solver", canonical_solver(self.solver))

    @property
    def label(self) -> str:
        return f"{self.metric}/{self.weights}/{self.solver}"

    @classmethod
    def parse(cls, text: str) -> "Variant":
        parts = text.split("/")
        if len(parts) != 3:
            raise ValueError(f"variant must look like metric/weights/solver, got {text!r}")
        return cls(*parts)


@dataclass(frozen=True)
class AntennaConfig:
    """Square UPA sizes; every entry of ``tx_sizes`` runs its own pipeline."""

    tx_sizes: Tuple[int, ...] = (16,)
    # None ties the radar receive array to the transmit array.
    rx_size: Optional[int] = None
    uav: Tuple[int, int] = (2, 2)

    def __post_init__(self):
        if not self.tx_sizes:
            raise ValueError("need at least one transmit array size")
        for n in tuple(self.tx_sizes) + ((self.rx_size,) if self.rx_size else ()):
            UpaGeometry.square(n)

    def tx_geometry(self, n_t: int) -> UpaGeometry:
        return UpaGeometry.square(n_t, "bs_tx")

    def n_rb(self, n_t: int) -> int:
        return self.rx_size or n_t

    def uav_geometry(self) -> UpaGeometry:
        return UpaGeometry(self.uav[0], self.uav[1], "uav_rx")


@dataclass(frozen=True)
class TrackingConfig:
    init_pos_std: float = 5.0
    init_vel_std: float = 2.0
    init_acc_std: float = 1.0
    jacobian_mode: str = "full"
    echo_channels: str = "complex"  # complex or real
    joseph: bool = False
    feedback_gain: float = 1.0
    feedback_staleness: int = 1
    # Beam gain behind Qm: "predicted" (last posterior through the current
    # beam) or "echo" (read off |c~|).
    qm_gain: str = "predicted"
    gain_floor: float = 1e-3

    def __post_init__(self):
        if self.jacobian_mode not in JACOBIAN_MODES:
            raise ValueError(f"unknown Jacobian mode {self.jacobian_mode!r}")
        if self.echo_channels not in ("complex", "real"):
            raise ValueError("echo_channels must be 'complex' or 'real'")
        if self.qm_gain not in ("predicted", "echo"):
            raise ValueError("qm_gain must be 'predicted' or 'echo'")
        if self.feedback_staleness < 0:
            raise ValueError("staleness must be non-negative")


@dataclass(frozen=True)
class AssociationConfig:
    primary: Variant = Variant()
    # Extra pipelines scored on the same cost inputs every slot.
    variants: Tuple[Variant, ...] = ()
    distinguishability: str = "all-distinct"
    cost_mode: str = "harmonic"
    covariance_window: int = 1
    auction_epsilon: Optional[float] = None
    # "truth" updates every track with its own UAV's echo; "closed_loop"
    # feeds the primary variant's assignment back into the filters.
    tracking_driver: str = "truth"
    shuffle: bool = True
    # How a wrongly associated link is scored: "zero" or "physical".
    mismatch: str = "zero"

    def __post_init__(self):
        if self.tracking_driver not in ("truth", "closed_loop"):
            raise ValueError("tracking_driver must be 'truth' or 'closed_loop'")
        if self.mismatch not in ("zero", "physical"):
            raise ValueError("mismatch must be 'zero' or 'physical'")
        if self.covariance_window < 1:
            raise ValueError("covariance_window must be >= 1")

    @property
    def all_variants(self) -> Tuple[Variant, ...]:
        seen = [self.primary]
        for v in self.variants:
            if v not in seen:
                seen.append(v)
        return tuple(seen)


@dataclass(frozen=True)
class IaSection:
    config: IaConfig = IaConfig()
    scheme: str = "proposed"
    enabled: bool = True

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown IA scheme {self.scheme!r}")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "results"
    figures: bool = True


@dataclass(frozen=True)
class SimConfig:
    scenario: ScenarioConfig = ScenarioConfig()
    channel: ChannelParams = ChannelParams()
    radar: RadarNoiseModel = RadarNoiseModel()
    vision: VisionErrorModel = VisionErrorModel()
    drx: DrxSchedule = DrxSchedule()
    tracking: TrackingConfig = TrackingConfig()
    association: AssociationConfig = AssociationConfig()
    ia: IaSection = IaSection()
    antennas: AntennaConfig = AntennaConfig()
    output: OutputConfig = OutputConfig()
    trials: int = 200
    seed: int = 0
    workers: int = 1
    p_tx: float = 1.0
    sigma_r: float = 1.0

    @property
    def f_c(self) -> float:
        return self.channel.f_c

    def validate(self) -> "SimConfig":
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.p_tx <= 0 or self.sigma_r <= 0:
            raise ValueError("transmit power and noise std must be positive")
        self.scenario.validate()
        return self

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return _to_plain(self)

    def dump(self, path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "SimConfig":
        return _build(cls, data or {}).validate()

    @classmethod
    def load(cls, path) -> "SimConfig":
        data = yaml.safe_load(Path(path).read_text())
        if data is not None and not isinstance(data, dict):
            raise ValueError(f"{path}: top level must be a mapping")
        return cls.from_dict(data)


def full_scale_config() -> SimConfig:
    """2000 trials instead of the desk-scale 200."""
    return SimConfig(trials=2000)


# Nested dataclass fields and their types, resolved once (string annotations).
_NESTED = {
    (SimConfig, "scenario"): ScenarioConfig,
    (SimConfig, "channel"): ChannelParams,
    (SimConfig, "radar"): RadarNoiseModel,
    (SimConfig, "vision"): VisionErrorModel,
    (SimConfig, "drx"): DrxSchedule,
    (SimConfig, "tracking"): TrackingConfig,
    (SimConfig, "association"): AssociationConfig,
    (SimConfig, "ia"): IaSection,
    (SimConfig, "antennas"): AntennaConfig,
    (SimConfig, "output"): OutputConfig,
    (ScenarioConfig, "process_noise"): ProcessNoise,
    (IaSection, "config"): IaConfig,
}
_TUPLE_FIELDS = {"altitude_band", "tx_sizes", "uav"}


def _build(cls, data: Dict[str, Any]):
    if not isinstance(data, dict):
        raise ValueError(f"section for {cls.__name__} must be a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValueError(f"unknown keys for {cls.__name__}: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        sub = _NESTED.get((cls, key))
        if sub is not None:
            kwargs[key] = _build(sub, value or {})
        elif cls is AssociationConfig and key == "primary":
            kwargs[key] = _variant(value)
        elif cls is AssociationConfig and key == "variants":
            kwargs[key] = tuple(_variant(v) for v in (value or ()))
        elif key in _TUPLE_FIELDS and value is not None:
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


def _variant(value) -> Variant:
    if isinstance(value, Variant):
        return value
    if isinstance(value, str):
        return Variant.parse(value)
    return Variant(**value)


def _to_plain(obj):
    if isinstance(obj, Variant):
        return obj.label
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [_to_plain(v) for v in obj]
    return obj


def sweep_variants(solvers: Optional[List[str]] = None) -> Tuple[Variant, ...]:
    """Every metric x weight-mode x solver combination."""
    solvers = solvers or ["hungarian", "scipy", "greedy", "auction", "lapjv"]
    return tuple(Variant(m, w, s) for m in METRICS for w in WEIGHT_MODES for s in solvers)
