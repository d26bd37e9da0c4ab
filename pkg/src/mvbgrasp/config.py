"""Benchmark configuration, serialisable to and from one JSON document."""

import dataclasses
import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .perception import DEFAULT_FILTER_ORDER
from .synth import OBJECT_KINDS, FeasibilitySpec, ObjectDims


@dataclass(frozen=True)
class SynthConfig:
    distances: dict = field(default_factory=lambda: {"Near": 0.35, "Mid": 0.50, "Far": 0.65})
    laterals: dict = field(default_factory=lambda: {"Left": 0.15, "Center": 0.0, "Right": -0.15})
    dims: ObjectDims = ObjectDims()
    points_per_object: int = 2000
    noise_sigma: float = 0.001
    backside_keep: float = 0.3
    outlier_fraction: float = 0.01
    table_half_size: float = 0.12
    table_spacing: float = 0.01
    camera_position: tuple = (0.0, 0.0, 0.25)
    camera_target: tuple = (0.5, 0.0, 0.05)
    num_candidates: int = 800
    inward_weight: float = 0.5
    inward_spread: float = 0.35
    score_noise: float = 0.15


@dataclass(frozen=True)
class SelectionConfig:
    alpha: float = 0.85
    k_faces: int = 2
    epsilon: float = 1e-6
    top: int = 1


@dataclass(frozen=True)
class DenoiseSettings:
    enabled: bool = True
    order: tuple = DEFAULT_FILTER_ORDER
    lo_pct: float = 0.01
    hi_pct: float = 0.99
    k_neighbors: int = 20
    sigma_mult: float = 2.0
    radius: float = 0.01
    n_min: int = 5


@dataclass(frozen=True)
class CollisionSettings:
    enabled: bool = False
    tau: float = 0.002


@dataclass(frozen=True)
class BenchConfig:
    master_seed: int = 0
    rng: str = "PCG64"
    objects: tuple = OBJECT_KINDS
    occlusion_levels: tuple = ("none",)
    synth: SynthConfig = SynthConfig()
    scoring: SelectionConfig = SelectionConfig()
    denoise: DenoiseSettings = DenoiseSettings()
    collision: CollisionSettings = CollisionSettings()
    feasibility: FeasibilitySpec = FeasibilitySpec()
    workers: int = 1

    def validate(self):
        if self.rng != "PCG64":
            raise ConfigError(f"only the PCG64 generator is supported, got {self.rng!r}")
        bad = [o for o in self.objects if o not in OBJECT_KINDS]
        if bad or not self.objects:
            raise ConfigError(f"objects must be a non-empty subset of {OBJECT_KINDS}, got {self.objects}")
        if tuple(self.occlusion_levels) != ("none",):
            raise ConfigError("only the 'none' occlusion level is implemented")
        if set(self.synth.distances) != {"Near", "Mid", "Far"}:
            raise ConfigError("distances must define Near, Mid and Far")
        if set(self.synth.laterals) != {"Left", "Center", "Right"}:
            raise ConfigError("laterals must define Left, Center and Right")
        if self.synth.num_candidates < 1 or self.synth.points_per_object < 3:
            raise ConfigError("num_candidates >= 1 and points_per_object >= 3 required")
        if not 1 <= self.scoring.k_faces <= 6:
            raise ConfigError("k_faces must lie in [1, 6]")
        if not 0.0 <= self.scoring.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        if self.scoring.top < 1:
            raise ConfigError("top must be >= 1")
        if not self.collision.tau > 0:
            raise ConfigError("collision tau must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = getattr(cls(), name)
        where = f"{path}.{name}" if path else name
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, where)
        elif isinstance(default, tuple):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from None


def config_from_dict(data):
    return _build(BenchConfig, data, "").validate()


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return config_from_dict(data)
