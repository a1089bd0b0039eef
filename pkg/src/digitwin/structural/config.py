from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

from .exceptions import DomainError

__all__ = (
    "DEFAULT_DAMAGE_REGIONS",
    "DEFAULT_GRID_VALUES",
    "DamageRegion",
    "DatagenConfig",
    "EstimateRule",
    "LayoutName",
    "MaterialConfig",
    "MissionConfig",
    "NoiseSpec",
    "PlateConfig",
    "ProjectConfig",
    "TrainConfig",
    "load_config",
)

LayoutName = Literal["installed", "candidate"]
EstimateRule = Literal["median", "argmax"]

DEFAULT_GRID_VALUES: tuple[float, ...] = (0.0, 20.0, 40.0, 60.0, 80.0)


@dataclass(frozen=True)
class MaterialConfig:
    """Isotropic linear-elastic material of the plate.

    Args:
        youngs_modulus: Young's modulus (force per area)
        poisson_ratio: Poisson ratio, strictly between -1 and 0.5
        thickness: Plate thickness (length)
    """

    youngs_modulus: float = 50e9
    poisson_ratio: float = 0.3
    thickness: float = 0.003

    def __post_init__(self) -> None:
        if self.youngs_modulus <= 0 or self.thickness <= 0:
            raise DomainError("Young's modulus and thickness must be positive")
        if not -1.0 < self.poisson_ratio < 0.5:
            raise DomainError(f"Poisson ratio {self.poisson_ratio} outside (-1, 0.5)")


@dataclass(frozen=True)
class DamageRegion:
    """Axis-aligned planform rectangle whose stiffness is scaled by one damage parameter.

    Both ranges are closed intervals of planform fractions.

    Args:
        span_range: (start, end) spanwise fraction, root = 0, tip = 1
        chord_range: (start, end) chordwise fraction
    """

    span_range: tuple[float, float]
    chord_range: tuple[float, float]

    def __post_init__(self) -> None:
        for lo, hi in (self.span_range, self.chord_range):
            if not 0.0 <= lo < hi <= 1.0:
                raise DomainError(f"Damage region {self} does not lie inside the planform")

    def contains(self, chord_fraction: float, span_fraction: float) -> bool:
        return (
            self.span_range[0] <= span_fraction <= self.span_range[1]
            and self.chord_range[0] <= chord_fraction <= self.chord_range[1]
        )

    def overlaps(self, other: DamageRegion) -> bool:
        return (
            self.span_range[0] <= other.span_range[1]
            and other.span_range[0] <= self.span_range[1]
            and self.chord_range[0] <= other.chord_range[1]
            and other.chord_range[0] <= self.chord_range[1]
        )

    def distance(self, chord_fraction: float, span_fraction: float, span: float, chord: float) -> float:
        """Euclidean planform distance (length units) from a point to this rectangle."""
        ds = max(self.span_range[0] - span_fraction, 0.0, span_fraction - self.span_range[1]) * span
        dc = max(self.chord_range[0] - chord_fraction, 0.0, chord_fraction - self.chord_range[1]) * chord
        return math.hypot(ds, dc)


# Region 1 inboard and larger, region 2 outboard and smaller. Gauges 17, 18, 23
# and 24 of the installed layout are the only installed gauges inside them.
DEFAULT_DAMAGE_REGIONS: tuple[DamageRegion, ...] = (
    DamageRegion(span_range=(0.40, 0.50), chord_range=(0.42, 0.95)),
    DamageRegion(span_range=(0.70, 0.78), chord_range=(0.42, 0.88)),
)


@dataclass(frozen=True)
class PlateConfig:
    """Geometry, mesh, material and loading of the cantilever plate surrogate.

    Args:
        span: Spanwise length of the plate
        chord: Chordwise width of the plate
        n_span: Number of elements along the span
        n_chord: Number of elements along the chord
        material: Material properties
        damage_regions: Rectangles scaled by the damage parameters, in parameter order
        reference_weight: Aircraft weight; total lift is load factor times this value
        load_chord_fraction: Chordwise station of the spanwise line load
        clamped_root: Whether the root edge is clamped
    """

    span: float = 1.8
    chord: float = 0.4
    n_span: int = 48
    n_chord: int = 12
    material: MaterialConfig = field(default_factory=MaterialConfig)
    damage_regions: tuple[DamageRegion, ...] = DEFAULT_DAMAGE_REGIONS
    reference_weight: float = 8650.0
    load_chord_fraction: float = 0.5
    clamped_root: bool = True

    def __post_init__(self) -> None:
        if self.span <= 0 or self.chord <= 0:
            raise DomainError("Plate span and chord must be positive")
        if self.n_span < 1 or self.n_chord < 1:
            raise DomainError("Mesh needs at least one element in each direction")
        if self.reference_weight <= 0:
            raise DomainError("Reference weight must be positive")
        if not 0.0 <= self.load_chord_fraction <= 1.0:
            raise DomainError("Load station must lie on the chord")
        for i, region in enumerate(self.damage_regions):
            for other in self.damage_regions[i + 1 :]:
                if region.overlaps(other):
                    raise DomainError(f"Damage regions {region} and {other} overlap")


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean Gaussian sensor noise with diagonal covariance ``variance * I``.

    Args:
        variance: Per-gauge variance in microstrain squared
    """

    variance: float = 1000.0

    def __post_init__(self) -> None:
        if not self.variance >= 0.0:
            raise DomainError(f"Noise variance must be nonnegative, got {self.variance}")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class TrainConfig:
    """Constraints and search settings for optimal tree training.

    Args:
        max_depth: Maximum number of splits on any root-to-leaf path
        max_split_complexity: Maximum nonzero coefficients per split; 1 gives axis-aligned trees,
            ``None`` leaves hyperplane splits unrestricted
        alpha: Weight of the number of splits in the objective
        min_leaf: Minimum number of training rows in every leaf
        restarts: Number of independent local-search restarts
        max_local_search_passes: Upper bound on full passes over the tree per local search
        lookahead_limit: Largest ``rows * features`` at a node for the exhaustive depth-2 re-solve
        seed: Base seed of the restart substreams
        n_jobs: Worker threads used for restarts
    """

    max_depth: int = 3
    max_split_complexity: int | None = 1
    alpha: float = 0.0
    min_leaf: int = 1
    restarts: int = 20
    max_local_search_passes: int = 50
    lookahead_limit: int = 256
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.max_depth < 0:
            raise DomainError("max_depth must be nonnegative")
        if self.max_split_complexity is not None and self.max_split_complexity < 1:
            raise DomainError("max_split_complexity must be at least 1")
        if self.alpha < 0:
            raise DomainError("alpha must be nonnegative")
        if self.min_leaf < 1 or self.restarts < 1 or self.max_local_search_passes < 1:
            raise DomainError("min_leaf, restarts and max_local_search_passes must be at least 1")

    @property
    def hyperplanes(self) -> bool:
        return self.max_split_complexity is None or self.max_split_complexity > 1

    def sparsity_budget(self, n_features: int) -> int:
        if self.max_split_complexity is None:
            return n_features
        return min(self.max_split_complexity, n_features)

    def replace(self, **changes: Any) -> TrainConfig:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class MissionConfig:
    """Simulated mission with a degrading wing and obstacles.

    The default schedule degrades both regions linearly from ``start`` to ``end``
    over ``n_steps`` steps; ``trajectory`` overrides it with explicit per-step values.

    Args:
        n_steps: Number of timesteps
        start: True (mu1, mu2) at the first step, percent
        end: True (mu1, mu2) at the last step, percent
        trajectory: Optional explicit per-step (mu1, mu2) values
        threshold: Estimated reduction at or above which the aggressive manoeuvre is unsafe
        obstacle_steps: Steps at which an obstacle forces a path choice
        load_aggressive: Load factor of the aggressive path
        load_conservative: Load factor of the conservative path
        entropy_alert: Leaf-distribution entropy (nats) above which a step is flagged
        estimate: How a leaf distribution becomes a damage level: ``median`` takes
            the level minimizing expected absolute error, ``argmax`` the most
            probable level
        seed: Seed of the measurement noise
    """

    n_steps: int = 100
    start: tuple[float, float] = (0.0, 0.0)
    end: tuple[float, float] = (80.0, 80.0)
    trajectory: tuple[tuple[float, float], ...] | None = None
    threshold: float = 40.0
    obstacle_steps: tuple[int, ...] = (20, 55, 85)
    load_aggressive: float = 3.0
    load_conservative: float = 2.0
    entropy_alert: float = 1.0
    estimate: EstimateRule = "median"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise DomainError("A mission needs at least one step")
        if self.trajectory is not None and len(self.trajectory) != self.n_steps:
            raise DomainError("Explicit trajectory length must equal n_steps")
        if any(not 0 <= t < self.n_steps for t in self.obstacle_steps):
            raise DomainError("Obstacle steps must lie inside the mission")
        if self.load_aggressive <= 0 or self.load_conservative <= 0:
            raise DomainError("Load factors must be positive")
        if self.estimate not in ("median", "argmax"):
            raise DomainError(f"Unknown estimate rule {self.estimate!r}")

    def true_scenario(self, t: int) -> tuple[float, float]:
        if self.trajectory is not None:
            mu1, mu2 = self.trajectory[t]
            return float(mu1), float(mu2)
        frac = t / (self.n_steps - 1) if self.n_steps > 1 else 0.0
        return (
            self.start[0] + (self.end[0] - self.start[0]) * frac,
            self.start[1] + (self.end[1] - self.start[1]) * frac,
        )

    def replace(self, **changes: Any) -> MissionConfig:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class DatagenConfig:
    """Dataset generation protocol.

    Args:
        grid_values: Damage levels (percent) of the model library grid
        load_factor: Load factor at which training strains are computed
        samples: Noise draws per library model
        seed: Base seed of the noise substreams
        test_fraction: Held-out fraction of the stratified split
        layout: Sensor layout used for features
    """

    grid_values: tuple[float, ...] = DEFAULT_GRID_VALUES
    load_factor: float = 3.0
    samples: int = 100
    seed: int = 0
    test_fraction: float = 0.3
    layout: LayoutName = "installed"

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise DomainError("samples must be at least 1")
        if self.load_factor <= 0:
            raise DomainError("load_factor must be positive")
        if not 0.0 < self.test_fraction < 1.0:
            raise DomainError("test_fraction must lie strictly between 0 and 1")
        if self.layout not in ("installed", "candidate"):
            raise DomainError(f"Unknown layout {self.layout!r}")

    def replace(self, **changes: Any) -> DatagenConfig:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ProjectConfig:
    """Everything a run needs, as read from one JSON file.

    Args:
        plate: Plate surrogate configuration
        noise: Sensor noise model
        datagen: Dataset generation protocol
        train: Tree training settings
        mission: Mission simulation settings
    """

    plate: PlateConfig = field(default_factory=PlateConfig)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    datagen: DatagenConfig = field(default_factory=DatagenConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    mission: MissionConfig = field(default_factory=MissionConfig)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ProjectConfig:
        _reject_unknown(cls, data)
        plate_data = dict(data.get("plate", {}))
        _reject_unknown(PlateConfig, plate_data)
        if "material" in plate_data:
            plate_data["material"] = _build(MaterialConfig, plate_data["material"])
        if "damage_regions" in plate_data:
            plate_data["damage_regions"] = tuple(_build(DamageRegion, r) for r in plate_data["damage_regions"])
        return cls(
            plate=_build(PlateConfig, plate_data),
            noise=_build(NoiseSpec, data.get("noise", {})),
            datagen=_build(DatagenConfig, data.get("datagen", {})),
            train=_build(TrainConfig, data.get("train", {})),
            mission=_build(MissionConfig, data.get("mission", {})),
        )

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def _reject_unknown(cls: type, data: dict[str, Any]) -> None:
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise DomainError(f"Unknown {cls.__name__} keys: {sorted(unknown)}")


def _tupled(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


def _build(cls: type, data: Any) -> Any:
    if isinstance(data, cls):
        return data
    if not isinstance(data, dict):
        raise DomainError(f"Expected an object for {cls.__name__}, got {type(data).__name__}")
    _reject_unknown(cls, data)
    return cls(**{k: _tupled(v) for k, v in data.items()})


def load_config(path: str | Path | None) -> ProjectConfig:
    """Read a project configuration; ``None`` gives the shipped defaults."""
    if path is None:
        return ProjectConfig()
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise DomainError(f"Cannot read config {path}: {e}") from e
    return ProjectConfig.from_dict(data)
