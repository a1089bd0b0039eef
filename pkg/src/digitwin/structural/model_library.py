from __future__ import annotations

import itertools
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Protocol

import numpy as np
import pandas as pd

from .config import DEFAULT_GRID_VALUES
from .exceptions import DomainError

if TYPE_CHECKING:
    from .sensor_layout import SensorLayout

__all__ = (
    "DamageScenario",
    "ForwardModel",
    "LoadCase",
    "ModelLibrary",
    "StrainField",
    "build_library",
)


@dataclass(frozen=True, order=True)
class DamageScenario:
    """Percentage stiffness reductions of the two damage regions.

    Args:
        mu1: Reduction in region 1, percent
        mu2: Reduction in region 2, percent
    """

    mu1: float
    mu2: float

    def __post_init__(self) -> None:
        for mu in (self.mu1, self.mu2):
            if not 0.0 <= mu <= 100.0:
                raise DomainError(f"Stiffness reduction {mu} outside [0, 100]")

    @property
    def values(self) -> tuple[float, float]:
        return (self.mu1, self.mu2)

    def check_solvable(self) -> None:
        if self.mu1 >= 100.0 or self.mu2 >= 100.0:
            raise DomainError(f"{self} removes all stiffness from a damage region")


@dataclass(frozen=True)
class ModelLibrary:
    """The finite set of candidate structural states; a scenario's index is its label."""

    grid_values: tuple[float, ...]
    scenarios: tuple[DamageScenario, ...]

    def __len__(self) -> int:
        return len(self.scenarios)

    def __iter__(self) -> Iterator[DamageScenario]:
        return iter(self.scenarios)

    def __getitem__(self, label: int) -> DamageScenario:
        return self.scenarios[label]

    def label_of(self, scenario: DamageScenario) -> int:
        return self.scenarios.index(scenario)

    def label_from_levels(self, mu1: float, mu2: float) -> int:
        n = len(self.grid_values)
        return self.grid_values.index(mu1) * n + self.grid_values.index(mu2)


def build_library(grid_values: Sequence[float] = DEFAULT_GRID_VALUES) -> ModelLibrary:
    """Cartesian-product library over the damage levels, row-major in (mu1, mu2)."""
    levels = tuple(float(v) for v in grid_values)
    if not levels:
        raise DomainError("A model library needs at least one damage level")
    if any(not 0.0 <= v < 100.0 for v in levels):
        raise DomainError(f"Damage levels must lie in [0, 100), got {levels}")
    if list(levels) != sorted(set(levels)):
        raise DomainError(f"Damage levels must be strictly ascending, got {levels}")
    scenarios = tuple(DamageScenario(a, b) for a, b in itertools.product(levels, levels))
    return ModelLibrary(grid_values=levels, scenarios=scenarios)


@dataclass(frozen=True)
class LoadCase:
    """Manoeuvre load: total lift is ``load_factor * reference_weight``.

    Args:
        load_factor: Lift over weight (dimensionless)
        reference_weight: Aircraft weight (force)
    """

    load_factor: float
    reference_weight: float

    @property
    def total_lift(self) -> float:
        return self.load_factor * self.reference_weight


@dataclass(frozen=True)
class StrainField:
    """Predicted spanwise strain per gauge, microstrain, compression positive."""

    gauge_ids: tuple[int, ...]
    positions: tuple[tuple[float, float], ...]
    microstrain: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "gauge_id": self.gauge_ids,
                "x": [p[0] for p in self.positions],
                "y": [p[1] for p in self.positions],
                "microstrain": self.microstrain,
            }
        )

    def to_csv(self, path: str | Path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    def select(self, gauge_ids: Sequence[int]) -> np.ndarray:
        index = {g: i for i, g in enumerate(self.gauge_ids)}
        return np.asarray([self.microstrain[index[g]] for g in gauge_ids])


class ForwardModel(Protocol):
    """Maps a structural state and a manoeuvre to gauge strains.

    Implementations can be the plate surrogate (``PlateModel``) or a test double.
    """

    def load_case(self, load_factor: float) -> LoadCase:
        """Build the load case of a manoeuvre at the given load factor."""
        ...

    def predict_strain(self, scenario: DamageScenario, load: LoadCase, layout: SensorLayout) -> StrainField:
        """Strain at every gauge of the layout.

        Args:
            scenario: Structural state, possibly between library grid points
            load: Applied manoeuvre load
            layout: Gauges to read

        Returns:
            The strain field, one value per gauge in layout order
        """
        ...
