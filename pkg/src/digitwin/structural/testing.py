"""Testing utilities for digitwin.structural.

This module provides a forward-model test double, a brute-force tree oracle and
helpers that build small datasets without running the plate model.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Mapping, Sequence
from typing import Any

import numpy as np

from .datagen import Dataset, Target
from .model_library import DamageScenario, LoadCase, StrainField
from .sensor_layout import SensorLayout

__all__ = (
    "ForwardModelTestDouble",
    "axis_oracle",
    "random_dataset",
    "tiny_dataset",
)

StrainStub = Callable[[DamageScenario, SensorLayout], Mapping[int, float]]


class ForwardModelTestDouble:
    """A forward model that combines stubbing and spying capabilities.

    Stubbed strains are per unit load factor and scale linearly with the load
    factor of the requested load case, like the real plate.

    Example - Stubbing:
        >>> model = ForwardModelTestDouble()
        >>> model.stub_strain(DamageScenario(0, 0), {1: 100.0, 2: -50.0})
        >>> field = model.predict_strain(DamageScenario(0, 0), model.load_case(3.0), layout)
        >>> field.select([1])
        array([300.])

    Example - Spying:
        >>> model.predict_count
        1
        >>> model.last_scenario
        DamageScenario(mu1=0, mu2=0)
    """

    def __init__(self, reference_weight: float = 1.0) -> None:
        self.reference_weight = reference_weight

        self._stubbed: dict[tuple[float, float], dict[int, float]] = {}
        self._default: StrainStub | None = None

        self.predict_count: int = 0
        self.load_case_count: int = 0
        self.last_scenario: DamageScenario | None = None
        self.last_load: LoadCase | None = None
        self.all_predict_calls: list[dict[str, Any]] = []

    def stub_strain(self, scenario: DamageScenario, strain: Mapping[int, float]) -> None:
        """Pre-configure the unit-load strain of one scenario, by gauge id.

        Args:
            scenario: Scenario to stub
            strain: Microstrain per gauge id at load factor 1
        """
        self._stubbed[scenario.values] = dict(strain)

    def stub_all(self, fn: StrainStub) -> None:
        """Compute the unit-load strain of every unstubbed scenario with ``fn``.

        Args:
            fn: Maps a scenario and a layout to microstrain per gauge id at load factor 1
        """
        self._default = fn

    def load_case(self, load_factor: float) -> LoadCase:
        self.load_case_count += 1
        return LoadCase(load_factor, self.reference_weight)

    def predict_strain(self, scenario: DamageScenario, load: LoadCase, layout: SensorLayout) -> StrainField:
        """Return the stubbed strain scaled by the load factor and record the call.

        Raises:
            KeyError: If the scenario was not stubbed and no default is set
        """
        self.predict_count += 1
        self.last_scenario = scenario
        self.last_load = load
        self.all_predict_calls.append({"scenario": scenario, "load": load, "layout": layout.name})

        strain = self._stubbed.get(scenario.values)
        if strain is None:
            if self._default is None:
                raise KeyError(f"No strain stubbed for {scenario}. Use stub_strain() or stub_all().")
            strain = dict(self._default(scenario, layout))
        return StrainField(
            gauge_ids=tuple(g.id for g in layout),
            positions=tuple((g.x, g.y) for g in layout),
            microstrain=load.load_factor * np.array([strain.get(g.id, 0.0) for g in layout]),
        )

    def was_predicted(self, scenario: DamageScenario) -> bool:
        return any(call["scenario"] == scenario for call in self.all_predict_calls)

    def reset(self) -> None:
        """Reset all stubs and recorded calls."""
        self._stubbed.clear()
        self._default = None
        self.predict_count = 0
        self.load_case_count = 0
        self.last_scenario = None
        self.last_load = None
        self.all_predict_calls.clear()


def tiny_dataset(
    X: Sequence[Sequence[float]] | np.ndarray,
    y: Sequence[int] | np.ndarray,
    weights: Sequence[float] | np.ndarray | None = None,
    level_step: float = 20.0,
) -> Dataset:
    """Dataset whose library label is ``y`` and whose mu1 is ``level_step * y`` (mu2 is 0)."""
    X = np.asarray(X, dtype=float)
    labels = np.asarray(y, dtype=np.int64)
    targets = np.column_stack([level_step * labels, np.zeros(labels.shape[0])])
    return Dataset(
        X=X,
        labels=labels,
        targets=targets,
        weights=np.ones(labels.shape[0]) if weights is None else np.asarray(weights, dtype=float),
        feature_names=tuple(f"gauge_{j + 1}" for j in range(X.shape[1])),
    )


def random_dataset(rng: np.random.Generator, n: int, p: int, n_labels: int, distinct: int = 8) -> Dataset:
    """Small random dataset; feature values come from ``distinct`` levels so ties occur."""
    X = rng.integers(0, distinct, size=(n, p)).astype(float)
    y = rng.integers(0, n_labels, size=n)
    return tiny_dataset(X, y)


def _weighted_error(y: np.ndarray, w: np.ndarray, n_classes: int) -> float:
    if y.size == 0:
        return 0.0
    counts = np.bincount(y, weights=w, minlength=n_classes)
    return float(counts.sum() - counts.max())


def _thresholds(column: np.ndarray) -> np.ndarray:
    values = np.unique(column)
    return (values[:-1] + values[1:]) / 2.0


def _best_stump(X: np.ndarray, y: np.ndarray, w: np.ndarray, n_classes: int) -> float:
    best = _weighted_error(y, w, n_classes)
    for j in range(X.shape[1]):
        for t in _thresholds(X[:, j]):
            right = X[:, j] >= t
            err = _weighted_error(y[right], w[right], n_classes) + _weighted_error(y[~right], w[~right], n_classes)
            best = min(best, err)
    return best


def axis_oracle(ds: Dataset, max_depth: int = 2, target: Target = "label") -> float:
    """Lowest weighted misclassification of any axis tree of depth at most two.

    Enumerates every tree whose thresholds sit at midpoints between consecutive
    distinct feature values.
    """
    if max_depth not in (0, 1, 2):
        raise ValueError("The oracle enumerates trees of depth 0, 1 or 2")
    y = ds.target_labels(target)
    n_classes = len(ds.label_space(target))
    X, w = ds.X, ds.weights
    best = _weighted_error(y, w, n_classes)
    if max_depth == 0:
        return best / w.sum()
    for j, t in itertools.chain.from_iterable(
        ((j, t) for t in _thresholds(X[:, j])) for j in range(X.shape[1])
    ):
        right = X[:, j] >= t
        if max_depth == 1:
            err = _weighted_error(y[right], w[right], n_classes) + _weighted_error(y[~right], w[~right], n_classes)
        else:
            err = _best_stump(X[right], y[right], w[right], n_classes) + _best_stump(
                X[~right], y[~right], w[~right], n_classes
            )
        best = min(best, err)
    return best / w.sum()
