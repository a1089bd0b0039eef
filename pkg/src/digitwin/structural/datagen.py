"""Noisy, load-normalized training data from the model library."""

from __future__ import annotations

import dataclasses
import json
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split

from .config import NoiseSpec
from .exceptions import DomainError, InputError, StratificationError
from .model_library import DamageScenario, ForwardModel, LoadCase, ModelLibrary
from .parallel import map_ordered
from .sensor_layout import SensorLayout

__all__ = (
    "Dataset",
    "DatasetMetadata",
    "Target",
    "append_records",
    "generate",
    "load_normalize",
    "read_dataset",
    "risk_weights",
    "split",
    "write_dataset",
)

logger = logging.getLogger(__name__)

Target = Literal["label", "mu1", "mu2"]


@dataclass(frozen=True)
class DatasetMetadata:
    """Provenance of a generated dataset, written as a JSON sidecar."""

    layout: str = "custom"
    layout_hash: str = ""
    gauge_ids: tuple[int, ...] = ()
    grid_values: tuple[float, ...] = ()
    load_factor: float = 1.0
    variance: float = 0.0
    seed: int = 0
    samples: int = 0
    extra: dict[str, Any] = field(default_factory=dict, hash=False)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> DatasetMetadata:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"Unknown dataset metadata keys: {sorted(unknown)}")
        values = dict(data)
        for key in ("gauge_ids", "grid_values"):
            if key in values:
                values[key] = tuple(values[key])
        return cls(**values)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with library labels, damage targets and sample weights.

    Args:
        X: Load-normalized strains, shape (n, p)
        labels: Library index of each row
        targets: (mu1, mu2) of each row, percent, shape (n, 2)
        weights: Nonnegative sample weights
        feature_names: Column names, ``gauge_<id>`` per usable gauge
        metadata: Provenance
    """

    X: np.ndarray
    labels: np.ndarray
    targets: np.ndarray
    weights: np.ndarray
    feature_names: tuple[str, ...]
    metadata: DatasetMetadata = field(default_factory=DatasetMetadata)

    def __post_init__(self) -> None:
        n = self.X.shape[0]
        if self.X.ndim != 2 or self.X.shape[1] != len(self.feature_names):
            raise InputError(f"Feature matrix of shape {self.X.shape} does not match {len(self.feature_names)} names")
        if self.labels.shape != (n,) or self.targets.shape != (n, 2) or self.weights.shape != (n,):
            raise InputError("labels, targets and weights must have one entry per row")
        if not np.all(np.isfinite(self.X)):
            raise InputError("Features must be finite")
        if np.any(self.weights < 0):
            raise InputError("Sample weights must be nonnegative")
        if n and not self.weights.sum() > 0:
            raise InputError("Sample weights must not all be zero")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def gauge_ids(self) -> tuple[int, ...]:
        return tuple(int(name.removeprefix("gauge_")) for name in self.feature_names)

    def subset(self, rows: np.ndarray | Sequence[int]) -> Dataset:
        idx = np.asarray(rows, dtype=np.int64)
        return dataclasses.replace(
            self, X=self.X[idx], labels=self.labels[idx], targets=self.targets[idx], weights=self.weights[idx]
        )

    def with_weights(self, weights: np.ndarray) -> Dataset:
        return dataclasses.replace(self, weights=np.asarray(weights, dtype=float))

    def select_features(self, gauge_ids: Sequence[int]) -> Dataset:
        """Restrict to the given gauges, in the given order."""
        names = [f"gauge_{g}" for g in gauge_ids]
        try:
            cols = [self.feature_names.index(name) for name in names]
        except ValueError as e:
            raise InputError(f"Dataset has no feature for one of {list(gauge_ids)}") from e
        return dataclasses.replace(self, X=self.X[:, cols], feature_names=tuple(names))

    def concat(self, other: Dataset) -> Dataset:
        if other.feature_names != self.feature_names:
            raise InputError("Cannot concatenate datasets with different features")
        return dataclasses.replace(
            self,
            X=np.vstack([self.X, other.X]),
            labels=np.concatenate([self.labels, other.labels]),
            targets=np.vstack([self.targets, other.targets]),
            weights=np.concatenate([self.weights, other.weights]),
        )

    def label_space(self, target: Target = "label") -> tuple[float, ...]:
        """Class values of a target: library indices, or the damage levels of one parameter."""
        if target == "label":
            n_levels = len(self.metadata.grid_values)
            if n_levels:
                return tuple(float(i) for i in range(n_levels * n_levels))
            return tuple(float(v) for v in np.unique(self.labels))
        if self.metadata.grid_values:
            return self.metadata.grid_values
        column = 0 if target == "mu1" else 1
        return tuple(float(v) for v in np.unique(self.targets[:, column]))

    def target_labels(self, target: Target = "label") -> np.ndarray:
        """Class index of every row for the given target."""
        space = self.label_space(target)
        if target == "label":
            values = self.labels.astype(float)
        elif target in ("mu1", "mu2"):
            values = self.targets[:, 0 if target == "mu1" else 1]
        else:
            raise InputError(f"Unknown target {target!r}")
        lookup = {v: i for i, v in enumerate(space)}
        try:
            return np.array([lookup[float(v)] for v in values], dtype=np.int64)
        except KeyError as e:
            raise InputError(f"Row value {e.args[0]} is not one of the {target} classes {space}") from e

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.X, columns=list(self.feature_names))
        frame["mu1"] = self.targets[:, 0]
        frame["mu2"] = self.targets[:, 1]
        frame["label"] = self.labels
        frame["weight"] = self.weights
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, metadata: DatasetMetadata | None = None) -> Dataset:
        missing = {"mu1", "mu2", "label"} - set(frame.columns)
        if missing:
            raise InputError(f"Dataset is missing columns {sorted(missing)}")
        names = tuple(c for c in frame.columns if c.startswith("gauge_"))
        if not names:
            raise InputError("Dataset has no gauge_<id> feature columns")
        weights = frame["weight"].to_numpy(dtype=float) if "weight" in frame else np.ones(len(frame))
        return cls(
            X=frame[list(names)].to_numpy(dtype=float),
            labels=frame["label"].to_numpy(dtype=np.int64),
            targets=frame[["mu1", "mu2"]].to_numpy(dtype=float),
            weights=weights,
            feature_names=names,
            metadata=metadata or DatasetMetadata(),
        )


def load_normalize(raw_strain: np.ndarray, load_factor: float) -> np.ndarray:
    """Divide measured strain by the load factor flown."""
    if load_factor == 0:
        raise DomainError("Cannot normalize by a zero load factor")
    return np.asarray(raw_strain, dtype=float) / load_factor


def _noise_rows(seed: int, label: int, samples: int, layout: SensorLayout, std: float) -> np.ndarray:
    # one draw per gauge id from 1 to max_id, so a gauge id sees the same noise in every layout
    columns = np.array(layout.usable_ids) - 1
    rows = np.empty((samples, len(columns)))
    for k in range(samples):
        rng = np.random.default_rng(np.random.SeedSequence([seed, label, k]))
        rows[k] = rng.standard_normal(layout.max_id)[columns]
    return std * rows


def generate(
    model: ForwardModel,
    library: ModelLibrary,
    layout: SensorLayout,
    load: LoadCase,
    noise: NoiseSpec,
    samples: int,
    seed: int,
    n_jobs: int = 1,
) -> Dataset:
    """Noisy load-normalized strain rows, ``samples`` per library scenario.

    Row ``(j, k)`` is ``(strain(M_j, L) + v) / L`` where ``v`` is drawn from the
    substream ``SeedSequence([seed, j, k])``; output does not depend on ``n_jobs``.
    """
    if samples < 1:
        raise DomainError("samples must be at least 1")
    if load.load_factor <= 0:
        raise DomainError("Training data needs a positive load factor")
    usable = layout.usable_ids
    if not usable:
        raise InputError(f"Layout {layout.name!r} has no usable gauges")

    def _scenario_rows(label: int) -> np.ndarray:
        strain = model.predict_strain(library[label], load, layout).select(usable)
        return load_normalize(strain[None, :] + _noise_rows(seed, label, samples, layout, noise.std), load.load_factor)

    blocks = map_ordered(_scenario_rows, list(range(len(library))), max_workers=n_jobs)
    labels = np.repeat(np.arange(len(library), dtype=np.int64), samples)
    targets = np.array([library[j].values for j in labels], dtype=float).reshape(-1, 2)
    ds = Dataset(
        X=np.vstack(blocks),
        labels=labels,
        targets=targets,
        weights=np.ones(labels.shape[0]),
        feature_names=layout.feature_names,
        metadata=DatasetMetadata(
            layout=layout.name,
            layout_hash=layout.layout_hash(),
            gauge_ids=usable,
            grid_values=library.grid_values,
            load_factor=load.load_factor,
            variance=noise.variance,
            seed=seed,
            samples=samples,
        ),
    )
    logger.info(
        "Generated %d rows x %d features (%s layout, L=%g, variance=%g, seed=%d)",
        len(ds),
        ds.n_features,
        layout.name,
        load.load_factor,
        noise.variance,
        seed,
    )
    return ds


def split(ds: Dataset, test_fraction: float = 0.3, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Stratified train/test split by library label; row order is preserved on each side."""
    if not 0.0 < test_fraction < 1.0:
        raise DomainError("test_fraction must lie strictly between 0 and 1")
    _, counts = np.unique(ds.labels, return_counts=True)
    if counts.size == 0 or counts.min() < 2:
        raise StratificationError("Every label needs at least two rows for a stratified split")
    try:
        train_idx, test_idx = train_test_split(
            np.arange(len(ds)), test_size=test_fraction, random_state=seed, stratify=ds.labels
        )
    except ValueError as e:
        raise StratificationError(str(e)) from e
    return ds.subset(np.sort(train_idx)), ds.subset(np.sort(test_idx))


def risk_weights(
    ds: Dataset,
    threshold: float = 40.0,
    high_weight: float = 2.0,
    score: Callable[[DamageScenario], float] | None = None,
) -> Dataset:
    """Reweight rows by the risk of their scenario.

    By default rows whose larger damage parameter reaches ``threshold`` get
    ``high_weight`` and every other row 1. ``score`` may map a (mu1, mu2) pair to a
    custom weight instead.
    """
    if score is not None:
        weights = np.array([float(score(DamageScenario(float(a), float(b)))) for a, b in ds.targets])
    else:
        weights = np.where(ds.targets.max(axis=1) >= threshold, high_weight, 1.0)
    return ds.with_weights(weights)


def write_dataset(ds: Dataset, path: str | Path) -> None:
    """Write the CSV and its ``.json`` metadata sidecar."""
    path = Path(path)
    ds.to_frame().to_csv(path, index=False, float_format="%.17g")
    path.with_suffix(".json").write_text(json.dumps(ds.metadata.to_dict(), indent=2, sort_keys=True))


def read_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise InputError(f"Cannot read dataset {path}: {e}") from e
    sidecar = path.with_suffix(".json")
    metadata = DatasetMetadata.from_dict(json.loads(sidecar.read_text())) if sidecar.exists() else None
    return Dataset.from_frame(frame, metadata)


def append_records(ds: Dataset, records: str | Path | pd.DataFrame, weight: float | None = None) -> Dataset:
    """Append historical or experimental rows that use the dataset's CSV schema.

    Args:
        ds: Dataset to extend
        records: CSV path or frame with the same ``gauge_<id>`` columns
        weight: Overrides the weight of every appended row when given
    """
    frame = records if isinstance(records, pd.DataFrame) else pd.read_csv(records, float_precision="round_trip")
    extra = Dataset.from_frame(frame, ds.metadata)
    if weight is not None:
        extra = extra.with_weights(np.full(len(extra), float(weight)))
    logger.info("Appending %d records to a dataset of %d rows", len(extra), len(ds))
    return ds.concat(extra)
