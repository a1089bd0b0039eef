"""Held-out metrics and depth by split-complexity sweeps."""

from __future__ import annotations

import dataclasses
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any, cast

import numpy as np
import pandas as pd

from .config import TrainConfig
from .datagen import Dataset, Target
from .exceptions import InputError
from .learn import objective, train
from .model_library import ModelLibrary
from .tree import Tree

__all__ = (
    "EvalReport",
    "SweepCell",
    "SweepResult",
    "compose_predictions",
    "evaluate",
    "plot_sweep",
    "sequential_sensor_count",
    "sweep",
)

logger = logging.getLogger(__name__)

DEFAULT_SWEEP_DEPTHS: tuple[int, ...] = (3, 4, 5, 6)
DEFAULT_SWEEP_COMPLEXITIES: tuple[int | None, ...] = (1, 2, 4, None)


@dataclass(frozen=True)
class EvalReport:
    """Metrics of one tree on one dataset.

    Args:
        target: Parameter the tree estimates
        mae: Mean absolute error in percent stiffness reduction
        misclassification: Fraction of rows whose predicted class is wrong
        n_misclassified: Number of wrong rows
        n_rows: Rows evaluated
        used_gauges: Gauge ids appearing in any split
        depth: Tree depth
        n_splits: Number of splits
        split_complexity: Largest number of features in one split
    """

    target: str
    mae: float
    misclassification: float
    n_misclassified: int
    n_rows: int
    used_gauges: tuple[int, ...]
    depth: int
    n_splits: int
    split_complexity: int


def _predicted_values(tree: Tree, ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Predicted and true damage values, one column per parameter the target covers."""
    predicted = tree.predict(ds.X)
    if tree.target == "mu1":
        return predicted[:, None], ds.targets[:, :1]
    if tree.target == "mu2":
        return predicted[:, None], ds.targets[:, 1:]
    grid = ds.metadata.grid_values
    if not grid:
        raise InputError("Library-label evaluation needs the dataset's grid values")
    n = len(grid)
    labels = predicted.astype(np.int64)
    values = np.column_stack([np.asarray(grid)[labels // n], np.asarray(grid)[labels % n]])
    return values, ds.targets


def evaluate(tree: Tree, ds: Dataset, target: Target | None = None) -> EvalReport:
    """MAE and misclassification of ``tree`` on ``ds``.

    For a library-label tree the MAE averages both damage parameters.
    """
    if target is not None and target != tree.target:
        raise InputError(f"Tree estimates {tree.target!r}, not {target!r}")
    if tree.feature_names != ds.feature_names:
        raise InputError("Tree and dataset use different features")
    predicted, true = _predicted_values(tree, ds)
    wrong = tree.predict_index(ds.X) != ds.target_labels(cast(Target, tree.target))
    return EvalReport(
        target=tree.target,
        mae=float(np.abs(true - predicted).mean()) if len(ds) else 0.0,
        misclassification=float(wrong.mean()) if len(ds) else 0.0,
        n_misclassified=int(wrong.sum()),
        n_rows=len(ds),
        used_gauges=tuple(sorted(tree.used_gauges())),
        depth=tree.depth,
        n_splits=tree.n_splits,
        split_complexity=tree.max_sparsity(),
    )


def compose_predictions(tree_mu1: Tree, tree_mu2: Tree, X: np.ndarray, library: ModelLibrary) -> np.ndarray:
    """Library label of every row from a pair of per-parameter trees."""
    mu1 = tree_mu1.predict(X)
    mu2 = tree_mu2.predict(X)
    return np.array([library.label_from_levels(float(a), float(b)) for a, b in zip(mu1, mu2, strict=True)])


def sequential_sensor_count(tree: Tree, X: np.ndarray) -> float:
    """Mean number of gauges read per classification when gauges are read only as the path needs them."""
    X = np.atleast_2d(X)
    if X.shape[0] == 0:
        return 0.0
    return float(np.mean([len(tree.path_features(x)) for x in X]))


@dataclass(frozen=True, eq=False)
class SweepCell:
    depth: int
    complexity: int | None
    train: EvalReport
    test: EvalReport
    objective: float
    tree: Tree
    best_test: bool = False

    def row(self) -> dict[str, Any]:
        return {
            "depth": self.depth,
            "complexity": "unlimited" if self.complexity is None else self.complexity,
            "mae_train": self.train.mae,
            "mae_test": self.test.mae,
            "misclass_train": self.train.misclassification,
            "misclass_test": self.test.misclassification,
            "n_misclassified_train": self.train.n_misclassified,
            "n_features_used": len(self.train.used_gauges),
            "n_splits": self.train.n_splits,
            "objective": self.objective,
            "best_test": self.best_test,
        }


@dataclass(frozen=True, eq=False)
class SweepResult:
    target: str
    cells: tuple[SweepCell, ...]

    def cell(self, depth: int, complexity: int | None) -> SweepCell:
        for c in self.cells:
            if c.depth == depth and c.complexity == complexity:
                return c
        raise KeyError((depth, complexity))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([c.row() for c in self.cells])

    def to_csv(self, path: str | Path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")


def _complexity_key(c: int | None) -> float:
    return float("inf") if c is None else float(c)


def sweep(
    ds_train: Dataset,
    ds_test: Dataset,
    target: Target,
    depths: Sequence[int] = DEFAULT_SWEEP_DEPTHS,
    complexities: Sequence[int | None] = DEFAULT_SWEEP_COMPLEXITIES,
    cfg: TrainConfig | None = None,
) -> SweepResult:
    """Train and evaluate one tree per (depth, complexity) cell.

    Cells run in ascending order and every cell also warm-starts from the
    shallower cell and the simpler cell next to it, so the training objective
    never increases along either axis. Within each complexity the cell with the
    lowest test MAE (shallowest on ties) is flagged ``best_test``.
    """
    if not depths or not complexities:
        raise InputError("A sweep needs at least one depth and one complexity")
    cfg = cfg or TrainConfig()
    depths = sorted(set(depths))
    complexities = sorted(set(complexities), key=_complexity_key)
    trees: dict[tuple[int, int | None], Tree] = {}
    cells: list[SweepCell] = []
    for ci, complexity in enumerate(complexities):
        for di, depth in enumerate(depths):
            warm = [trees[(depths[di - 1], complexity)]] if di else []
            if ci:
                warm.append(trees[(depth, complexities[ci - 1])])
            cell_cfg = cfg.replace(max_depth=depth, max_split_complexity=complexity)
            try:
                tree = train(ds_train, cell_cfg, target, warm_starts=warm)
                cell = SweepCell(
                    depth,
                    complexity,
                    evaluate(tree, ds_train),
                    evaluate(tree, ds_test),
                    objective(tree, ds_train, cfg.alpha),
                    tree,
                )
            except Exception as e:
                e.add_note(f"in sweep cell depth={depth}, complexity={complexity}")
                raise
            trees[(depth, complexity)] = tree
            cells.append(cell)
            logger.info(
                "Sweep %s depth %d complexity %s: train MAE %.4g, test MAE %.4g",
                target,
                depth,
                complexity,
                cell.train.mae,
                cell.test.mae,
            )
    flagged: list[SweepCell] = []
    for complexity in complexities:
        column = [c for c in cells if c.complexity == complexity]
        best = min(column, key=lambda c: (c.test.mae, c.depth))
        flagged += [dataclasses.replace(c, best_test=c is best) for c in column]
    return SweepResult(target, tuple(flagged))


def plot_sweep(result: SweepResult, path: str | Path) -> None:
    """Train and test MAE against depth, one line per split complexity."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    frame = result.to_frame()
    fig, axs = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for complexity, group in frame.groupby("complexity", sort=False):
        for ax, column in zip(axs, ("mae_train", "mae_test"), strict=True):
            ax.plot(group["depth"], group[column], marker="o", label=f"complexity {complexity}")
    for ax, title in zip(axs, ("Training", "Testing"), strict=True):
        ax.set_title(f"{title} MAE ({result.target})")
        ax.set_xlabel("Maximum depth")
        ax.grid(True, alpha=0.3)
    axs[0].set_ylabel("MAE (% stiffness reduction)")
    axs[1].legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
