"""Classification trees with axis-aligned and hyperplane splits.

A branch sends a point right when ``a . x >= b`` and left otherwise. Leaves keep
the weighted class counts of the training rows that reached them, so every
prediction also carries a distribution over the label space.
"""

from __future__ import annotations

import dataclasses
import json
import math
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np

from .exceptions import ArtifactError, InputError

__all__ = (
    "Branch",
    "Explanation",
    "Leaf",
    "LeafDistribution",
    "Node",
    "PathStep",
    "Split",
    "TieBreak",
    "Tree",
    "assign_leaves",
)

TieBreak = Literal["lowest", "most_damaged"]

_TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Split:
    """Linear test ``sum(coefficients[k] * x[features[k]]) >= threshold``.

    Args:
        features: Feature indices with nonzero coefficients, ascending
        coefficients: One nonzero coefficient per feature
        threshold: Right-hand side ``b``
    """

    features: tuple[int, ...]
    coefficients: tuple[float, ...]
    threshold: float

    def __post_init__(self) -> None:
        if not self.features or len(self.features) != len(self.coefficients):
            raise InputError("A split needs one coefficient per feature and at least one feature")
        if list(self.features) != sorted(set(self.features)):
            raise InputError("Split features must be unique and ascending")
        if any(c == 0.0 or not math.isfinite(c) for c in self.coefficients) or not math.isfinite(self.threshold):
            raise InputError("Split coefficients must be finite and nonzero")

    @classmethod
    def axis(cls, feature: int, threshold: float) -> Split:
        return cls((feature,), (1.0,), float(threshold))

    @classmethod
    def from_coefficients(cls, coefficients: Mapping[int, float], threshold: float) -> tuple[Split, bool]:
        """Build a split from a sparse coefficient map, normalizing a single-feature split.

        Returns:
            The split and whether the children must be swapped to keep the same routing
        """
        items = sorted((int(j), float(c)) for j, c in coefficients.items() if c != 0.0)
        if len(items) == 1:
            j, c = items[0]
            # a negative coefficient reverses the inequality
            return cls.axis(j, threshold / c), c < 0
        return cls(tuple(j for j, _ in items), tuple(c for _, c in items), float(threshold)), False

    @property
    def sparsity(self) -> int:
        return len(self.features)

    @property
    def is_axis(self) -> bool:
        return self.sparsity == 1

    def coefficient_map(self) -> dict[int, float]:
        return dict(zip(self.features, self.coefficients, strict=True))

    def project(self, X: np.ndarray) -> np.ndarray:
        return X[..., list(self.features)] @ np.asarray(self.coefficients)

    def goes_right(self, X: np.ndarray) -> np.ndarray:
        return self.project(X) >= self.threshold

    def describe(self, feature_names: Sequence[str]) -> str:
        if self.is_axis and self.coefficients[0] == 1.0:
            lhs = feature_names[self.features[0]]
        else:
            lhs = " + ".join(
                f"{c:.6g}*{feature_names[j]}" for j, c in zip(self.features, self.coefficients, strict=True)
            )
        return f"{lhs} < {self.threshold:.6g}"


@dataclass(frozen=True, eq=False)
class Leaf:
    """Terminal node.

    Args:
        counts: Weighted class counts of the training rows routed here
        n_rows: Number of training rows routed here
    """

    counts: np.ndarray
    n_rows: int = 0

    @property
    def total(self) -> float:
        return float(self.counts.sum())


@dataclass(frozen=True, eq=False)
class Branch:
    split: Split
    left: Node
    right: Node


Node = Leaf | Branch


@dataclass(frozen=True, eq=False)
class LeafDistribution:
    """Probability over the label space of the leaf a point lands in."""

    probabilities: np.ndarray
    label_space: tuple[float, ...]

    def argmax(self, tie_break: TieBreak = "lowest") -> int:
        best = self.probabilities.max()
        tied = np.flatnonzero(self.probabilities >= best - _TIE_TOLERANCE)
        return int(tied[0] if tie_break == "lowest" else tied[-1])

    def median(self) -> int:
        """Index of the lowest level whose cumulative probability reaches one half."""
        cumulative = np.cumsum(self.probabilities)
        return int(np.flatnonzero(cumulative >= 0.5 - _TIE_TOLERANCE)[0])

    def expected_value(self) -> float:
        return float(self.probabilities @ np.asarray(self.label_space))

    def entropy(self) -> float:
        """Shannon entropy in nats."""
        p = self.probabilities[self.probabilities > 0]
        return float(-(p * np.log(p)).sum())

    def as_dict(self) -> dict[float, float]:
        return {v: float(p) for v, p in zip(self.label_space, self.probabilities, strict=True)}


def _distribution(counts: np.ndarray) -> np.ndarray:
    total = counts.sum()
    if total <= 0:
        return np.full(counts.shape, 1.0 / counts.size)
    return counts / total


@dataclass(frozen=True)
class PathStep:
    """One branch on a decision path."""

    description: str
    value: float
    branch: Literal["left", "right"]
    features: tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.description} (observed {self.value:.6g}) -> {self.branch}"


@dataclass(frozen=True)
class Explanation:
    steps: tuple[PathStep, ...]
    distribution: LeafDistribution
    label: float

    def lines(self) -> list[str]:
        out = [str(step) for step in self.steps]
        probs = ", ".join(f"{v:g}: {p:.3f}" for v, p in self.distribution.as_dict().items() if p > 0)
        out.append(f"leaf -> {self.label:g} [{probs}]")
        return out


@dataclass(frozen=True, eq=False)
class Tree:
    """An immutable trained classification tree.

    Args:
        root: Root node
        label_space: Class values, indexed by class position in the leaf counts
        feature_names: Names of the input columns, ``gauge_<id>``
        target: What the classes are (``label``, ``mu1`` or ``mu2``)
        tie_break: Which class wins when leaf probabilities tie
        metadata: Free-form provenance, e.g. training config and objective
    """

    root: Node
    label_space: tuple[float, ...]
    feature_names: tuple[str, ...]
    target: str = "label"
    tie_break: TieBreak = "lowest"
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return len(self.label_space)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def depth(self) -> int:
        return _depth(self.root)

    @property
    def n_splits(self) -> int:
        return sum(1 for node in _walk(self.root) if isinstance(node, Branch))

    def leaves(self) -> list[Leaf]:
        return [node for node in _walk(self.root) if isinstance(node, Leaf)]

    def splits(self) -> list[Split]:
        return [node.split for node in _walk(self.root) if isinstance(node, Branch)]

    def max_sparsity(self) -> int:
        return max((s.sparsity for s in self.splits()), default=0)

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.n_features:
            raise InputError(f"Expected {self.n_features} features, got {X.shape[-1]}")
        if not np.all(np.isfinite(X)):
            raise InputError("Features must be finite")
        return X

    def _leaf_for(self, x: np.ndarray) -> tuple[Leaf, list[PathStep]]:
        node = self.root
        steps: list[PathStep] = []
        while isinstance(node, Branch):
            value = float(node.split.project(x))
            right = value >= node.split.threshold
            steps.append(
                PathStep(
                    node.split.describe(self.feature_names), value, "right" if right else "left", node.split.features
                )
            )
            node = node.right if right else node.left
        return node, steps

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Index, in depth-first order, of the leaf every row lands in."""
        X = self._check(np.atleast_2d(X))
        out = np.empty(X.shape[0], dtype=np.int64)
        _route(self.root, X, np.arange(X.shape[0]), out, 0)
        return out

    def leaf_distributions(self) -> np.ndarray:
        return np.array([_distribution(leaf.counts) for leaf in self.leaves()])

    def leaf_classes(self) -> np.ndarray:
        return np.array(
            [LeafDistribution(p, self.label_space).argmax(self.tie_break) for p in self.leaf_distributions()],
            dtype=np.int64,
        )

    def predict_index(self, X: np.ndarray) -> np.ndarray:
        """Class position of every row."""
        return self.leaf_classes()[self.apply(X)]

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Class value of every row."""
        return np.asarray(self.label_space)[self.predict_index(X)]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.leaf_distributions()[self.apply(X)]

    def classify(self, x: np.ndarray) -> float:
        return self.label_space[self.classify_proba(x).argmax(self.tie_break)]

    def classify_proba(self, x: np.ndarray) -> LeafDistribution:
        leaf, _ = self._leaf_for(self._check(x))
        return LeafDistribution(_distribution(leaf.counts), self.label_space)

    def explain(self, x: np.ndarray) -> Explanation:
        """The branches a point takes, root first, and the leaf it reaches."""
        leaf, steps = self._leaf_for(self._check(x))
        dist = LeafDistribution(_distribution(leaf.counts), self.label_space)
        return Explanation(tuple(steps), dist, self.label_space[dist.argmax(self.tie_break)])

    def used_features(self) -> set[int]:
        return {j for s in self.splits() for j in s.features}

    def used_gauges(self) -> set[int]:
        return {int(self.feature_names[j].removeprefix("gauge_")) for j in self.used_features()}

    def path_features(self, x: np.ndarray) -> tuple[int, ...]:
        """Features read while classifying ``x``, in reading order and without repeats."""
        _, steps = self._leaf_for(self._check(x))
        seen: dict[int, None] = {}
        for step in steps:
            seen.update(dict.fromkeys(step.features))
        return tuple(seen)

    def with_tie_break(self, tie_break: TieBreak) -> Tree:
        return dataclasses.replace(self, tie_break=tie_break)

    def map_labels(self, mapping: Sequence[int], label_space: Sequence[float], target: str | None = None) -> Tree:
        """Merge classes: old class ``k`` becomes new class ``mapping[k]``, with leaf counts summed."""
        if len(mapping) != self.n_classes:
            raise InputError("Label mapping must cover every class")
        index = np.asarray(mapping, dtype=np.int64)
        size = len(label_space)

        def _merge(node: Node) -> Node:
            if isinstance(node, Leaf):
                return Leaf(np.bincount(index, weights=node.counts, minlength=size), node.n_rows)
            return Branch(node.split, _merge(node.left), _merge(node.right))

        return dataclasses.replace(
            self, root=_merge(self.root), label_space=tuple(float(v) for v in label_space), target=target or self.target
        )

    def remap_features(self, feature_names: Sequence[str]) -> Tree:
        """Re-express the splits over another feature table that contains every used feature."""
        names = tuple(feature_names)
        try:
            index = {j: names.index(self.feature_names[j]) for j in self.used_features()}
        except ValueError as e:
            raise InputError(f"Feature table lacks a feature used by the tree: {e}") from e

        def _remap(node: Node) -> Node:
            if isinstance(node, Leaf):
                return node
            coefs = {index[j]: c for j, c in node.split.coefficient_map().items()}
            items = sorted(coefs.items())
            split = Split(tuple(j for j, _ in items), tuple(c for _, c in items), node.split.threshold)
            return Branch(split, _remap(node.left), _remap(node.right))

        return dataclasses.replace(self, root=_remap(self.root), feature_names=names)

    def to_dict(self) -> dict[str, Any]:
        return {
            "feature_names": list(self.feature_names),
            "label_space": list(self.label_space),
            "target": self.target,
            "tie_break": self.tie_break,
            "metadata": self.metadata,
            "root": _node_to_dict(self.root),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> Tree:
        try:
            return cls(
                root=_node_from_dict(data["root"]),
                label_space=tuple(float(v) for v in data["label_space"]),
                feature_names=tuple(data["feature_names"]),
                target=data.get("target", "label"),
                tie_break=data.get("tie_break", "lowest"),
                metadata=dict(data.get("metadata", {})),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ArtifactError(f"Malformed tree document: {e}") from e

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> Tree:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ArtifactError(f"Cannot read tree {path}: {e}") from e
        return cls.from_dict(data)


def _walk(node: Node) -> Iterator[Node]:
    yield node
    if isinstance(node, Branch):
        yield from _walk(node.left)
        yield from _walk(node.right)


def _depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(_depth(node.left), _depth(node.right))


def _route(node: Node, X: np.ndarray, rows: np.ndarray, out: np.ndarray, first_leaf: int) -> int:
    """Write leaf indices for ``rows`` into ``out``; returns the number of leaves under ``node``."""
    if isinstance(node, Leaf):
        out[rows] = first_leaf
        return 1
    right = node.split.goes_right(X[rows])
    n_left = _route(node.left, X, rows[~right], out, first_leaf)
    n_right = _route(node.right, X, rows[right], out, first_leaf + n_left)
    return n_left + n_right


def _node_to_dict(node: Node) -> dict[str, Any]:
    if isinstance(node, Leaf):
        return {"counts": node.counts.tolist(), "n_rows": node.n_rows}
    return {
        "features": list(node.split.features),
        "coefficients": list(node.split.coefficients),
        "threshold": node.split.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(data: Mapping[str, Any]) -> Node:
    if "counts" in data:
        return Leaf(np.asarray(data["counts"], dtype=float), int(data.get("n_rows", 0)))
    split = Split(
        tuple(int(j) for j in data["features"]),
        tuple(float(c) for c in data["coefficients"]),
        float(data["threshold"]),
    )
    return Branch(split, _node_from_dict(data["left"]), _node_from_dict(data["right"]))


def assign_leaves(node: Node, X: np.ndarray) -> tuple[np.ndarray, int]:
    """Depth-first leaf index of every row of ``X`` under ``node``, and the number of leaves."""
    out = np.empty(X.shape[0], dtype=np.int64)
    n_leaves = _route(node, X, np.arange(X.shape[0]), out, 0)
    return out, n_leaves
