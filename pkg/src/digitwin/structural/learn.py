"""Optimal classification tree training.

Trees minimize ``R(T) + alpha * splits`` where ``R`` is the weighted
misclassified fraction of the training data. Training starts from greedy Gini
trees and improves every node by local search until no move lowers the
objective. Hyperplane trees continue from the axis-aligned solution of the
same restart, so they are never worse than it.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, cast

import numpy as np

from .config import TrainConfig
from .datagen import Dataset, Target
from .exceptions import InputError
from .parallel import map_ordered
from .tree import Branch, Leaf, Node, Split, TieBreak, Tree, assign_leaves

__all__ = (
    "RestartRecord",
    "TrainingReport",
    "greedy_init",
    "local_search",
    "objective",
    "train",
    "train_report",
)

logger = logging.getLogger(__name__)

IMPROVEMENT_TOLERANCE = 1e-12

Path_ = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class _Problem:
    X: np.ndarray
    y: np.ndarray
    w: np.ndarray
    n_classes: int
    cfg: TrainConfig

    @property
    def total_weight(self) -> float:
        return float(self.w.sum())

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def axis_only(self) -> _Problem:
        return dataclasses.replace(self, cfg=self.cfg.replace(max_split_complexity=1))


def _problem(ds: Dataset, cfg: TrainConfig, target: Target) -> _Problem:
    if len(ds) == 0:
        raise InputError("Cannot train on an empty dataset")
    y = ds.target_labels(target)
    return _Problem(ds.X, y, ds.weights, len(ds.label_space(target)), cfg)


def _placeholder(k: int) -> Leaf:
    return Leaf(np.zeros(k))


def _n_splits(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + _n_splits(node.left) + _n_splits(node.right)


def _depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(_depth(node.left), _depth(node.right))


def _cost(prob: _Problem, node: Node, rows: np.ndarray) -> float:
    """Contribution of a subtree to the objective; ``inf`` when a leaf gets too few rows."""
    ids, n_leaves = assign_leaves(node, prob.X[rows])
    sizes = np.bincount(ids, minlength=n_leaves)
    if sizes.min() < prob.cfg.min_leaf:
        return math.inf
    counts = np.zeros((n_leaves, prob.n_classes))
    np.add.at(counts, (ids, prob.y[rows]), prob.w[rows])
    error = float((counts.sum(axis=1) - counts.max(axis=1)).sum())
    return error / prob.total_weight + prob.cfg.alpha * _n_splits(node)


def _leaf_error(counts: np.ndarray) -> np.ndarray:
    return (counts.sum(axis=-1) - counts.max(axis=-1)).sum(axis=-1)


def _cumulative(index: np.ndarray, width: int, mask: np.ndarray, values: np.ndarray) -> np.ndarray:
    n = index.shape[0]
    contrib = np.zeros((n, width))
    rows = np.flatnonzero(mask)
    contrib[rows, index[rows]] = values[rows]
    out = np.zeros((n + 1, width))
    np.cumsum(contrib, axis=0, out=out[1:])
    return out


@dataclass(frozen=True, eq=False)
class _Sides:
    """Leaf each row would reach if sent into the left or the right subtree."""

    left: np.ndarray
    right: np.ndarray
    n_left: int
    n_right: int


def _sides(prob: _Problem, rows: np.ndarray, left: Node | None, right: Node | None) -> _Sides:
    Xr = prob.X[rows]
    zeros = np.zeros(rows.shape[0], dtype=np.int64)
    leaf_l, n_l = assign_leaves(left, Xr) if left is not None else (zeros, 1)
    leaf_r, n_r = assign_leaves(right, Xr) if right is not None else (zeros, 1)
    return _Sides(leaf_l, leaf_r, n_l, n_r)


def _sweep(
    prob: _Problem,
    keys: np.ndarray,
    moves_right: np.ndarray,
    rows: np.ndarray,
    sides: _Sides,
    fixed_right: np.ndarray | None = None,
    fixed_rows: np.ndarray | None = None,
    fixed_sides: _Sides | None = None,
) -> np.ndarray:
    """Weighted training error for every cut position ``m = 0..n`` along sorted ``keys``.

    At cut ``m`` a row at sorted position ``i`` goes right iff ``moves_right[i] == (i < m)``;
    with every ``moves_right`` false this is the usual "first ``m`` rows go left" sweep.
    Rows in ``fixed_rows`` keep the side given by ``fixed_right`` at every cut.
    Infeasible cuts and cuts between equal keys cost ``inf``.
    """
    k = prob.n_classes
    n = keys.shape[0]
    y, w = prob.y[rows], prob.w[rows]
    ones = np.ones(n)
    pos, neg = moves_right, ~moves_right
    li = sides.left * k + y
    ri = sides.right * k + y
    wl, wr = sides.n_left * k, sides.n_right * k

    def _tail(cum: np.ndarray) -> np.ndarray:
        return cum[-1] - cum

    left_w = _cumulative(li, wl, neg, w) + _tail(_cumulative(li, wl, pos, w))
    right_w = _cumulative(ri, wr, pos, w) + _tail(_cumulative(ri, wr, neg, w))
    left_n = _cumulative(sides.left, sides.n_left, neg, ones) + _tail(_cumulative(sides.left, sides.n_left, pos, ones))
    right_n = _cumulative(sides.right, sides.n_right, pos, ones) + _tail(
        _cumulative(sides.right, sides.n_right, neg, ones)
    )
    if fixed_rows is not None and fixed_sides is not None and fixed_right is not None and fixed_rows.size:
        fy, fw = prob.y[fixed_rows], prob.w[fixed_rows]
        go_l, go_r = ~fixed_right, fixed_right
        left_w += np.bincount(fixed_sides.left[go_l] * k + fy[go_l], weights=fw[go_l], minlength=wl)
        right_w += np.bincount(fixed_sides.right[go_r] * k + fy[go_r], weights=fw[go_r], minlength=wr)
        left_n += np.bincount(fixed_sides.left[go_l], minlength=sides.n_left)
        right_n += np.bincount(fixed_sides.right[go_r], minlength=sides.n_right)

    error = _leaf_error(left_w.reshape(n + 1, sides.n_left, k)) + _leaf_error(right_w.reshape(n + 1, sides.n_right, k))
    min_leaf = prob.cfg.min_leaf
    feasible = (left_n >= min_leaf - 0.5).all(axis=1) & (right_n >= min_leaf - 0.5).all(axis=1)
    distinct = np.ones(n + 1, dtype=bool)
    distinct[1:n] = keys[1:] > keys[:-1]
    return np.where(feasible & distinct, error, np.inf)


def _best_axis(
    prob: _Problem,
    rows: np.ndarray,
    left: Node | None = None,
    right: Node | None = None,
    features: Sequence[int] | None = None,
) -> tuple[float, int, float] | None:
    """Lowest weighted error axis split of ``rows``, keeping the given children (fresh leaves if ``None``).

    Ties go to the lowest feature, then the smallest threshold.
    """
    if rows.shape[0] < 2:
        return None
    sides = _sides(prob, rows, left, right)
    never = np.zeros(rows.shape[0], dtype=bool)
    best: tuple[float, int, float] | None = None
    for j in features if features is not None else range(prob.n_features):
        values = prob.X[rows, j]
        order = np.argsort(values, kind="stable")
        keys = values[order]
        sorted_sides = _Sides(sides.left[order], sides.right[order], sides.n_left, sides.n_right)
        costs = _sweep(prob, keys, never, rows[order], sorted_sides)
        m = int(np.argmin(costs))
        if not math.isfinite(costs[m]) or m == 0 or m == keys.shape[0]:
            continue
        if best is None or costs[m] < best[0] - IMPROVEMENT_TOLERANCE:
            best = (float(costs[m]), j, float((keys[m - 1] + keys[m]) / 2.0))
    return best


def _gini_split(prob: _Problem, rows: np.ndarray, features: Sequence[int]) -> tuple[int, float] | None:
    """Weighted-Gini best axis split; ties prefer the more balanced split, then lower feature and threshold."""
    n = rows.shape[0]
    min_leaf = prob.cfg.min_leaf
    y, w = prob.y[rows], prob.w[rows]
    best: tuple[float, int, int, float] | None = None  # (gini, balance, feature, threshold)
    m = np.arange(n + 1)
    balance = np.minimum(m, n - m)
    for j in features:
        values = prob.X[rows, j]
        order = np.argsort(values, kind="stable")
        keys = values[order]
        onehot = np.zeros((n, prob.n_classes))
        onehot[np.arange(n), y[order]] = w[order]
        left = np.zeros((n + 1, prob.n_classes))
        np.cumsum(onehot, axis=0, out=left[1:])
        right = left[-1] - left
        wl, wr = left.sum(axis=1), right.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            gini = np.where(wl > 0, wl - (left**2).sum(axis=1) / wl, 0.0) + np.where(
                wr > 0, wr - (right**2).sum(axis=1) / wr, 0.0
            )
        valid = (m >= min_leaf) & (n - m >= min_leaf)
        valid[1:n] &= keys[1:] > keys[:-1]
        valid[0] = valid[n] = False
        if not valid.any():
            continue
        g = np.where(valid, gini, np.inf)
        g_min = g.min()
        tied = np.flatnonzero(g <= g_min + IMPROVEMENT_TOLERANCE)
        pick = int(tied[np.argmax(balance[tied])])
        candidate = (float(g[pick]), int(balance[pick]), j, float((keys[pick - 1] + keys[pick]) / 2.0))
        if (
            best is None
            or candidate[0] < best[0] - IMPROVEMENT_TOLERANCE
            or (abs(candidate[0] - best[0]) <= IMPROVEMENT_TOLERANCE and candidate[1] > best[1])
        ):
            best = candidate
    if best is None:
        return None
    return best[2], best[3]


def _grow(prob: _Problem, rows: np.ndarray, depth_left: int, rng: np.random.Generator | None) -> Node:
    leaf = _placeholder(prob.n_classes)
    if depth_left == 0 or rows.shape[0] < 2 * prob.cfg.min_leaf or np.unique(prob.y[rows]).size <= 1:
        return leaf
    p = prob.n_features
    if rng is None:
        features: Sequence[int] = range(p)
    else:
        size = max(1, math.ceil(math.sqrt(p)))
        features = np.sort(rng.choice(p, size=size, replace=False)).tolist()
    found = _gini_split(prob, rows, features)
    if found is None:
        return leaf
    j, threshold = found
    right = prob.X[rows, j] >= threshold
    return Branch(
        Split.axis(j, threshold),
        _grow(prob, rows[~right], depth_left - 1, rng),
        _grow(prob, rows[right], depth_left - 1, rng),
    )


def _refit(prob: _Problem, node: Node, rows: np.ndarray) -> Node:
    if isinstance(node, Leaf):
        counts = np.bincount(prob.y[rows], weights=prob.w[rows], minlength=prob.n_classes).astype(float)
        return Leaf(counts, int(rows.shape[0]))
    right = node.split.goes_right(prob.X[rows])
    return Branch(node.split, _refit(prob, node.left, rows[~right]), _refit(prob, node.right, rows[right]))


def _paths(node: Node, prefix: Path_ = ()) -> list[Path_]:
    out = [prefix]
    if isinstance(node, Branch):
        out += _paths(node.left, (*prefix, 0))
        out += _paths(node.right, (*prefix, 1))
    return out


def _locate(prob: _Problem, root: Node, path: Path_) -> tuple[Node, np.ndarray] | None:
    node, rows = root, np.arange(prob.X.shape[0])
    for bit in path:
        if not isinstance(node, Branch):
            return None
        right = node.split.goes_right(prob.X[rows])
        rows = rows[right] if bit else rows[~right]
        node = node.right if bit else node.left
    return node, rows


def _replace(root: Node, path: Path_, new: Node) -> Node:
    if not path:
        return new
    assert isinstance(root, Branch)
    if path[0]:
        return Branch(root.split, root.left, _replace(root.right, path[1:], new))
    return Branch(root.split, _replace(root.left, path[1:], new), root.right)


def _lookahead(prob: _Problem, rows: np.ndarray) -> Node | None:
    """Exhaustively best axis subtree of depth at most two over ``rows``."""
    k = prob.n_classes
    alpha_w = prob.cfg.alpha * prob.total_weight
    min_leaf = prob.cfg.min_leaf

    def _leaf_err(r: np.ndarray) -> float:
        if r.shape[0] < min_leaf:
            return math.inf
        counts = np.bincount(prob.y[r], weights=prob.w[r], minlength=k)
        return float(counts.sum() - counts.max())

    def _stump(r: np.ndarray) -> tuple[float, Node]:
        leaf_err = _leaf_err(r)
        found = _best_axis(prob, r)
        if found is not None and found[0] + alpha_w < leaf_err - IMPROVEMENT_TOLERANCE:
            leaf = _placeholder(k)
            return found[0] + alpha_w, Branch(Split.axis(found[1], found[2]), leaf, leaf)
        return leaf_err, _placeholder(k)

    best_err, best_node = _stump(rows)
    for j in range(prob.n_features):
        values = prob.X[rows, j]
        keys = np.unique(values)
        for threshold in (keys[:-1] + keys[1:]) / 2.0:
            right = values >= threshold
            left_rows, right_rows = rows[~right], rows[right]
            if left_rows.shape[0] < min_leaf or right_rows.shape[0] < min_leaf:
                continue
            left_err, left_node = _stump(left_rows)
            right_err, right_node = _stump(right_rows)
            total = left_err + right_err + alpha_w
            if total < best_err - IMPROVEMENT_TOLERANCE:
                best_err, best_node = total, Branch(Split.axis(j, float(threshold)), left_node, right_node)
    return best_node if math.isfinite(best_err) else None


def _hyperplane_moves(prob: _Problem, node: Branch, rows: np.ndarray) -> list[Node]:
    """Coordinate moves on one hyperplane split: retune the threshold, or add, retune or drop one coefficient."""
    Xr = prob.X[rows]
    split = node.split
    coefs = split.coefficient_map()
    budget = prob.cfg.sparsity_budget(prob.n_features)
    sides = _sides(prob, rows, node.left, node.right)
    proj = split.project(Xr)
    b = split.threshold
    out: list[Node] = []

    def _branch(new_coefs: dict[int, float], threshold: float) -> Node | None:
        if not any(c != 0.0 for c in new_coefs.values()) or not all(math.isfinite(c) for c in new_coefs.values()):
            return None
        new_split, swap = Split.from_coefficients(new_coefs, threshold)
        return Branch(new_split, node.right, node.left) if swap else Branch(new_split, node.left, node.right)

    order = np.argsort(proj, kind="stable")
    costs = _sweep(
        prob, proj[order], np.zeros(rows.shape[0], dtype=bool), rows[order], _reorder(sides, order)
    )
    m = int(np.argmin(costs))
    if math.isfinite(costs[m]) and 0 < m < rows.shape[0]:
        candidate = _branch(coefs, float((proj[order][m - 1] + proj[order][m]) / 2.0))
        if candidate is not None:
            out.append(candidate)

    for j in range(prob.n_features):
        in_support = j in coefs
        if not in_support and len(coefs) >= budget:
            continue
        x = Xr[:, j]
        rest = proj - coefs.get(j, 0.0) * x
        nz = x != 0.0
        if not nz.any():
            continue
        breakpoints = (b - rest[nz]) / x[nz]
        order = np.argsort(breakpoints, kind="stable")
        keys = breakpoints[order]
        nz_rows = np.flatnonzero(nz)[order]
        fixed = np.flatnonzero(~nz)
        costs = _sweep(
            prob,
            keys,
            (x[nz] > 0)[order],
            rows[nz_rows],
            _reorder(sides, nz_rows),
            fixed_right=rest[fixed] >= b,
            fixed_rows=rows[fixed],
            fixed_sides=_reorder(sides, fixed),
        )
        m = int(np.argmin(costs))
        if math.isfinite(costs[m]):
            if m == 0:
                value = keys[0] - max(1.0, abs(keys[0]))
            elif m == keys.shape[0]:
                value = keys[-1] + max(1.0, abs(keys[-1]))
            else:
                value = (keys[m - 1] + keys[m]) / 2.0
            candidate = _branch({**coefs, j: float(value)}, b)
            if candidate is not None:
                out.append(candidate)
        if in_support and len(coefs) > 1:
            candidate = _branch({i: c for i, c in coefs.items() if i != j}, b)
            if candidate is not None:
                out.append(candidate)
    return out


def _reorder(sides: _Sides, index: np.ndarray) -> _Sides:
    return _Sides(sides.left[index], sides.right[index], sides.n_left, sides.n_right)


def _candidates(prob: _Problem, node: Node, rows: np.ndarray, budget: int) -> list[Node]:
    k = prob.n_classes
    out: list[Node] = []
    if isinstance(node, Leaf):
        if budget >= 1:
            found = _best_axis(prob, rows)
            if found is not None:
                out.append(Branch(Split.axis(found[1], found[2]), _placeholder(k), _placeholder(k)))
    else:
        out.append(_placeholder(k))
        found = _best_axis(prob, rows, node.left, node.right)
        if found is not None:
            out.append(Branch(Split.axis(found[1], found[2]), node.left, node.right))
        if prob.cfg.hyperplanes:
            out += _hyperplane_moves(prob, node, rows)
        out += [node.left, node.right]
    if budget >= 2 and rows.shape[0] * prob.n_features <= prob.cfg.lookahead_limit:
        lookahead = _lookahead(prob, rows)
        if lookahead is not None:
            out.append(lookahead)
    return out


def _search(prob: _Problem, root: Node, rng: np.random.Generator) -> tuple[Node, list[float]]:
    all_rows = np.arange(prob.X.shape[0])
    trace = [_cost(prob, root, all_rows)]
    for _ in range(prob.cfg.max_local_search_passes):
        improved = False
        paths = _paths(root)
        for i in rng.permutation(len(paths)):
            located = _locate(prob, root, paths[i])
            if located is None:
                continue
            node, rows = located
            budget = prob.cfg.max_depth - len(paths[i])
            current = _cost(prob, node, rows)
            best_cost, best_node = current, None
            for candidate in _candidates(prob, node, rows, budget):
                cost = _cost(prob, candidate, rows)
                if cost < best_cost - IMPROVEMENT_TOLERANCE:
                    best_cost, best_node = cost, candidate
            if best_node is None:
                continue
            new_root = _replace(root, paths[i], best_node)
            new_total = _cost(prob, new_root, all_rows)
            if new_total < trace[-1] - IMPROVEMENT_TOLERANCE:
                logger.debug("Accepted move at node %s: objective %.6g -> %.6g", paths[i], trace[-1], new_total)
                root = new_root
                trace.append(new_total)
                improved = True
        if not improved:
            break
    return root, trace


def _check_feasible(prob: _Problem, root: Node) -> None:
    if _depth(root) > prob.cfg.max_depth:
        raise InputError(f"Initial tree of depth {_depth(root)} exceeds max_depth {prob.cfg.max_depth}")
    budget = prob.cfg.sparsity_budget(prob.n_features)
    stack = [root]
    while stack:
        node = stack.pop()
        if isinstance(node, Branch):
            if node.split.sparsity > budget or max(node.split.features) >= prob.n_features:
                raise InputError("Initial tree has a split outside the sparsity budget or feature range")
            stack += [node.left, node.right]
    if not math.isfinite(_cost(prob, root, np.arange(prob.X.shape[0]))):
        raise InputError(f"Initial tree has a leaf with fewer than {prob.cfg.min_leaf} training rows")


def _tree(prob: _Problem, ds: Dataset, target: Target, root: Node, tie_break: TieBreak, **metadata: Any) -> Tree:
    return Tree(
        root=_refit(prob, root, np.arange(prob.X.shape[0])),
        label_space=ds.label_space(target),
        feature_names=ds.feature_names,
        target=target,
        tie_break=tie_break,
        metadata=metadata,
    )


def objective(tree: Tree, ds: Dataset, alpha: float = 0.0, target: Target | None = None) -> float:
    """Weighted misclassified fraction of ``ds`` plus ``alpha`` per split."""
    y = ds.target_labels(target or cast(Target, tree.target))
    wrong = tree.predict_index(ds.X) != y
    return float(ds.weights[wrong].sum() / ds.weights.sum()) + alpha * tree.n_splits


def greedy_init(ds: Dataset, cfg: TrainConfig, target: Target = "label", tie_break: TieBreak = "lowest") -> Tree:
    """Top-down axis tree choosing the weighted-Gini best split at every node."""
    prob = _problem(ds, cfg, target)
    return _tree(prob, ds, target, _grow(prob, np.arange(len(ds)), cfg.max_depth, None), tie_break)


def local_search(
    ds: Dataset,
    cfg: TrainConfig,
    init: Tree,
    target: Target | None = None,
    seed: int | None = None,
    trace: list[float] | None = None,
) -> Tree:
    """Improve ``init`` node by node until no move strictly lowers the objective.

    Args:
        ds: Training data
        cfg: Constraints and search settings
        init: Starting tree; must satisfy ``cfg``
        target: Target the tree classifies, defaults to the tree's own
        seed: Seed of the node visiting order, defaults to ``cfg.seed``
        trace: When given, receives the objective after the start and after every accepted move
    """
    resolved = target or cast(Target, init.target)
    if init.feature_names != ds.feature_names:
        raise InputError("Initial tree and dataset use different features")
    prob = _problem(ds, cfg, resolved)
    _check_feasible(prob, init.root)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed if seed is None else seed, 0, 1]))
    root, steps = _search(prob, init.root, rng)
    if trace is not None:
        trace.extend(steps)
    return _tree(prob, ds, resolved, root, init.tie_break, objective=steps[-1])


@dataclass(frozen=True)
class RestartRecord:
    """Outcome of one restart or warm start."""

    index: int
    source: Literal["greedy", "random", "warm_start"]
    axis_trace: tuple[float, ...]
    hyperplane_trace: tuple[float, ...]
    objective: float
    n_splits: int


@dataclass(frozen=True, eq=False)
class TrainingReport:
    tree: Tree
    config: TrainConfig
    target: str
    restarts: tuple[RestartRecord, ...]
    best_index: int
    wall_time: float
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return self.restarts[self.best_index].objective

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": dataclasses.asdict(self.config),
            "target": self.target,
            "objective": self.objective,
            "n_splits": self.tree.n_splits,
            "depth": self.tree.depth,
            "best_restart": self.restarts[self.best_index].index,
            "restarts": [dataclasses.asdict(r) for r in self.restarts],
            **self.extra,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def _run_restart(
    prob: _Problem, index: int, source: Literal["greedy", "random", "warm_start"], start: Node | None
) -> tuple[RestartRecord, Node]:
    all_rows = np.arange(prob.X.shape[0])
    axis_rng = np.random.default_rng(np.random.SeedSequence([prob.cfg.seed, index, 0]))
    hyper_rng = np.random.default_rng(np.random.SeedSequence([prob.cfg.seed, index, 1]))
    if source == "warm_start":
        assert start is not None
        root, axis_trace = start, [_cost(prob, start, all_rows)]
        if prob.cfg.hyperplanes:
            root, hyper_trace = _search(prob, root, hyper_rng)
        else:
            root, axis_trace = _search(prob, root, axis_rng)
            hyper_trace = []
    else:
        axis = prob.axis_only()
        init = _grow(axis, all_rows, prob.cfg.max_depth, None if source == "greedy" else axis_rng)
        root, axis_trace = _search(axis, init, axis_rng)
        hyper_trace = []
        if prob.cfg.hyperplanes:
            root, hyper_trace = _search(prob, root, hyper_rng)
    final = hyper_trace[-1] if hyper_trace else axis_trace[-1]
    record = RestartRecord(index, source, tuple(axis_trace), tuple(hyper_trace), final, _n_splits(root))
    logger.debug("Restart %d (%s): objective %.6g with %d splits", index, source, final, record.n_splits)
    return record, root


def train_report(
    ds: Dataset,
    cfg: TrainConfig,
    target: Target = "label",
    warm_starts: Sequence[Tree] = (),
    tie_break: TieBreak = "lowest",
) -> TrainingReport:
    """Best tree over all restarts and warm starts, with per-restart objective traces.

    Restart 0 starts from the greedy tree and the others from greedy trees over
    random feature subsets. The winner has the lowest objective, then the fewest
    splits, then the lowest restart index; the choice never depends on ``cfg.n_jobs``.
    """
    started = time.perf_counter()
    prob = _problem(ds, cfg, target)
    jobs: list[tuple[int, Literal["greedy", "random", "warm_start"], Node | None]] = [
        (r, "greedy" if r == 0 else "random", None) for r in range(cfg.restarts)
    ]
    for i, ws in enumerate(warm_starts):
        if ws.feature_names != ds.feature_names:
            ws = ws.remap_features(ds.feature_names)
        if ws.n_classes != prob.n_classes:
            raise InputError("Warm start tree has a different label space")
        _check_feasible(prob, ws.root)
        jobs.append((cfg.restarts + i, "warm_start", ws.root))
    logger.info(
        "Training %s tree on %d rows x %d features: depth %d, complexity %s, %d restarts, %d warm starts",
        target,
        len(ds),
        ds.n_features,
        cfg.max_depth,
        cfg.max_split_complexity,
        cfg.restarts,
        len(warm_starts),
    )
    results = map_ordered(lambda job: _run_restart(prob, *job), jobs, max_workers=cfg.n_jobs)
    best = 0
    for i, (record, _) in enumerate(results):
        incumbent = results[best][0]
        if record.objective < incumbent.objective - IMPROVEMENT_TOLERANCE or (
            abs(record.objective - incumbent.objective) <= IMPROVEMENT_TOLERANCE
            and record.n_splits < incumbent.n_splits
        ):
            best = i
    record, root = results[best]
    tree = _tree(
        prob,
        ds,
        target,
        root,
        tie_break,
        objective=record.objective,
        config=dataclasses.asdict(cfg),
        best_restart=record.index,
    )
    elapsed = time.perf_counter() - started
    logger.info(
        "Trained %s tree: objective %.6g, %d splits, depth %d in %.2fs",
        target,
        record.objective,
        tree.n_splits,
        tree.depth,
        elapsed,
    )
    return TrainingReport(tree, cfg, target, tuple(r for r, _ in results), best, elapsed)


def train(
    ds: Dataset,
    cfg: TrainConfig,
    target: Target = "label",
    warm_starts: Sequence[Tree] = (),
    tie_break: TieBreak = "lowest",
) -> Tree:
    return train_report(ds, cfg, target, warm_starts, tie_break).tree
