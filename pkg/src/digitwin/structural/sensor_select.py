"""Which gauges the trees read: installed suite against the candidate locations."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from .config import NoiseSpec, PlateConfig, TrainConfig
from .datagen import Dataset, Target, generate, split
from .evaluation import evaluate
from .exceptions import InputError
from .learn import objective, train
from .model_library import ForwardModel, LoadCase, ModelLibrary
from .sensor_layout import SensorLayout, candidate_layout, installed_layout
from .tree import Tree

__all__ = (
    "PlacementRecord",
    "PlacementReport",
    "placement_study",
    "planform_map",
)

logger = logging.getLogger(__name__)

DEFAULT_PLACEMENT_DEPTHS: tuple[int, ...] = (3, 4, 5)


@dataclass(frozen=True, eq=False)
class PlacementRecord:
    """Fixed against candidate layout at one depth.

    Args:
        depth: Maximum tree depth
        fixed_train_mae: Training MAE of the installed-layout tree
        fixed_test_mae: Held-out MAE of the installed-layout tree
        candidate_train_mae: Training MAE of the candidate-layout tree
        candidate_test_mae: Held-out MAE of the candidate-layout tree
        fixed_objective: Training objective of the installed-layout tree
        candidate_objective: Training objective of the candidate-layout tree
        selected_fixed: Gauges the installed-layout tree reads
        selected_installed: Installed gauges the candidate-layout tree reads
        selected_new: Candidate-only gauges the candidate-layout tree reads
        nearest_region_distance: Distance from the closest gauge the candidate tree reads
            to the damage region of the target parameter; ``nan`` for the library label
        fixed_tree: Installed-layout tree
        candidate_tree: Candidate-layout tree
    """

    depth: int
    fixed_train_mae: float
    fixed_test_mae: float
    candidate_train_mae: float
    candidate_test_mae: float
    fixed_objective: float
    candidate_objective: float
    selected_fixed: tuple[int, ...]
    selected_installed: tuple[int, ...]
    selected_new: tuple[int, ...]
    nearest_region_distance: float
    fixed_tree: Tree
    candidate_tree: Tree

    @property
    def selected(self) -> tuple[int, ...]:
        return tuple(sorted(self.selected_installed + self.selected_new))

    def row(self) -> dict[str, Any]:
        return {
            "depth": self.depth,
            "fixed_train_mae": self.fixed_train_mae,
            "fixed_test_mae": self.fixed_test_mae,
            "candidate_train_mae": self.candidate_train_mae,
            "candidate_test_mae": self.candidate_test_mae,
            "fixed_objective": self.fixed_objective,
            "candidate_objective": self.candidate_objective,
            "selected_fixed": " ".join(map(str, self.selected_fixed)),
            "selected_installed": " ".join(map(str, self.selected_installed)),
            "selected_new": " ".join(map(str, self.selected_new)),
            "nearest_region_distance": self.nearest_region_distance,
        }


@dataclass(frozen=True, eq=False)
class PlacementReport:
    target: str
    split_complexity: int | None
    installed: SensorLayout
    candidate: SensorLayout
    records: tuple[PlacementRecord, ...]
    extra: dict[str, Any] = field(default_factory=dict)

    def record(self, depth: int) -> PlacementRecord:
        for r in self.records:
            if r.depth == depth:
                return r
        raise KeyError(depth)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.row() for r in self.records])

    def to_csv(self, path: str | Path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")


def _region_distance(plate: PlateConfig, target: Target, layout: SensorLayout, gauge_ids: Sequence[int]) -> float:
    if target == "label" or not gauge_ids:
        return float("nan")
    region = plate.damage_regions[0 if target == "mu1" else 1]
    return min(
        region.distance(g.x, g.y, plate.span, plate.chord) for g in (layout.by_id(i) for i in gauge_ids)
    )


def placement_study(
    model: ForwardModel,
    library: ModelLibrary,
    load: LoadCase,
    noise: NoiseSpec,
    samples: int,
    depths: Sequence[int] = DEFAULT_PLACEMENT_DEPTHS,
    split_complexity: int | None = 4,
    seed: int = 0,
    cfg: TrainConfig | None = None,
    target: Target = "mu2",
    test_fraction: float = 0.3,
    plate: PlateConfig | None = None,
) -> PlacementReport:
    """Train trees on the installed and the candidate layout at every depth and compare them.

    Both datasets draw noise from the same per-(scenario, sample) substreams, so a
    gauge shared by the two layouts reads identical values in both. The
    candidate tree at each depth is warm-started from the installed tree embedded
    in the larger feature table, so its training objective is never worse.

    Args:
        model: Forward model giving the strain of each library scenario
        library: Model library
        load: Load case of the training strains
        noise: Sensor noise
        samples: Noise draws per scenario
        depths: Tree depths to compare
        split_complexity: Largest number of gauges in one split, None for unrestricted
        seed: Seed of the noise substreams and of the train/test split
        cfg: Remaining training settings; depth and complexity are overridden
        target: Parameter the trees estimate
        test_fraction: Held-out fraction
        plate: Plate whose damage regions the near-region distance is measured against
    """
    if not depths:
        raise InputError("A placement study needs at least one depth")
    cfg = cfg or TrainConfig()
    plate = plate or PlateConfig()
    installed = installed_layout(plate.damage_regions)
    candidate = candidate_layout(plate.damage_regions)

    def _datasets(layout: SensorLayout) -> tuple[Dataset, Dataset]:
        ds = generate(model, library, layout, load, noise, samples, seed, n_jobs=cfg.n_jobs)
        return split(ds, test_fraction, seed)

    fixed_train, fixed_test = _datasets(installed)
    cand_train, cand_test = _datasets(candidate)
    installed_ids = set(installed.usable_ids)

    records: list[PlacementRecord] = []
    prev_fixed: Tree | None = None
    prev_cand: Tree | None = None
    for depth in sorted(set(depths)):
        depth_cfg = cfg.replace(max_depth=depth, max_split_complexity=split_complexity)
        try:
            fixed = train(fixed_train, depth_cfg, target, warm_starts=[prev_fixed] if prev_fixed else [])
            embedded = fixed.remap_features(cand_train.feature_names)
            warm = [embedded] + ([prev_cand] if prev_cand else [])
            cand = train(cand_train, depth_cfg, target, warm_starts=warm)
        except Exception as e:
            e.add_note(f"in placement study at depth {depth}")
            raise
        used = sorted(cand.used_gauges())
        record = PlacementRecord(
            depth=depth,
            fixed_train_mae=evaluate(fixed, fixed_train).mae,
            fixed_test_mae=evaluate(fixed, fixed_test).mae,
            candidate_train_mae=evaluate(cand, cand_train).mae,
            candidate_test_mae=evaluate(cand, cand_test).mae,
            fixed_objective=objective(fixed, fixed_train, cfg.alpha),
            candidate_objective=objective(cand, cand_train, cfg.alpha),
            selected_fixed=tuple(sorted(fixed.used_gauges())),
            selected_installed=tuple(i for i in used if i in installed_ids),
            selected_new=tuple(i for i in used if i not in installed_ids),
            nearest_region_distance=_region_distance(plate, target, candidate, used),
            fixed_tree=fixed,
            candidate_tree=cand,
        )
        records.append(record)
        prev_fixed, prev_cand = fixed, cand
        logger.info(
            "Placement depth %d: fixed MAE %.4g/%.4g, candidate MAE %.4g/%.4g, %d installed + %d new gauges",
            depth,
            record.fixed_train_mae,
            record.fixed_test_mae,
            record.candidate_train_mae,
            record.candidate_test_mae,
            len(record.selected_installed),
            len(record.selected_new),
        )
    return PlacementReport(
        target=target,
        split_complexity=split_complexity,
        installed=installed,
        candidate=candidate,
        records=tuple(records),
        extra={"near_region_limit": 2 * max(plate.span / plate.n_span, plate.chord / plate.n_chord)},
    )


def planform_map(
    layout: SensorLayout,
    selected: Sequence[int] = (),
    plate: PlateConfig | None = None,
    width: int = 72,
    height: int = 16,
) -> str:
    """Character map of the planform, root on the left and leading edge on top.

    ``#`` damage region, ``O``/``o`` installed gauge read/unread, ``*``/``.``
    candidate gauge read/unread, ``x`` excluded gauge.
    """
    plate = plate or PlateConfig()
    grid = [[" "] * width for _ in range(height)]
    for r in range(height):
        for c in range(width):
            x, y = (r + 0.5) / height, (c + 0.5) / width
            if any(region.contains(x, y) for region in plate.damage_regions):
                grid[r][c] = "#"
    chosen = set(selected)
    for g in layout:
        r = min(int(g.x * height), height - 1)
        c = min(int(g.y * width), width - 1)
        if g.excluded:
            mark = "x"
        elif g.installed:
            mark = "O" if g.id in chosen else "o"
        else:
            mark = "*" if g.id in chosen else "."
        grid[r][c] = mark
    border = "+" + "-" * width + "+"
    lines = [border, *("|" + "".join(row) + "|" for row in grid), border]
    lines.append("root" + " " * (width - 6) + "tip")
    return "\n".join(lines)
