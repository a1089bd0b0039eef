"""Online twin updates during a simulated mission over a degrading wing.

At every step the twin reads noisy strain at the scenario the wing is actually
in, divides it by the load factor being flown and asks one tree per damage
parameter which library level explains it. The estimate is the median of
the leaf distribution unless the mission asks for the most probable level.
Once either estimate reaches the threshold the aircraft keeps to the
conservative load factor for the rest of the mission.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pandas as pd

from .config import MissionConfig, NoiseSpec
from .datagen import load_normalize
from .exceptions import InputError
from .model_library import DamageScenario, ForwardModel
from .parallel import map_ordered
from .sensor_layout import SensorLayout
from .tree import LeafDistribution, Tree

__all__ = (
    "MissionLog",
    "MonteCarloSummary",
    "PathChoice",
    "TwinState",
    "monte_carlo",
    "run_mission",
    "step",
)

logger = logging.getLogger(__name__)

PathChoice = Literal["aggressive", "conservative"]


@dataclass(frozen=True, eq=False)
class TwinState:
    """What the twin believes after one measurement.

    Args:
        t: Timestep index
        true_mu: Damage the wing actually has, percent
        load_factor: Load factor flown while measuring
        features: Load-normalized strains that were classified
        mu_hat: Estimated (mu1, mu2), library levels
        label: Library index of the estimate
        distributions: Leaf distribution of each parameter's tree
        capability: Largest load factor currently allowed
    """

    t: int
    true_mu: tuple[float, float]
    load_factor: float
    features: np.ndarray
    mu_hat: tuple[float, float]
    label: int
    distributions: tuple[LeafDistribution, LeafDistribution]
    capability: float

    @property
    def entropy(self) -> tuple[float, float]:
        return (self.distributions[0].entropy(), self.distributions[1].entropy())

    @property
    def expected_mu(self) -> tuple[float, float]:
        return (self.distributions[0].expected_value(), self.distributions[1].expected_value())


def _check_trees(trees: tuple[Tree, Tree], layout: SensorLayout) -> None:
    if (trees[0].target, trees[1].target) != ("mu1", "mu2"):
        raise InputError(f"Expected (mu1, mu2) trees, got ({trees[0].target}, {trees[1].target})")
    for tree in trees:
        if tree.feature_names != layout.feature_names:
            raise InputError(f"The {tree.target} tree was trained on other gauges than layout {layout.name!r}")


def step(
    state: TwinState | None,
    true_scenario: DamageScenario,
    trees: tuple[Tree, Tree],
    model: ForwardModel,
    layout: SensorLayout,
    noise: NoiseSpec,
    rng: np.random.Generator,
    cfg: MissionConfig | None = None,
) -> TwinState:
    """Measure, classify and update capability for the step after ``state``.

    The load factor flown is the capability carried by ``state``, or the
    aggressive load factor on the first step. Capability latches: once it is
    conservative it stays conservative.
    """
    cfg = cfg or MissionConfig()
    _check_trees(trees, layout)
    t = 0 if state is None else state.t + 1
    flown = cfg.load_aggressive if state is None else state.capability
    strain = model.predict_strain(true_scenario, model.load_case(flown), layout).select(layout.usable_ids)
    features = load_normalize(strain + noise.std * rng.standard_normal(strain.shape[0]), flown)

    dists = (trees[0].classify_proba(features), trees[1].classify_proba(features))
    if cfg.estimate == "median":
        idx = (dists[0].median(), dists[1].median())
    else:
        idx = (dists[0].argmax(trees[0].tie_break), dists[1].argmax(trees[1].tie_break))
    mu_hat = (trees[0].label_space[idx[0]], trees[1].label_space[idx[1]])

    latched = state is not None and state.capability == cfg.load_conservative
    capability = cfg.load_conservative if latched or max(mu_hat) >= cfg.threshold else cfg.load_aggressive
    if state is not None and capability != state.capability:
        logger.info("Step %d: estimate %s reaches the threshold, capability drops to %g", t, mu_hat, capability)
    return TwinState(
        t=t,
        true_mu=true_scenario.values,
        load_factor=flown,
        features=features,
        mu_hat=mu_hat,
        label=idx[0] * trees[1].n_classes + idx[1],
        distributions=dists,
        capability=capability,
    )


@dataclass(frozen=True, eq=False)
class MissionLog:
    config: MissionConfig
    states: tuple[TwinState, ...]
    feature_names: tuple[str, ...]
    trees: tuple[Tree, Tree] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.states)

    def path(self, state: TwinState) -> PathChoice:
        return "conservative" if state.capability == self.config.load_conservative else "aggressive"

    @property
    def obstacle_choices(self) -> dict[int, PathChoice]:
        return {t: self.path(self.states[t]) for t in self.config.obstacle_steps}

    @property
    def switch_step(self) -> int | None:
        """First step with conservative capability, ``None`` if the mission never replans."""
        for s in self.states:
            if s.capability == self.config.load_conservative:
                return s.t
        return None

    def latch_holds(self) -> bool:
        caps = [s.capability == self.config.load_conservative for s in self.states]
        return all(b or not a for a, b in zip(caps, caps[1:], strict=False))

    def entropy_alerts(self) -> list[int]:
        return [s.t for s in self.states if max(s.entropy) > self.config.entropy_alert]

    def to_frame(self) -> pd.DataFrame:
        rows: list[dict[str, Any]] = []
        obstacles = set(self.config.obstacle_steps)
        for s in self.states:
            row: dict[str, Any] = {
                "t": s.t,
                "true_mu1": s.true_mu[0],
                "true_mu2": s.true_mu[1],
                "load_factor": s.load_factor,
            }
            row.update(zip(self.feature_names, s.features.tolist(), strict=True))
            row.update(
                {
                    "mu1_hat": s.mu_hat[0],
                    "mu2_hat": s.mu_hat[1],
                    "label": s.label,
                    "expected_mu1": s.expected_mu[0],
                    "expected_mu2": s.expected_mu[1],
                    "entropy_mu1": s.entropy[0],
                    "entropy_mu2": s.entropy[1],
                    "capability": s.capability,
                    "obstacle_path": self.path(s) if s.t in obstacles else "",
                }
            )
            rows.append(row)
        return pd.DataFrame(rows)

    def to_csv(self, path: str | Path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    def summary(self) -> dict[str, Any]:
        return {
            "n_steps": len(self.states),
            "switch_step": self.switch_step,
            "latch_holds": self.latch_holds(),
            "obstacles": {str(t): choice for t, choice in self.obstacle_choices.items()},
            "entropy_alerts": self.entropy_alerts(),
            "threshold": self.config.threshold,
            "seed": self.config.seed,
        }

    def write_summary(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2, sort_keys=True))

    def frame(self, t: int) -> str:
        """Text snapshot of one step: truth, estimates and the decision paths behind them."""
        s = self.states[t]
        lines = [
            f"step {s.t}  load factor {s.load_factor:g}  capability {s.capability:g}",
            f"true   mu1 {s.true_mu[0]:6.2f}  mu2 {s.true_mu[1]:6.2f}",
            f"twin   mu1 {s.mu_hat[0]:6.2f}  mu2 {s.mu_hat[1]:6.2f}  (label {s.label})",
        ]
        for name, dist in zip(("mu1", "mu2"), s.distributions, strict=True):
            bars = "  ".join(f"{v:g}:{'#' * round(10 * p):<10}" for v, p in dist.as_dict().items())
            lines.append(f"{name:<4} {bars}")
        if s.t in self.config.obstacle_steps:
            lines.append(f"obstacle: {self.path(s)} path")
        if self.trees is not None:
            for tree in self.trees:
                lines.append(f"{tree.target} decision path:")
                lines.extend(f"  {line}" for line in tree.explain(s.features).lines())
        return "\n".join(lines)

    def frames(self) -> str:
        return "\n\n".join(self.frame(t) for t in self.config.obstacle_steps)


def run_mission(
    cfg: MissionConfig,
    trees: tuple[Tree, Tree],
    model: ForwardModel,
    layout: SensorLayout,
    noise: NoiseSpec,
) -> MissionLog:
    """Fly the whole schedule; step ``t`` draws its noise from ``SeedSequence([cfg.seed, t])``."""
    _check_trees(trees, layout)
    states: list[TwinState] = []
    state: TwinState | None = None
    for t in range(cfg.n_steps):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, t]))
        state = step(state, DamageScenario(*cfg.true_scenario(t)), trees, model, layout, noise, rng, cfg)
        states.append(state)
    log = MissionLog(cfg, tuple(states), layout.feature_names, trees)
    logger.info("Mission seed %d: switch step %s, obstacles %s", cfg.seed, log.switch_step, log.obstacle_choices)
    return log


@dataclass(frozen=True)
class MonteCarloSummary:
    """Switch-step statistics over repeated noisy missions.

    Args:
        seeds: Mission seeds, in run order
        switch_steps: Switch step of each run, ``None`` when it never replanned
        latch_violations: Seeds whose log breaks the capability latch
    """

    seeds: tuple[int, ...]
    switch_steps: tuple[int | None, ...]
    latch_violations: tuple[int, ...]

    @property
    def switched(self) -> np.ndarray:
        return np.array([s for s in self.switch_steps if s is not None], dtype=float)

    def to_dict(self) -> dict[str, Any]:
        steps = self.switched
        stats: dict[str, Any] = {"median": None, "q1": None, "q3": None, "min": None, "max": None}
        if steps.size:
            q1, median, q3 = np.percentile(steps, [25, 50, 75])
            stats = {"median": median, "q1": q1, "q3": q3, "min": steps.min(), "max": steps.max()}
        return {
            "n_runs": len(self.seeds),
            "n_never_switched": len(self.seeds) - int(steps.size),
            **{k: None if v is None else float(v) for k, v in stats.items()},
            "latch_violations": list(self.latch_violations),
            "seeds": list(self.seeds),
            "switch_steps": list(self.switch_steps),
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))


def monte_carlo(
    cfg: MissionConfig,
    trees: tuple[Tree, Tree],
    model: ForwardModel,
    layout: SensorLayout,
    noise: NoiseSpec,
    seeds: Sequence[int],
    n_jobs: int = 1,
) -> MonteCarloSummary:
    """Repeat the mission once per seed; runs are independent and may use worker threads."""
    if not seeds:
        raise InputError("Monte Carlo needs at least one seed")

    def _one(seed: int) -> tuple[int | None, bool]:
        log = run_mission(cfg.replace(seed=seed), trees, model, layout, noise)
        return log.switch_step, log.latch_holds()

    results = map_ordered(_one, list(seeds), max_workers=n_jobs)
    return MonteCarloSummary(
        seeds=tuple(seeds),
        switch_steps=tuple(s for s, _ in results),
        latch_violations=tuple(seed for seed, (_, ok) in zip(seeds, results, strict=True) if not ok),
    )
