import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from digitwin.structural import (
    DamageScenario,
    ForwardModelTestDouble,
    InputError,
    MissionConfig,
    MissionLog,
    MonteCarloSummary,
    NoiseSpec,
    PlateModel,
    SensorLayout,
    Tree,
    monte_carlo,
    run_mission,
    step,
)

__all__ = (
    "TestMissionLog",
    "TestMonteCarlo",
    "TestNoisyTrainedTrees",
    "TestRunMission",
    "TestStep",
)

QUIET = NoiseSpec(0.0)


def _constant(mu: tuple[float, float], n_steps: int = 6) -> MissionConfig:
    return MissionConfig(n_steps=n_steps, trajectory=(mu,) * n_steps, obstacle_steps=(1,))


def _first_switch(
    cfg: MissionConfig, trees: tuple[Tree, Tree], plate: PlateModel, installed: SensorLayout
) -> int | None:
    """First step at which a quiet, aggressively flown mission reads the threshold."""
    for t in range(cfg.n_steps):
        strain = plate.predict_strain(DamageScenario(*cfg.true_scenario(t)), plate.load_case(3.0), installed)
        features = strain.select(installed.usable_ids) / 3.0
        levels = []
        for tree in trees:
            dist = tree.classify_proba(features)
            levels.append(tree.label_space[dist.median() if cfg.estimate == "median" else dist.argmax(tree.tie_break)])
        if max(levels) >= cfg.threshold:
            return t
    return None


@pytest.fixture(scope="module")
def noisy_log(plate: PlateModel, installed: SensorLayout, mission_trees: tuple[Tree, Tree]) -> MissionLog:
    return run_mission(MissionConfig(seed=11), mission_trees, plate, installed, NoiseSpec())


class TestStep:
    def test_first_step_flies_aggressive(
        self, plate: PlateModel, installed: SensorLayout, library_trees: tuple[Tree, Tree]
    ):
        state = step(
            None, DamageScenario(20.0, 60.0), library_trees, plate, installed, QUIET, np.random.default_rng(0)
        )

        assert state.t == 0
        assert state.load_factor == 3.0
        assert state.mu_hat == (20.0, 60.0)
        assert state.label == 1 * 5 + 3
        assert state.capability == 2.0
        assert state.entropy == (0.0, 0.0)
        assert state.expected_mu == pytest.approx((20.0, 60.0))

    def test_capability_latches(self, plate: PlateModel, installed: SensorLayout, library_trees: tuple[Tree, Tree]):
        rng = np.random.default_rng(0)
        damaged = step(None, DamageScenario(60.0, 60.0), library_trees, plate, installed, QUIET, rng)

        recovered = step(damaged, DamageScenario(0.0, 0.0), library_trees, plate, installed, QUIET, rng)

        assert recovered.t == 1
        assert recovered.load_factor == 2.0
        assert recovered.mu_hat == (0.0, 0.0)
        assert recovered.capability == 2.0

    def test_trees_in_wrong_order(self, plate: PlateModel, installed: SensorLayout, library_trees: tuple[Tree, Tree]):
        swapped = (library_trees[1], library_trees[0])

        with pytest.raises(InputError):
            step(None, DamageScenario(0.0, 0.0), swapped, plate, installed, QUIET, np.random.default_rng(0))

    def test_trees_from_other_layout(
        self, plate: PlateModel, candidate: SensorLayout, library_trees: tuple[Tree, Tree]
    ):
        with pytest.raises(InputError):
            run_mission(_constant((0.0, 0.0)), library_trees, plate, candidate, QUIET)


class TestRunMission:
    @pytest.mark.parametrize(
        ("mu", "switch"), [((0.0, 0.0), None), ((20.0, 20.0), None), ((40.0, 40.0), 0), ((0.0, 40.0), 0)]
    )
    def test_constant_damage(
        self, plate: PlateModel, installed: SensorLayout, library_trees: tuple[Tree, Tree], mu, switch
    ):
        log = run_mission(_constant(mu), library_trees, plate, installed, QUIET)

        assert log.switch_step == switch
        assert all(s.mu_hat == mu for s in log.states)

    def test_heavily_damaged_wing(self, plate: PlateModel, installed: SensorLayout, library_trees: tuple[Tree, Tree]):
        log = run_mission(_constant((80.0, 80.0)), library_trees, plate, installed, QUIET)

        assert [s.load_factor for s in log.states] == [3.0] + [2.0] * 5
        assert log.obstacle_choices == {1: "conservative"}

    def test_undamaged_mission_stays_aggressive(
        self, plate: PlateModel, installed: SensorLayout, library_trees: tuple[Tree, Tree]
    ):
        cfg = MissionConfig(n_steps=30, end=(0.0, 0.0), obstacle_steps=(20,))

        log = run_mission(cfg, library_trees, plate, installed, QUIET)

        assert {s.capability for s in log.states} == {3.0}
        assert log.obstacle_choices == {20: "aggressive"}

    def test_noise_free_switch_matches_direct_classification(
        self, plate: PlateModel, installed: SensorLayout, library_trees: tuple[Tree, Tree]
    ):
        cfg = MissionConfig()
        load = plate.load_case(3.0)
        expected = None
        for t in range(cfg.n_steps):
            strain = plate.predict_strain(DamageScenario(*cfg.true_scenario(t)), load, installed)
            features = strain.select(installed.usable_ids) / 3.0
            if max(tree.classify(features) for tree in library_trees) >= cfg.threshold:
                expected = t
                break

        log = run_mission(cfg, library_trees, plate, installed, QUIET)

        assert log.switch_step == expected
        assert log.latch_holds()

    def test_noisy_mission_keeps_the_latch(self, noisy_log: MissionLog):
        assert len(noisy_log) == 100
        assert noisy_log.latch_holds()
        assert set(noisy_log.obstacle_choices) == {20, 55, 85}

    def test_deterministic(
        self, noisy_log: MissionLog, plate: PlateModel, installed: SensorLayout, mission_trees: tuple[Tree, Tree]
    ):
        again = run_mission(MissionConfig(seed=11), mission_trees, plate, installed, NoiseSpec())

        pd.testing.assert_frame_equal(again.to_frame(), noisy_log.to_frame())

    def test_forward_model_double(
        self, plate: PlateModel, installed: SensorLayout, library_trees: tuple[Tree, Tree]
    ):
        unit = plate.load_case(1.0)

        def _unit_strain(scenario: DamageScenario, layout: SensorLayout) -> dict[int, float]:
            field = plate.predict_strain(scenario, unit, layout)
            return dict(zip(field.gauge_ids, field.microstrain.tolist(), strict=True))

        model = ForwardModelTestDouble()
        model.stub_all(_unit_strain)

        log = run_mission(_constant((60.0, 20.0), n_steps=3), library_trees, model, installed, QUIET)

        assert model.predict_count == 3
        assert [call["load"].load_factor for call in model.all_predict_calls] == [3.0, 2.0, 2.0]
        assert model.was_predicted(DamageScenario(60.0, 20.0))
        assert log.states[0].mu_hat == (60.0, 20.0)

        model.reset()
        with pytest.raises(KeyError):
            model.predict_strain(DamageScenario(0.0, 0.0), model.load_case(3.0), installed)


class TestNoisyTrainedTrees:
    def test_heavily_damaged_wing_switches_at_once(
        self, plate: PlateModel, installed: SensorLayout, mission_trees: tuple[Tree, Tree]
    ):
        log = run_mission(_constant((80.0, 80.0)), mission_trees, plate, installed, QUIET)

        assert log.switch_step == 0
        assert log.obstacle_choices == {1: "conservative"}

    def test_default_mission_switches_once_and_for_good(
        self, plate: PlateModel, installed: SensorLayout, mission_trees: tuple[Tree, Tree]
    ):
        log = run_mission(MissionConfig(), mission_trees, plate, installed, QUIET)

        assert log.switch_step is not None
        assert log.latch_holds()
        assert log.obstacle_choices[85] == "conservative"

    @pytest.mark.parametrize("rule", ["median", "argmax"])
    def test_switch_follows_the_estimate_rule(
        self, plate: PlateModel, installed: SensorLayout, mission_trees: tuple[Tree, Tree], rule
    ):
        cfg = MissionConfig(estimate=rule)

        log = run_mission(cfg, mission_trees, plate, installed, QUIET)

        assert log.switch_step == _first_switch(cfg, mission_trees, plate, installed)

    def test_median_estimate_is_reported(
        self, plate: PlateModel, installed: SensorLayout, mission_trees: tuple[Tree, Tree]
    ):
        log = run_mission(_constant((20.0, 60.0), n_steps=2), mission_trees, plate, installed, QUIET)

        for state in log.states:
            expected = tuple(
                tree.label_space[dist.median()] for tree, dist in zip(mission_trees, state.distributions, strict=True)
            )
            assert state.mu_hat == expected


class TestMissionLog:
    def test_frame_columns(self, noisy_log: MissionLog):
        frame = noisy_log.to_frame()

        assert len(frame) == 100
        assert list(frame.columns[:5]) == ["t", "true_mu1", "true_mu2", "load_factor", "gauge_1"]
        assert frame.loc[20, "obstacle_path"] in ("aggressive", "conservative")
        assert frame.loc[21, "obstacle_path"] == ""

    def test_csv_and_summary(self, noisy_log: MissionLog, tmp_path: Path):
        noisy_log.to_csv(tmp_path / "mission_log.csv")
        noisy_log.write_summary(tmp_path / "mission_summary.json")

        frame = pd.read_csv(tmp_path / "mission_log.csv")
        summary = json.loads((tmp_path / "mission_summary.json").read_text())

        assert len(frame) == 100
        assert summary["n_steps"] == 100
        assert summary["switch_step"] == noisy_log.switch_step
        assert summary["latch_holds"] is True
        assert summary["seed"] == 11
        assert set(summary["obstacles"]) == {"20", "55", "85"}

    def test_frames_explain_obstacle_steps(self, noisy_log: MissionLog):
        text = noisy_log.frames()

        assert text.count("obstacle:") == 3
        assert "mu1 decision path:" in text
        assert "mu2 decision path:" in text
        assert noisy_log.frame(0).startswith("step 0  load factor 3")

    def test_pure_leaves_raise_no_alerts(
        self, plate: PlateModel, installed: SensorLayout, library_trees: tuple[Tree, Tree]
    ):
        log = run_mission(_constant((40.0, 20.0)), library_trees, plate, installed, QUIET)

        assert log.entropy_alerts() == []


class TestMonteCarlo:
    def test_runs_every_seed(
        self, noisy_log: MissionLog, plate: PlateModel, installed: SensorLayout, mission_trees: tuple[Tree, Tree]
    ):
        summary = monte_carlo(
            MissionConfig(), mission_trees, plate, installed, NoiseSpec(), seeds=[11, 12, 13], n_jobs=3
        )

        assert summary.seeds == (11, 12, 13)
        assert summary.switch_steps[0] == noisy_log.switch_step
        assert summary.latch_violations == ()

    def test_summary_statistics(self, tmp_path: Path):
        summary = MonteCarloSummary(seeds=(0, 1, 2, 3), switch_steps=(40, 50, None, 60), latch_violations=())

        document = summary.to_dict()
        summary.save(tmp_path / "montecarlo.json")

        assert document["median"] == 50.0
        assert document["min"] == 40.0
        assert document["max"] == 60.0
        assert document["n_never_switched"] == 1
        assert json.loads((tmp_path / "montecarlo.json").read_text())["n_runs"] == 4

    def test_never_switched(self):
        document = MonteCarloSummary(seeds=(0,), switch_steps=(None,), latch_violations=()).to_dict()

        assert document["median"] is None
        assert document["n_never_switched"] == 1

    def test_needs_seeds(self, plate: PlateModel, installed: SensorLayout, library_trees: tuple[Tree, Tree]):
        with pytest.raises(InputError):
            monte_carlo(MissionConfig(), library_trees, plate, installed, NoiseSpec(), seeds=[])
