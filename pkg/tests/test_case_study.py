import numpy as np
import pytest

from digitwin.structural import (
    Dataset,
    MissionConfig,
    ModelLibrary,
    NoiseSpec,
    PlacementReport,
    PlateModel,
    SensorLayout,
    SweepResult,
    TrainConfig,
    Tree,
    evaluate,
    monte_carlo,
    placement_study,
    run_mission,
    split,
    sweep,
    train,
)
from digitwin.structural.evaluation import DEFAULT_SWEEP_COMPLEXITIES, DEFAULT_SWEEP_DEPTHS

__all__ = (
    "TestCaseStudyMission",
    "TestParameterDifficulty",
    "TestPlacementOnCaseStudy",
    "TestSweepOnCaseStudy",
)

pytestmark = pytest.mark.slow

QUICK = TrainConfig(restarts=2, max_local_search_passes=10)


@pytest.fixture(scope="module")
def case_sweep(case_study_split: tuple[Dataset, Dataset]) -> SweepResult:
    return sweep(*case_study_split, "mu1", DEFAULT_SWEEP_DEPTHS, DEFAULT_SWEEP_COMPLEXITIES, QUICK)


@pytest.fixture(scope="module")
def case_placement(plate: PlateModel, library: ModelLibrary) -> PlacementReport:
    return placement_study(
        plate,
        library,
        plate.load_case(3.0),
        NoiseSpec(),
        samples=100,
        depths=(3, 4, 5),
        split_complexity=4,
        seed=0,
        cfg=QUICK,
        target="mu2",
    )


@pytest.fixture(scope="module")
def case_trees(case_study_split: tuple[Dataset, Dataset]) -> tuple[Tree, Tree]:
    cfg = QUICK.replace(max_depth=3)
    return train(case_study_split[0], cfg, "mu1"), train(case_study_split[0], cfg, "mu2")


class TestParameterDifficulty:
    def test_outboard_region_is_harder_to_estimate(self, case_study: Dataset):
        cfg = QUICK.replace(max_depth=3, max_split_complexity=1)
        harder = 0
        for seed in range(5):
            ds_train, ds_test = split(case_study, 0.3, seed=seed)
            mae = {target: evaluate(train(ds_train, cfg, target), ds_test).mae for target in ("mu1", "mu2")}
            harder += mae["mu2"] > mae["mu1"]

        assert harder >= 3


class TestSweepOnCaseStudy:
    def test_training_mae_never_increases_with_depth(self, case_sweep: SweepResult):
        for complexity in DEFAULT_SWEEP_COMPLEXITIES:
            maes = [case_sweep.cell(depth, complexity).train.mae for depth in DEFAULT_SWEEP_DEPTHS]

            assert all(b <= a + 1e-9 for a, b in zip(maes, maes[1:]))

    def test_training_mae_never_increases_with_split_complexity(self, case_sweep: SweepResult):
        for depth in DEFAULT_SWEEP_DEPTHS:
            maes = [case_sweep.cell(depth, complexity).train.mae for complexity in DEFAULT_SWEEP_COMPLEXITIES]

            assert all(b <= a + 1e-9 for a, b in zip(maes, maes[1:]))

    def test_hyperplanes_train_at_least_as_well_as_axis_splits(self, case_sweep: SweepResult):
        for depth in DEFAULT_SWEEP_DEPTHS:
            axis = case_sweep.cell(depth, 1)
            for complexity in DEFAULT_SWEEP_COMPLEXITIES[1:]:
                assert case_sweep.cell(depth, complexity).train.mae <= axis.train.mae + 1e-9


class TestPlacementOnCaseStudy:
    def test_candidate_layout_trains_at_least_as_well(self, case_placement: PlacementReport):
        assert [r.depth for r in case_placement.records] == [3, 4, 5]
        for record in case_placement.records:
            assert record.candidate_train_mae <= record.fixed_train_mae + 1e-9

    def test_shallow_tree_reads_a_gauge_near_the_outboard_region(self, case_placement: PlacementReport):
        record = case_placement.record(3)

        assert record.nearest_region_distance <= case_placement.extra["near_region_limit"]


class TestCaseStudyMission:
    def test_quiet_mission_replans_and_stays_conservative(
        self, plate: PlateModel, installed: SensorLayout, case_trees: tuple[Tree, Tree]
    ):
        log = run_mission(MissionConfig(), case_trees, plate, installed, NoiseSpec(0.0))

        assert log.switch_step is not None
        assert log.latch_holds()
        assert log.obstacle_choices[85] == "conservative"

    def test_monte_carlo_over_one_hundred_seeds(
        self, plate: PlateModel, installed: SensorLayout, case_trees: tuple[Tree, Tree]
    ):
        summary = monte_carlo(MissionConfig(), case_trees, plate, installed, NoiseSpec(), range(100), n_jobs=4)
        document = summary.to_dict()

        assert summary.latch_violations == ()
        assert document["n_runs"] == 100
        assert document["n_never_switched"] == 0
        assert document["median"] == pytest.approx(float(np.median(summary.switched)))
