import json
from pathlib import Path

import pytest

from digitwin.structural import (
    DamageRegion,
    DomainError,
    MissionConfig,
    NoiseSpec,
    PlateConfig,
    ProjectConfig,
    TrainConfig,
    load_config,
)

__all__ = (
    "TestDamageRegion",
    "TestMissionConfig",
    "TestProjectConfig",
    "TestTrainConfig",
)


class TestDamageRegion:
    def test_contains_is_closed(self):
        region = DamageRegion(span_range=(0.4, 0.5), chord_range=(0.42, 0.95))

        assert region.contains(0.42, 0.4)
        assert region.contains(0.95, 0.5)
        assert not region.contains(0.41, 0.45)

    def test_distance_is_zero_inside_and_metric_outside(self):
        region = DamageRegion(span_range=(0.4, 0.5), chord_range=(0.5, 1.0))

        assert region.distance(0.6, 0.45, span=2.0, chord=1.0) == 0.0
        assert region.distance(0.6, 0.3, span=2.0, chord=1.0) == pytest.approx(0.2)

    def test_rejects_region_outside_planform(self):
        with pytest.raises(DomainError):
            DamageRegion(span_range=(0.5, 1.2), chord_range=(0.0, 0.5))

    def test_overlapping_regions_are_rejected(self):
        a = DamageRegion(span_range=(0.4, 0.5), chord_range=(0.4, 0.9))
        b = DamageRegion(span_range=(0.45, 0.6), chord_range=(0.5, 0.7))

        with pytest.raises(DomainError):
            PlateConfig(damage_regions=(a, b))


class TestTrainConfig:
    def test_sparsity_budget(self):
        assert TrainConfig(max_split_complexity=4).sparsity_budget(20) == 4
        assert TrainConfig(max_split_complexity=4).sparsity_budget(2) == 2
        assert TrainConfig(max_split_complexity=None).sparsity_budget(20) == 20

    def test_hyperplanes_flag(self):
        assert not TrainConfig().hyperplanes
        assert TrainConfig(max_split_complexity=2).hyperplanes
        assert TrainConfig(max_split_complexity=None).hyperplanes

    @pytest.mark.parametrize(
        "changes",
        [{"max_depth": -1}, {"max_split_complexity": 0}, {"alpha": -0.1}, {"min_leaf": 0}, {"restarts": 0}],
    )
    def test_invalid_values(self, changes):
        with pytest.raises(DomainError):
            TrainConfig(**changes)


class TestMissionConfig:
    def test_default_schedule_is_linear(self):
        cfg = MissionConfig()

        assert cfg.true_scenario(0) == (0.0, 0.0)
        assert cfg.true_scenario(99) == pytest.approx((80.0, 80.0))
        assert cfg.true_scenario(50)[0] == pytest.approx(80 * 50 / 99)

    def test_default_obstacles(self):
        assert MissionConfig().obstacle_steps == (20, 55, 85)

    def test_explicit_trajectory(self):
        cfg = MissionConfig(n_steps=2, trajectory=((10.0, 0.0), (20.0, 5.0)))

        assert cfg.true_scenario(1) == (20.0, 5.0)

    def test_trajectory_length_must_match(self):
        with pytest.raises(DomainError):
            MissionConfig(n_steps=3, trajectory=((0.0, 0.0),))

    def test_obstacle_outside_mission(self):
        with pytest.raises(DomainError):
            MissionConfig(n_steps=10, obstacle_steps=(12,))

    def test_estimate_rule(self):
        assert MissionConfig().estimate == "median"
        assert MissionConfig(estimate="argmax").estimate == "argmax"
        with pytest.raises(DomainError):
            MissionConfig(estimate="mean")  # type: ignore[arg-type]


class TestProjectConfig:
    def test_none_gives_defaults(self):
        assert load_config(None) == ProjectConfig()

    def test_file_values_and_defaults(self, tmp_path: Path):
        path = tmp_path / "config.json"
        path.write_text(
            json.dumps(
                {
                    "noise": {"variance": 0.0},
                    "train": {"max_depth": 4, "max_split_complexity": None},
                    "plate": {"damage_regions": [{"span_range": [0.1, 0.2], "chord_range": [0.1, 0.2]}]},
                }
            )
        )

        cfg = load_config(path)

        assert cfg.noise == NoiseSpec(0.0)
        assert cfg.train.max_depth == 4
        assert cfg.train.max_split_complexity is None
        assert cfg.plate.damage_regions == (DamageRegion((0.1, 0.2), (0.1, 0.2)),)
        assert cfg.mission == MissionConfig()

    def test_round_trip_through_dict(self):
        cfg = ProjectConfig(train=TrainConfig(max_depth=6))

        assert ProjectConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg

    @pytest.mark.parametrize("data", [{"bogus": {}}, {"train": {"depth": 3}}, {"plate": {"wingspan": 2.0}}])
    def test_unknown_keys_are_rejected(self, data):
        with pytest.raises(DomainError):
            ProjectConfig.from_dict(data)

    def test_unreadable_file(self, tmp_path: Path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")

        with pytest.raises(DomainError):
            load_config(path)

    def test_negative_variance(self):
        with pytest.raises(DomainError):
            NoiseSpec(-1.0)
