from importlib.metadata import version

from .config import (
    DEFAULT_DAMAGE_REGIONS,
    DEFAULT_GRID_VALUES,
    DamageRegion,
    DatagenConfig,
    MaterialConfig,
    MissionConfig,
    NoiseSpec,
    PlateConfig,
    ProjectConfig,
    TrainConfig,
    load_config,
)
from .datagen import (
    Dataset,
    DatasetMetadata,
    append_records,
    generate,
    load_normalize,
    read_dataset,
    risk_weights,
    split,
    write_dataset,
)
from .evaluation import (
    EvalReport,
    SweepResult,
    compose_predictions,
    evaluate,
    plot_sweep,
    sequential_sensor_count,
    sweep,
)
from .exceptions import (
    ArtifactError,
    DomainError,
    InputError,
    SolverError,
    StratificationError,
    StructuralTwinExceptionError,
)
from .learn import TrainingReport, greedy_init, local_search, objective, train, train_report
from .model_library import DamageScenario, ForwardModel, LoadCase, ModelLibrary, StrainField, build_library
from .plate import PlateModel, calibrate_reference_weight, predict_strain, solve_plate
from .sensor_layout import Gauge, SensorLayout, candidate_layout, installed_layout
from .sensor_select import PlacementReport, placement_study, planform_map
from .testing import ForwardModelTestDouble
from .tree import Explanation, LeafDistribution, Split, Tree
from .twin import MissionLog, MonteCarloSummary, TwinState, monte_carlo, run_mission, step

__all__ = [
    "DEFAULT_DAMAGE_REGIONS",
    "DEFAULT_GRID_VALUES",
    "ArtifactError",
    "DamageRegion",
    "DamageScenario",
    "Dataset",
    "DatasetMetadata",
    "DatagenConfig",
    "DomainError",
    "EvalReport",
    "Explanation",
    "ForwardModel",
    "ForwardModelTestDouble",
    "Gauge",
    "InputError",
    "LeafDistribution",
    "LoadCase",
    "MaterialConfig",
    "MissionConfig",
    "MissionLog",
    "ModelLibrary",
    "MonteCarloSummary",
    "NoiseSpec",
    "PlacementReport",
    "PlateConfig",
    "PlateModel",
    "ProjectConfig",
    "SensorLayout",
    "SolverError",
    "Split",
    "StrainField",
    "StratificationError",
    "StructuralTwinExceptionError",
    "SweepResult",
    "TrainConfig",
    "TrainingReport",
    "Tree",
    "TwinState",
    "append_records",
    "build_library",
    "calibrate_reference_weight",
    "candidate_layout",
    "compose_predictions",
    "evaluate",
    "generate",
    "greedy_init",
    "installed_layout",
    "load_config",
    "load_normalize",
    "local_search",
    "monte_carlo",
    "objective",
    "placement_study",
    "planform_map",
    "plot_sweep",
    "predict_strain",
    "read_dataset",
    "risk_weights",
    "run_mission",
    "sequential_sensor_count",
    "solve_plate",
    "split",
    "step",
    "sweep",
    "train",
    "train_report",
    "write_dataset",
]


def __getattr__(name: str) -> str:
    if name != "__version__":
        msg = f"module {__name__!r} has no attribute {name!r}"
        raise AttributeError(msg)

    return version("digitwin_structural")
