import numpy as np
import pytest

from digitwin.structural import (
    Dataset,
    ModelLibrary,
    NoiseSpec,
    PlateModel,
    SensorLayout,
    TrainConfig,
    Tree,
    build_library,
    candidate_layout,
    generate,
    installed_layout,
    split,
    train,
)


@pytest.fixture(scope="session")
def plate() -> PlateModel:
    return PlateModel()


@pytest.fixture(scope="session")
def library() -> ModelLibrary:
    return build_library()


@pytest.fixture(scope="session")
def installed() -> SensorLayout:
    return installed_layout()


@pytest.fixture(scope="session")
def candidate() -> SensorLayout:
    return candidate_layout()


@pytest.fixture(scope="session")
def noise_free(plate: PlateModel, library: ModelLibrary, installed: SensorLayout) -> Dataset:
    return generate(plate, library, installed, plate.load_case(3.0), NoiseSpec(0.0), samples=1, seed=0)


@pytest.fixture(scope="session")
def noisy(plate: PlateModel, library: ModelLibrary, installed: SensorLayout) -> Dataset:
    return generate(plate, library, installed, plate.load_case(3.0), NoiseSpec(), samples=12, seed=0)


@pytest.fixture(scope="session")
def noisy_split(noisy: Dataset) -> tuple[Dataset, Dataset]:
    return split(noisy, 0.3, seed=0)


@pytest.fixture(scope="session")
def label_tree(noise_free: Dataset) -> Tree:
    return train(noise_free, TrainConfig(max_depth=5, restarts=1), "label")


@pytest.fixture(scope="session")
def case_study(plate: PlateModel, library: ModelLibrary, installed: SensorLayout) -> Dataset:
    return generate(plate, library, installed, plate.load_case(3.0), NoiseSpec(), samples=100, seed=0)


@pytest.fixture(scope="session")
def case_study_split(case_study: Dataset) -> tuple[Dataset, Dataset]:
    return split(case_study, 0.3, seed=0)


@pytest.fixture(scope="session")
def library_trees(label_tree: Tree, library: ModelLibrary) -> tuple[Tree, Tree]:
    """Per-parameter views of the noise-free label tree; every leaf is pure."""
    n = len(library.grid_values)
    labels = np.arange(len(library))
    return (
        label_tree.map_labels((labels // n).tolist(), library.grid_values, "mu1"),
        label_tree.map_labels((labels % n).tolist(), library.grid_values, "mu2"),
    )


@pytest.fixture(scope="session")
def mission_trees(noisy_split: tuple[Dataset, Dataset]) -> tuple[Tree, Tree]:
    cfg = TrainConfig(max_depth=3, restarts=3)
    return train(noisy_split[0], cfg, "mu1"), train(noisy_split[0], cfg, "mu2")
