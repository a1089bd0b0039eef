"""Command-line entry point: ``digitwin-structural <command> [options]``.

Every command computes into a staging directory inside ``--out`` and moves the
files into place only once all of them are written, next to a
``manifest.json`` holding the resolved configuration and the sha256 of every
input and output. Inputs that sit next to a manifest are checked against it.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import shutil
import sys
import tempfile
from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, cast

import numpy as np

from .config import ProjectConfig, load_config
from .datagen import Target, generate, read_dataset, split, write_dataset
from .evaluation import (
    DEFAULT_SWEEP_COMPLEXITIES,
    DEFAULT_SWEEP_DEPTHS,
    evaluate,
    plot_sweep,
    sequential_sensor_count,
    sweep,
)
from .exceptions import ArtifactError, DomainError, StructuralTwinExceptionError
from .learn import train_report
from .model_library import build_library
from .plate import PlateModel, calibrate_reference_weight
from .sensor_layout import SensorLayout, candidate_layout, installed_layout
from .sensor_select import DEFAULT_PLACEMENT_DEPTHS, placement_study, planform_map
from .tree import Tree
from .twin import monte_carlo, run_mission

__all__ = (
    "RunConfig",
    "main",
)

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"

EXIT_FAILURE = 1
EXIT_CONFIG = 2


@dataclass(frozen=True)
class RunConfig:
    """One resolved invocation.

    Args:
        command: Subcommand name
        project: Configuration file values with flag overrides applied
        out: Output directory
        inputs: Input files by role
        options: Command options that are not part of the project configuration
    """

    command: str
    project: ProjectConfig
    out: Path
    inputs: dict[str, Path] = field(default_factory=dict)
    options: dict[str, Any] = field(default_factory=dict)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _verified(path: Path) -> Path:
    """``path`` after checking it exists and matches the manifest next to it, if any."""
    if not path.is_file():
        raise ArtifactError(f"Input {path} does not exist")
    manifest = path.parent / MANIFEST
    if manifest.is_file():
        try:
            outputs = json.loads(manifest.read_text()).get("outputs", {})
        except json.JSONDecodeError as e:
            raise ArtifactError(f"Unreadable manifest {manifest}: {e}") from e
        expected = outputs.get(path.name)
        if expected is not None and expected != _sha256(path):
            raise ArtifactError(f"{path} does not match the sha256 recorded in {manifest}")
    return path


def _complexity(text: str) -> int | None:
    if text.lower() in ("none", "unlimited"):
        return None
    return int(text)


def _resolve(args: argparse.Namespace) -> RunConfig:
    project = load_config(args.config)
    train_changes = {
        name: getattr(args, name)
        for name in ("alpha", "min_leaf", "restarts", "seed", "n_jobs")
        if getattr(args, name, None) is not None
    }
    if getattr(args, "depth", None) is not None:
        train_changes["max_depth"] = args.depth
    if getattr(args, "split_complexity", None) is not None:
        train_changes["max_split_complexity"] = _complexity(args.split_complexity)
    datagen_changes = {
        name: getattr(args, name) for name in ("seed", "layout") if getattr(args, name, None) is not None
    }
    if getattr(args, "s", None) is not None:
        datagen_changes["samples"] = args.s
    if getattr(args, "load_factor", None) is not None:
        datagen_changes["load_factor"] = args.load_factor
    mission_changes = {"seed": args.seed} if getattr(args, "seed", None) is not None else {}
    noise = project.noise
    if getattr(args, "variance", None) is not None:
        noise = dataclasses.replace(noise, variance=args.variance)
    project = dataclasses.replace(
        project,
        noise=noise,
        train=project.train.replace(**train_changes),
        datagen=project.datagen.replace(**datagen_changes),
        mission=project.mission.replace(**mission_changes),
    )
    inputs = {
        role: _verified(Path(value))
        for role in ("dataset", "test_dataset", "tree", "tree_mu1", "tree_mu2")
        if (value := getattr(args, role, None)) is not None
    }
    options = {
        k: v
        for k, v in vars(args).items()
        if k not in {"func", "config", "out", "log_level", *inputs} and v is not None
    }
    return RunConfig(args.command, project, Path(args.out), inputs, options)


class _Staging:
    """Files written by one command, moved into the output directory together."""

    def __init__(self, root: Path) -> None:
        self.root = root
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.root / name

    def write_text(self, name: str, text: str) -> None:
        self.path(name).write_text(text)


@contextmanager
def _staged(run: RunConfig) -> Iterator[_Staging]:
    run.out.mkdir(parents=True, exist_ok=True)
    root = Path(tempfile.mkdtemp(prefix=".staging-", dir=run.out))
    try:
        staging = _Staging(root)
        yield staging
        outputs: dict[str, str] = {}
        for name in staging.files:
            written = root / name
            outputs[name] = _sha256(written)
            sidecar = written.with_suffix(".json")
            if written.suffix == ".csv" and sidecar.exists():
                outputs[sidecar.name] = _sha256(sidecar)
        manifest = {
            "command": run.command,
            "config": run.project.to_dict(),
            "options": {k: str(v) if isinstance(v, Path) else v for k, v in sorted(run.options.items())},
            "inputs": {role: {"path": str(p), "sha256": _sha256(p)} for role, p in sorted(run.inputs.items())},
            "outputs": outputs,
        }
        (root / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str))
        for item in sorted(root.iterdir()):
            item.replace(run.out / item.name)
    finally:
        shutil.rmtree(root, ignore_errors=True)


def _layout(run: RunConfig) -> SensorLayout:
    regions = run.project.plate.damage_regions
    return candidate_layout(regions) if run.project.datagen.layout == "candidate" else installed_layout(regions)


def _target(run: RunConfig) -> Target:
    return cast(Target, run.options.get("target", "mu1"))


def cmd_generate(run: RunConfig) -> None:
    gen = run.project.datagen
    model = PlateModel(run.project.plate)
    library = build_library(gen.grid_values)
    ds = generate(
        model,
        library,
        _layout(run),
        model.load_case(gen.load_factor),
        run.project.noise,
        gen.samples,
        gen.seed,
        n_jobs=run.project.train.n_jobs,
    )
    with _staged(run) as out:
        write_dataset(ds, out.path("dataset.csv"))
        if gen.samples >= 2:
            train_ds, test_ds = split(ds, gen.test_fraction, gen.seed)
            write_dataset(train_ds, out.path("train.csv"))
            write_dataset(test_ds, out.path("test.csv"))
        else:
            logger.warning("One sample per scenario: no train/test split written")


def cmd_train(run: RunConfig) -> None:
    ds = read_dataset(run.inputs["dataset"])
    report = train_report(ds, run.project.train, _target(run), tie_break=run.options.get("tie_break", "lowest"))
    result = evaluate(report.tree, ds)
    report = dataclasses.replace(report, extra={"training": dataclasses.asdict(result)})
    with _staged(run) as out:
        report.tree.save(out.path("tree.json"))
        report.save(out.path("training_report.json"))


def cmd_eval(run: RunConfig) -> None:
    tree = Tree.load(run.inputs["tree"])
    ds = read_dataset(run.inputs["dataset"])
    result = dataclasses.asdict(evaluate(tree, ds))
    result["mean_gauges_read"] = sequential_sensor_count(tree, ds.X)
    with _staged(run) as out:
        out.write_text("evaluation.json", json.dumps(result, indent=2, sort_keys=True))


def cmd_sweep(run: RunConfig) -> None:
    if "test_dataset" not in run.inputs:
        raise ArtifactError("sweep needs --test-dataset")
    train_ds = read_dataset(run.inputs["dataset"])
    test_ds = read_dataset(run.inputs["test_dataset"])
    result = sweep(
        train_ds,
        test_ds,
        _target(run),
        run.options.get("depths", DEFAULT_SWEEP_DEPTHS),
        [_complexity(c) for c in run.options["complexities"]]
        if "complexities" in run.options
        else DEFAULT_SWEEP_COMPLEXITIES,
        run.project.train,
    )
    with _staged(run) as out:
        result.to_csv(out.path("sweep.csv"))
        plot_sweep(result, out.path("sweep.png"))


def cmd_sensors(run: RunConfig) -> None:
    gen = run.project.datagen
    model = PlateModel(run.project.plate)
    report = placement_study(
        model,
        build_library(gen.grid_values),
        model.load_case(gen.load_factor),
        run.project.noise,
        gen.samples,
        run.options.get("depths", DEFAULT_PLACEMENT_DEPTHS),
        _complexity(run.options.get("split_complexity", "4")),
        gen.seed,
        run.project.train,
        cast(Target, run.options.get("target", "mu2")),
        gen.test_fraction,
        run.project.plate,
    )
    maps = [
        f"depth {r.depth}: {len(r.selected_installed)} installed + {len(r.selected_new)} new gauges\n"
        + planform_map(report.candidate, r.selected, run.project.plate)
        for r in report.records
    ]
    with _staged(run) as out:
        report.to_csv(out.path("placement.csv"))
        out.write_text("planform.txt", "\n\n".join(maps) + "\n")


def _mission_inputs(run: RunConfig) -> tuple[PlateModel, tuple[Tree, Tree], SensorLayout]:
    trees = (Tree.load(run.inputs["tree_mu1"]), Tree.load(run.inputs["tree_mu2"]))
    return PlateModel(run.project.plate), trees, installed_layout(run.project.plate.damage_regions)


def cmd_simulate(run: RunConfig) -> None:
    model, trees, layout = _mission_inputs(run)
    log = run_mission(run.project.mission, trees, model, layout, run.project.noise)
    with _staged(run) as out:
        log.to_csv(out.path("mission_log.csv"))
        log.write_summary(out.path("mission_summary.json"))
        out.write_text("mission_frames.txt", log.frames() + "\n")


def cmd_montecarlo(run: RunConfig) -> None:
    model, trees, layout = _mission_inputs(run)
    first = run.project.mission.seed
    seeds = range(first, first + run.options.get("runs", 100))
    summary = monte_carlo(
        run.project.mission, trees, model, layout, run.project.noise, list(seeds), run.project.train.n_jobs
    )
    with _staged(run) as out:
        summary.save(out.path("montecarlo.json"))


def cmd_explain(run: RunConfig) -> None:
    tree = Tree.load(run.inputs["tree"])
    if "features" in run.options:
        x = np.array([float(v) for v in run.options["features"].split(",")])
    elif "dataset" in run.inputs:
        x = read_dataset(run.inputs["dataset"]).X[run.options.get("row", 0)]
    else:
        raise ArtifactError("explain needs --features or --dataset")
    text = "\n".join(tree.explain(x).lines())
    text += f"\ngauges read: {', '.join(tree.feature_names[j] for j in tree.path_features(x))}\n"
    print(text, end="")
    with _staged(run) as out:
        out.write_text("explanation.txt", text)


def cmd_calibrate(run: RunConfig) -> None:
    weight = calibrate_reference_weight(
        PlateModel(run.project.plate),
        run.options.get("target_microstrain", 1000.0),
        run.options.get("load_factor", 3.0),
    )
    print(f"{weight:.6f}")
    result = {
        "reference_weight": weight,
        "target_microstrain": run.options.get("target_microstrain", 1000.0),
        "load_factor": run.options.get("load_factor", 3.0),
    }
    with _staged(run) as out:
        out.write_text("calibration.json", json.dumps(result, indent=2, sort_keys=True))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON project configuration")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--log-level", default="WARNING", choices=("DEBUG", "INFO", "WARNING", "ERROR"))


def _add_train(p: argparse.ArgumentParser) -> None:
    p.add_argument("--depth", type=int)
    p.add_argument("--split-complexity", help="features per split, or 'none' for unrestricted")
    p.add_argument("--alpha", type=float)
    p.add_argument("--min-leaf", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--n-jobs", type=int)


def _add_datagen(p: argparse.ArgumentParser) -> None:
    p.add_argument("--s", type=int, help="noise draws per library scenario")
    p.add_argument("--variance", type=float)
    p.add_argument("--layout", choices=("installed", "candidate"))
    p.add_argument("--load-factor", type=float)


COMMANDS: dict[str, Callable[[RunConfig], None]] = {
    "generate": cmd_generate,
    "train": cmd_train,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "sensors": cmd_sensors,
    "simulate": cmd_simulate,
    "montecarlo": cmd_montecarlo,
    "explain": cmd_explain,
    "calibrate": cmd_calibrate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="digitwin-structural", description="Structural digital twin from optimal trees"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    targets = ("label", "mu1", "mu2")

    p = sub.add_parser("generate", help="noisy training data from the model library")
    _add_common(p)
    _add_datagen(p)
    p.add_argument("--n-jobs", type=int)

    p = sub.add_parser("train", help="train an optimal tree")
    _add_common(p)
    _add_train(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--target", choices=targets, default="mu1")
    p.add_argument("--tie-break", choices=("lowest", "most_damaged"), default="lowest")

    p = sub.add_parser("eval", help="MAE and misclassification of a tree")
    _add_common(p)
    p.add_argument("--tree", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)

    p = sub.add_parser("sweep", help="depth by split complexity grid")
    _add_common(p)
    _add_train(p)
    p.add_argument("--dataset", type=Path, required=True, help="training dataset")
    p.add_argument("--test-dataset", type=Path)
    p.add_argument("--target", choices=targets, default="mu1")
    p.add_argument("--depths", type=int, nargs="+")
    p.add_argument("--complexities", nargs="+", help="e.g. 1 2 4 none")

    p = sub.add_parser("sensors", help="installed against candidate sensor layout")
    _add_common(p)
    _add_train(p)
    _add_datagen(p)
    p.add_argument("--target", choices=targets, default="mu2")
    p.add_argument("--depths", type=int, nargs="+")

    for name, help_text in (("simulate", "fly one mission"), ("montecarlo", "switch-step statistics over seeds")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        p.add_argument("--tree-mu1", type=Path, required=True)
        p.add_argument("--tree-mu2", type=Path, required=True)
        p.add_argument("--variance", type=float)
        if name == "montecarlo":
            p.add_argument("--runs", type=int, default=100)
            p.add_argument("--n-jobs", type=int)

    p = sub.add_parser("explain", help="decision path of one measurement")
    _add_common(p)
    p.add_argument("--tree", type=Path, required=True)
    p.add_argument("--dataset", type=Path)
    p.add_argument("--row", type=int, default=0)
    p.add_argument("--features", help="comma-separated load-normalized strains")

    p = sub.add_parser("calibrate", help="reference weight for a target peak strain")
    _add_common(p)
    p.add_argument("--target-microstrain", type=float, default=1000.0)
    p.add_argument("--load-factor", type=float, default=3.0)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        run = _resolve(args)
    except (DomainError, ArtifactError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        COMMANDS[run.command](run)
    except ArtifactError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except StructuralTwinExceptionError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return 0


if __name__ == "__main__":
    sys.exit(main())
