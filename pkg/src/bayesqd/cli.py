"""Command-line entry point.

Usage::

    bayesqd list
    bayesqd validate <config.yaml>
    bayesqd run <config.yaml> [--out DIR] [--threads N] [--seed N]

A run config is a YAML file::

    output_dir: results/rosenbrock
    experiments:
      - suite: rosenbrock
        algorithm: BQD_GOWER        # MAP_ELITES | BQD_GOWER | BQD_HYPERSPHERE
        repetitions: 5
        base_seed: 0
        max_evaluations: 160
        config:                     # optional overrides of the algorithm config
          batch_p: 10
          aux_solver: {population_size: 10, generations: 4000}

Absent fields take the library defaults. Each experiment writes
``<index>_<suite>_<algorithm>_runs.csv``, ``..._aggregate.csv`` and one
``..._archive_rep<r>.json`` per repetition into the output directory.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import yaml

from .bayesian_qd import BqdConfig
from .benchmarks import SUITES, get_suite
from .harness import (
    Algorithm,
    ExperimentError,
    ExperimentSpec,
    aggregate_csv,
    atomic_write_text,
    run_experiment,
    runs_csv,
)
from .map_elites import MapElitesConfig

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

logger = logging.getLogger("bayesqd")

_EXPERIMENT_KEYS = {"suite", "algorithm", "repetitions", "base_seed", "initial_size", "max_evaluations", "config"}
_TOP_KEYS = {"output_dir", "experiments"}


class ConfigError(ValueError):
    """Invalid run config; the message names the offending field."""


@dataclass
class RunConfig:
    experiments: list[ExperimentSpec]
    output_dir: Path = Path("results")
    source: str = ""


def _fields(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def _int(value, where: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}, got {value}")
    return value


def _map_elites_config(raw, where: str) -> MapElitesConfig:
    if raw is None:
        return MapElitesConfig()
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping")
    unknown = set(raw) - (_fields(MapElitesConfig) - {"seed"})
    if unknown:
        raise ConfigError(f"{where}.{sorted(unknown)[0]}: unknown field")
    try:
        return MapElitesConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _bqd_config(raw, where: str) -> BqdConfig:
    if raw is None:
        return BqdConfig()
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping")
    allowed = _fields(BqdConfig) - {"seed", "kernel_mode"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"{where}.{sorted(unknown)[0]}: unknown field")
    kwargs = dict(raw)
    if "aux_solver" in kwargs:
        kwargs["aux_solver"] = _map_elites_config(kwargs["aux_solver"], f"{where}.aux_solver")
    if kwargs.get("ev_thresholds") is not None:
        if not isinstance(kwargs["ev_thresholds"], list):
            raise ConfigError(f"{where}.ev_thresholds: expected a list")
        kwargs["ev_thresholds"] = tuple(float(t) for t in kwargs["ev_thresholds"])
    try:
        return BqdConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _experiment(raw, where: str) -> ExperimentSpec:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping")
    unknown = set(raw) - _EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"{where}.{sorted(unknown)[0]}: unknown field")
    if "suite" not in raw:
        raise ConfigError(f"{where}.suite: missing")
    suite = raw["suite"]
    if suite not in SUITES:
        raise ConfigError(f"{where}.suite: unknown suite {suite!r}; choose from {sorted(SUITES)}")
    if "algorithm" not in raw:
        raise ConfigError(f"{where}.algorithm: missing")
    try:
        algorithm = Algorithm(raw["algorithm"])
    except ValueError:
        raise ConfigError(
            f"{where}.algorithm: unknown algorithm {raw['algorithm']!r}; choose from {[a.value for a in Algorithm]}"
        ) from None
    repetitions = _int(raw.get("repetitions", 1), f"{where}.repetitions", 1)
    base_seed = _int(raw.get("base_seed", 0), f"{where}.base_seed")
    initial_size = raw.get("initial_size")
    if initial_size is not None:
        initial_size = _int(initial_size, f"{where}.initial_size", 0)
    budget = raw.get("max_evaluations")
    if budget is not None:
        budget = _int(budget, f"{where}.max_evaluations", 1)
    if algorithm.is_bqd:
        cfg = _bqd_config(raw.get("config"), f"{where}.config")
    else:
        cfg = _map_elites_config(raw.get("config"), f"{where}.config")
    return ExperimentSpec(suite, algorithm, cfg, repetitions, base_seed, initial_size, budget)


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    """Parse a YAML run config; raise :class:`ConfigError` naming the bad field."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: YAML syntax error: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown field")
    exps = raw.get("experiments")
    if not isinstance(exps, list) or not exps:
        raise ConfigError("experiments: expected a non-empty list")
    specs = [_experiment(e, f"experiments[{i}]") for i, e in enumerate(exps)]
    out = raw.get("output_dir", "results")
    if not isinstance(out, str):
        raise ConfigError("output_dir: expected a path string")
    return RunConfig(specs, Path(out), source)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))


def experiment_stem(index: int, spec: ExperimentSpec) -> str:
    return f"{index:02d}_{spec.suite}_{spec.algorithm.value}"


def write_outputs(out_dir: Path, stem: str, result) -> list[Path]:
    paths = [
        atomic_write_text(out_dir / f"{stem}_runs.csv", runs_csv(result.series)),
        atomic_write_text(out_dir / f"{stem}_aggregate.csv", aggregate_csv(result.series)),
    ]
    for run in result.runs:
        paths.append(atomic_write_text(out_dir / f"{stem}_archive_rep{run.repetition}.json",
                                       run.archive.to_json() + "\n"))
    return paths


def cmd_list(out=None) -> int:
    for name in SUITES:
        pb = get_suite(name)
        s = pb.space
        print(f"{name} {s.d_c} {s.d_d + s.d_q} {pb.n_features} {pb.n_constraints} {pb.grid.n_bins}", file=out or sys.stdout)
    return EXIT_OK


def cmd_validate(config_path, out=None) -> int:
    cfg = load_config(config_path)
    print(f"{config_path}: ok ({len(cfg.experiments)} experiments)", file=out or sys.stdout)
    return EXIT_OK


def cmd_run(config_path, out_dir=None, threads=None, seed=None, out=None) -> int:
    cfg = load_config(config_path)
    out_dir = Path(out_dir) if out_dir is not None else cfg.output_dir
    for i, spec in enumerate(cfg.experiments):
        if seed is not None:
            spec = dataclasses.replace(spec, base_seed=seed)
        stem = experiment_stem(i, spec)
        try:
            result = run_experiment(spec, threads=threads)
        except ExperimentError as exc:
            print(f"error: {stem}: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        write_outputs(out_dir, stem, result)
        qd, niches = result.series.final()
        print(f"{stem} reps={spec.repetitions} evals={int(result.series.checkpoints[-1])} "
              f"median_qd={qd:.6g} median_niches={niches:g}", file=out or sys.stdout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesqd", description="Constrained mixed-variable quality-diversity experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiments of a YAML config")
    run.add_argument("config")
    run.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    run.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
    run.add_argument("--seed", type=int, default=None, help="override base_seed of every experiment")
    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")
    sub.add_parser("list", help="list benchmark suites: name d_c d_q n n_g bins")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "list":
            return cmd_list()
        if args.command == "validate":
            return cmd_validate(args.config)
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads: must be >= 1")
        return cmd_run(args.config, args.out, args.threads, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime failure; outputs already written stay in place
        print(f"error: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
