"""Experiment runner: bind a config to worlds, strategies and reports.

Configuration is a single nested JSON file; a handful of flags override
file values for quick sweeps.  Exit codes: 2 invalid spec, 3 bridge
launch failure, 4 mid-run scorer/learner failure (partial logs retained).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path

from . import metrics
from .bridge_client import BridgeLaunchError, BridgeScorer
from .loop import (
    GoldOracle,
    RunAborted,
    RunConfig,
    RunLog,
    read_run_log_json,
    run_experiment,
    write_run_log_csv,
    write_run_log_json,
)
from .pool import Corpus, load_corpus_jsonl, save_corpus_jsonl
from .scoring import Weights
from .seeds import seed_for
from .simworld import (
    SimScorer,
    SimulatedLearner,
    WorldConfig,
    WorldGenerationError,
    generate_corpus,
)
from .strategy import AcquisitionConfig, StrategyKind

SCORER_CMD_ENV = "HADAS_SCORER_CMD"


class SpecError(ValueError):
    """Invalid experiment spec; ``field`` is the offending key path."""

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path


@dataclass(frozen=True)
class StrategySpec:
    kind: StrategyKind
    acquisition: AcquisitionConfig = field(default_factory=AcquisitionConfig)


@dataclass(frozen=True)
class ExperimentSpec:
    mode: str = "synthetic"
    world: WorldConfig = field(default_factory=WorldConfig)
    corpus_paths: dict[str, str] | None = None
    strategies: tuple[StrategySpec, ...] = ()
    repeats: int = 5
    budget: int = 100
    seed: int = 0
    output_dir: str = "out"
    scorer: str = "synthetic"
    bridge_command: str | None = None
    regenerate_summaries_each_round: bool = True
    patience: int | None = None
    checkpoint_fraction: float = 0.3


def _require(cond: bool, field_path: str, message: str) -> None:
    if not cond:
        raise SpecError(field_path, message)


def _build_world(raw: dict, path: str) -> WorldConfig:
    known = {f.name for f in dc_fields(WorldConfig)}
    for key in raw:
        _require(key in known, f"{path}.{key}", "unknown world key")
    coerced = dict(raw)
    for key in ("difficulty_means", "init_competence"):
        if key in coerced:
            coerced[key] = tuple(coerced[key])
    try:
        return WorldConfig(**coerced)
    except (TypeError, ValueError) as exc:
        raise SpecError(path, str(exc)) from None


def _build_strategy(raw: dict, path: str) -> StrategySpec:
    _require(isinstance(raw, dict), path, "must be an object")
    _require("kind" in raw, f"{path}.kind", "required")
    try:
        kind = StrategyKind.parse(str(raw["kind"]))
    except ValueError as exc:
        raise SpecError(f"{path}.kind", str(exc)) from None
    lam = raw.get("lambda", 0.33)
    weights_raw = raw.get("weights")
    try:
        weights = Weights(*weights_raw) if weights_raw is not None else Weights()
        acq = AcquisitionConfig(
            lam=float(lam),
            weights=weights,
            single_type_with_diversity=bool(raw.get("single_type_with_diversity", False)),
        )
    except (TypeError, ValueError) as exc:
        raise SpecError(path, str(exc)) from None
    extras = set(raw) - {"kind", "lambda", "weights", "single_type_with_diversity"}
    if extras:
        raise SpecError(f"{path}.{sorted(extras)[0]}", "unknown strategy key")
    return StrategySpec(kind=kind, acquisition=acq)


def spec_from_dict(raw: dict) -> ExperimentSpec:
    _require(isinstance(raw, dict), "spec", "must be a JSON object")
    mode = raw.get("mode", "synthetic")
    _require(mode in ("synthetic", "corpus-file"), "mode", "must be 'synthetic' or 'corpus-file'")

    world = _build_world(raw.get("world", {}), "world") if mode == "synthetic" else WorldConfig()
    corpus_paths = None
    if mode == "corpus-file":
        corpus_raw = raw.get("corpus")
        _require(isinstance(corpus_raw, dict), "corpus", "required in corpus-file mode")
        for split in ("train", "val", "test"):
            _require(split in corpus_raw, f"corpus.{split}", "required")
        corpus_paths = {k: str(v) for k, v in corpus_raw.items()}
        if "world" in raw:
            world = _build_world(raw["world"], "world")

    strategies_raw = raw.get("strategies", [])
    _require(isinstance(strategies_raw, list) and strategies_raw, "strategies", "need at least one strategy")
    strategies = tuple(
        _build_strategy(s, f"strategies[{i}]") for i, s in enumerate(strategies_raw)
    )

    repeats = raw.get("repeats", 5)
    _require(isinstance(repeats, int) and repeats >= 1, "repeats", "must be an integer >= 1")
    budget = raw.get("budget", 100)
    _require(isinstance(budget, int) and budget >= 1, "budget", "must be an integer >= 1")
    seed = raw.get("seed", 0)
    _require(isinstance(seed, int), "seed", "must be an integer")
    patience = raw.get("patience")
    _require(
        patience is None or (isinstance(patience, int) and patience >= 1),
        "patience", "must be null or an integer >= 1",
    )
    fraction = raw.get("checkpoint_fraction", 0.3)
    _require(
        isinstance(fraction, (int, float)) and 0.0 < fraction <= 1.0,
        "checkpoint_fraction", "must be in (0, 1]",
    )

    scorer_raw = raw.get("scorer", "synthetic")
    bridge_command = None
    if isinstance(scorer_raw, dict):
        _require("bridge" in scorer_raw, "scorer.bridge", "required for a bridge scorer")
        scorer, bridge_command = "bridge", str(scorer_raw["bridge"])
    else:
        _require(scorer_raw in ("synthetic", "bridge"), "scorer", "must be 'synthetic' or a bridge object")
        scorer = scorer_raw
        if scorer == "bridge":
            bridge_command = raw.get("bridge_command")

    known = {
        "mode", "world", "corpus", "strategies", "repeats", "budget", "seed",
        "output_dir", "scorer", "bridge_command", "regenerate_summaries_each_round",
        "patience", "checkpoint_fraction",
    }
    extras = set(raw) - known
    if extras:
        raise SpecError(sorted(extras)[0], "unknown spec key")

    return ExperimentSpec(
        mode=mode,
        world=world,
        corpus_paths=corpus_paths,
        strategies=strategies,
        repeats=repeats,
        budget=budget,
        seed=seed,
        output_dir=str(raw.get("output_dir", "out")),
        scorer=scorer,
        bridge_command=bridge_command,
        regenerate_summaries_each_round=bool(raw.get("regenerate_summaries_each_round", True)),
        patience=patience,
        checkpoint_fraction=float(fraction),
    )


def spec_to_dict(spec: ExperimentSpec) -> dict:
    out: dict = {
        "mode": spec.mode,
        "strategies": [
            {
                "kind": s.kind.value,
                "lambda": s.acquisition.lam,
                "weights": list(s.acquisition.weights.as_tuple()),
                "single_type_with_diversity": s.acquisition.single_type_with_diversity,
            }
            for s in spec.strategies
        ],
        "repeats": spec.repeats,
        "budget": spec.budget,
        "seed": spec.seed,
        "output_dir": spec.output_dir,
        "regenerate_summaries_each_round": spec.regenerate_summaries_each_round,
        "patience": spec.patience,
        "checkpoint_fraction": spec.checkpoint_fraction,
    }
    if spec.mode == "synthetic":
        world = {f.name: getattr(spec.world, f.name) for f in dc_fields(WorldConfig)}
        for key in ("difficulty_means", "init_competence"):
            world[key] = list(world[key])
        out["world"] = world
    else:
        out["corpus"] = dict(spec.corpus_paths or {})
    out["scorer"] = {"bridge": spec.bridge_command} if spec.scorer == "bridge" else spec.scorer
    return out


def load_spec(path: str | Path) -> ExperimentSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise SpecError("spec", f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SpecError("spec", f"{path} is not valid JSON: {exc}") from None
    return spec_from_dict(raw)


def derived_seed(base_seed: int, strategy_index: int, repeat_index: int) -> int:
    # strategies deliberately share the repeat's seed: paired comparisons
    # run on identical worlds and noise streams
    del strategy_index
    return base_seed + repeat_index


def _load_split_corpora(spec: ExperimentSpec) -> tuple[Corpus, Corpus, Corpus]:
    paths = spec.corpus_paths or {}
    try:
        return (
            load_corpus_jsonl(paths["train"]),
            load_corpus_jsonl(paths["test"]),
            load_corpus_jsonl(paths["val"]),
        )
    except (OSError, ValueError) as exc:
        raise SpecError("corpus", str(exc)) from None


def _make_scorer(spec: ExperimentSpec, learner: SimulatedLearner, run_seed: int):
    if spec.scorer == "synthetic":
        return SimScorer(
            learner, noise_seed=seed_for(run_seed, "noise"), noise_sigma=spec.world.noise_sigma
        )
    command = os.environ.get(SCORER_CMD_ENV) or spec.bridge_command
    if not command:
        raise SpecError("scorer.bridge", f"no bridge command (set it or {SCORER_CMD_ENV})")
    return BridgeScorer(command)


def run_spec(spec: ExperimentSpec) -> dict:
    """Execute repeats x strategies runs and write logs, curves and the table."""
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    logs_by_strategy: dict[str, list[RunLog]] = {s.kind.value: [] for s in spec.strategies}
    for repeat in range(spec.repeats):
        if spec.mode == "synthetic":
            world = WorldConfig(**{
                **{f.name: getattr(spec.world, f.name) for f in dc_fields(WorldConfig)},
                "seed": spec.world.seed + repeat,
            })
            train, test, val = generate_corpus(world)
        else:
            train, test, val = _load_split_corpora(spec)
        for s_index, strat in enumerate(spec.strategies):
            run_seed = derived_seed(spec.seed, s_index, repeat)
            learner = SimulatedLearner(
                [train, test, val],
                eta=spec.world.learning_rate_eta,
                init_competence=spec.world.init_competence,
            )
            scorer = _make_scorer(spec, learner, run_seed)
            cfg = RunConfig(
                strategy=strat.kind,
                acquisition=strat.acquisition,
                budget=spec.budget,
                seed=run_seed,
                regenerate_summaries_each_round=spec.regenerate_summaries_each_round,
                patience=spec.patience,
            )
            stem = f"run_{strat.kind.value}_{repeat}"
            try:
                log = run_experiment(cfg, train, learner, scorer, GoldOracle(train), val, test)
            except RunAborted as exc:
                partial = RunLog(
                    strategy=strat.kind.value, seed=run_seed,
                    budget=spec.budget, records=exc.records,
                )
                write_run_log_csv(partial, out / f"{stem}.partial.csv")
                write_run_log_json(partial, out / f"{stem}.partial.json")
                raise
            finally:
                if isinstance(scorer, BridgeScorer):
                    scorer.close()
            write_run_log_csv(log, out / f"{stem}.csv")
            write_run_log_json(log, out / f"{stem}.json")
            logs_by_strategy[strat.kind.value].append(log)

    summaries = {
        name: metrics.aggregate_runs(logs) for name, logs in logs_by_strategy.items()
    }
    return metrics.report(summaries, spec.checkpoint_fraction, out)


def report_dir(output_dir: str | Path, fraction: float) -> dict:
    """Re-aggregate saved run logs in a directory and rewrite the reports."""
    out = Path(output_dir)
    logs_by_strategy: dict[str, list[RunLog]] = {}
    for path in sorted(out.glob("run_*.json")):
        if path.name.endswith(".partial.json"):
            continue
        log = read_run_log_json(path)
        logs_by_strategy.setdefault(log.strategy, []).append(log)
    if not logs_by_strategy:
        raise SpecError("output_dir", f"no run_*.json logs found in {out}")
    summaries = {
        name: metrics.aggregate_runs(logs) for name, logs in logs_by_strategy.items()
    }
    return metrics.report(summaries, fraction, out)


def _apply_overrides(spec: ExperimentSpec, args: argparse.Namespace) -> ExperimentSpec:
    raw = spec_to_dict(spec)
    if args.strategy is not None:
        kind = StrategyKind.parse(args.strategy)
        kept = [s for s in raw["strategies"] if s["kind"] == kind.value]
        raw["strategies"] = kept or [{"kind": kind.value}]
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.budget is not None:
        raw["budget"] = args.budget
    if getattr(args, "lam", None) is not None:
        for s in raw["strategies"]:
            s["lambda"] = args.lam
    if args.output_dir is not None:
        raw["output_dir"] = args.output_dir
    return spec_from_dict(raw)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="hadas", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment spec")
    p_run.add_argument("spec", help="path to the experiment JSON file")
    p_run.add_argument("--strategy", help="run only this strategy")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--budget", type=int)
    p_run.add_argument("--lambda", dest="lam", type=float)
    p_run.add_argument("--output-dir")

    p_report = sub.add_parser("report", help="re-aggregate saved logs")
    p_report.add_argument("output_dir")
    p_report.add_argument("--fraction", type=float, default=0.3)

    p_validate = sub.add_parser("validate", help="check a spec file")
    p_validate.add_argument("spec")

    p_world = sub.add_parser("gen-world", help="write a synthetic corpus file")
    p_world.add_argument("world_config", help="path to a world-config JSON file")
    p_world.add_argument("--out", required=True)
    p_world.add_argument("--split", choices=("train", "test", "val"), default="train")

    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            spec = _apply_overrides(load_spec(args.spec), args)
            run_spec(spec)
            return 0
        if args.command == "report":
            report_dir(args.output_dir, args.fraction)
            return 0
        if args.command == "validate":
            load_spec(args.spec)
            print("ok")
            return 0
        if args.command == "gen-world":
            with open(args.world_config, "r", encoding="utf-8") as fh:
                world = _build_world(json.load(fh), "world")
            corpora = dict(zip(("train", "test", "val"), generate_corpus(world)))
            save_corpus_jsonl(corpora[args.split], args.out)
            return 0
    except SpecError as exc:
        print(f"invalid spec -- {exc}", file=sys.stderr)
        return 2
    except BridgeLaunchError as exc:
        print(f"bridge launch failed -- {exc}", file=sys.stderr)
        return 3
    except RunAborted as exc:
        print(f"run aborted -- {exc} (partial logs retained)", file=sys.stderr)
        return 4
    except (ValueError, WorldGenerationError) as exc:
        print(f"invalid spec -- {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
