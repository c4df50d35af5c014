"""Command-line entry point.

Subcommands: search, evaluate, tournament, ablate, sweep, book.  Experiments
are described by a JSON config file; any key can be overridden on the command
line with repeated ``--set dotted.key=value`` flags.  Exit codes: 0 success,
1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from . import rng
from .engine import SearchConfig, run_search
from .envs import make_env
from .errors import ConfigError, ValidationError
from .harness import (Agent, CSV_COLUMNS, ExperimentSpec, build_evaluator,
                      emit_results, fit_bayes_elo, generate_opening_book,
                      run_episode, run_episodes, run_tournament)
from .oracle import value_iteration

log = logging.getLogger("pmcts")

CONFIG_DIR_VAR = "PMCTS_CONFIG_DIR"

#: the feature ladder from the plain unweighted search to the full algorithm
ABLATION_RUNGS = [
    ("S", {"algorithm": "simple_pmcts"}),
    ("+D", {"algorithm": "pmcts", "eta": 1.0, "correction": False,
            "retrospective": False, "dedup": True, "ess_weighting": False}),
    ("+E", {"algorithm": "pmcts", "eta": 1.0, "correction": False,
            "retrospective": False, "dedup": True, "ess_weighting": True}),
    ("+T", {"algorithm": "pmcts", "eta": 1.5, "correction": False,
            "retrospective": False, "dedup": True, "ess_weighting": True}),
    ("+C", {"algorithm": "pmcts", "eta": 1.5, "correction": True,
            "retrospective": False, "dedup": True, "ess_weighting": True}),
    ("PMCTS", {"algorithm": "pmcts", "eta": 1.5, "correction": True,
               "retrospective": True, "dedup": True, "ess_weighting": True}),
]

_SEARCH_FIELDS = {f.name for f in dataclasses.fields(SearchConfig)}


def search_config(params: dict) -> SearchConfig:
    unknown = set(params) - _SEARCH_FIELDS
    if unknown:
        raise ConfigError(f"unknown search config keys: {sorted(unknown)}")
    cfg = SearchConfig(**params)
    cfg.validate()
    return cfg


def load_config(path: str) -> dict:
    if not os.path.exists(path):
        default_dir = os.environ.get(CONFIG_DIR_VAR)
        if default_dir and not os.path.isabs(path):
            candidate = os.path.join(default_dir, path)
            if os.path.exists(candidate):
                path = candidate
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def apply_overrides(config: dict, overrides: list[str]) -> dict:
    """Apply dotted-key=value pairs; values parse as JSON, else strings.

    The path up to the final key must already exist in the config, which
    catches typos before anything runs.
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        dotted, raw = item.split("=", 1)
        keys = dotted.split(".")
        node = config
        for key in keys[:-1]:
            if not isinstance(node, dict) or key not in node:
                raise ConfigError(f"override path {dotted!r}: {key!r} not in config")
            node = node[key]
        if not isinstance(node, dict):
            raise ConfigError(f"override path {dotted!r} does not address a mapping")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node[keys[-1]] = value
    return config


def experiment_spec(config: dict) -> ExperimentSpec:
    exp = dict(config.get("experiment", {}))
    agents = []
    for entry in exp.pop("agents", []):
        agents.append(Agent(entry["label"], search_config(entry.get("search", {}))))
    if not agents and "search" in config:
        agents = [Agent("agent0", search_config(config["search"]))]
    window = exp.pop("opening_window", (-0.3, 0.3))
    spec = ExperimentSpec(env=config.get("env", {"name": "cliff_grid"}),
                          agents=agents, opening_window=tuple(window), **exp)
    spec.validate()
    return spec


# -- subcommands -----------------------------------------------------------


def cmd_search(config: dict, args) -> int:
    model = make_env(config.get("env", {"name": "cliff_grid"}))
    cfg = search_config(config.get("search", {}))
    if args.workers:
        cfg = dataclasses.replace(cfg, workers=args.workers)
    evaluator = build_evaluator(model, config.get("evaluator", {"kind": "exact"}),
                                cfg.seed)
    result = run_search(model, evaluator, model.initial_state, cfg)
    print(f"algorithm:      {cfg.algorithm} (M={cfg.simulations}, N={cfg.particles})")
    print(f"chosen action:  {result.action}")
    print(f"search value:   {result.v_search!r}")
    print(f"search policy:  {np.array2string(result.pi_search, precision=6)}")
    print(f"restricted:     {np.array2string(result.pi_restricted, precision=6)}")
    d = result.diagnostics
    print(f"iterations:     {d['iterations']}")
    print(f"unique trajectories per iteration: "
          f"{float(np.mean(d['unique_trajectories'])):.3f}")
    ess = [e for e in d["root_ess"] if not np.isnan(e)]
    if ess:
        print(f"root ESS mean:  {float(np.mean(ess)):.3f}")
    if args.dump_tree and result.tree is not None:
        print(result.tree.dump())
    return 0


def cmd_evaluate(config: dict, args) -> int:
    spec = experiment_spec(config)
    stats = run_episodes(spec)
    records = []
    for label, st in stats.items():
        print(f"{label}: mean return {st.mean:.4f} +- {st.half_width:.4f} "
              f"(2 SEM, {st.episodes} episodes)")
        records.extend(st.records)
    out = args.output or spec.output
    if out:
        emit_results(records, "json" if out.endswith(".json") else "csv", out)
        print(f"wrote {len(records)} records to {out}")
    return 0


def cmd_tournament(config: dict, args) -> int:
    spec = experiment_spec(config)
    matrix = run_tournament(spec)
    print("agents:", ", ".join(matrix.labels))
    for i, label in enumerate(matrix.labels):
        row = []
        for j in range(len(matrix.labels)):
            if i == j:
                row.append("-")
            else:
                row.append(f"{matrix.total_wins(i, j)}w/"
                           f"{matrix.total_draws(i, j)}d")
        print(f"  {label}: {' '.join(row)}")
    fit = fit_bayes_elo(matrix)
    for label, rating, hw in zip(fit.labels, fit.ratings, fit.half_widths):
        print(f"  elo {label}: {rating:+.1f} (+-{hw:.1f})")
    out = args.output or spec.output
    if out:
        payload = {"labels": matrix.labels,
                   "first_wins": matrix.first_wins.tolist(),
                   "first_draws": matrix.first_draws.tolist(),
                   "first_losses": matrix.first_losses.tolist(),
                   "elo": fit.ratings.tolist(),
                   "elo_half_widths": fit.half_widths.tolist()}
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=1)
        print(f"wrote tournament results to {out}")
    return 0


def _grid_records(config: dict, variants: list[tuple[str, dict]], seeds: int,
                  base: dict, workers: int | None):
    model = make_env(config.get("env", {"name": "cliff_grid"}))
    env_name = config.get("env", {}).get("name", "?")
    evaluator = build_evaluator(model, config.get("evaluator", {"kind": "exact"}),
                                int(base.get("seed", 0)))
    records = []
    for label, params in variants:
        merged = dict(base)
        merged.pop("seeds", None)
        merged.pop("seed", None)
        merged.update(params)
        cfg = search_config(merged)
        if workers:
            cfg = dataclasses.replace(cfg, workers=workers)
        for s in range(seeds):
            episode_seed = rng.fold_key(int(base.get("seed", 0)), s)
            rec = run_episode(model, evaluator, cfg, episode_seed, label,
                              env_name, s)
            records.append(rec)
        mean = float(np.mean([r.ret for r in records[-seeds:]]))
        log.info("%s: mean return %.4f over %d seeds", label, mean, seeds)
    return records


def cmd_ablate(config: dict, args) -> int:
    section = dict(config.get("ablate", {}))
    seeds = int(section.pop("seeds", 100))
    records = _grid_records(config, ABLATION_RUNGS, seeds, section, args.workers)
    out = args.output or "ablation.csv"
    emit_results(records, "csv", out)
    print(f"wrote {len(records)} rows to {out}")
    return 0


def cmd_sweep(config: dict, args) -> int:
    section = dict(config.get("sweep", {}))
    seeds = int(section.pop("seeds", 20))
    grid_n = section.pop("particles", [1, 4, 16])
    grid_m = section.pop("simulations", [32])
    grid_eta = section.pop("eta", [1.5])
    variants = []
    for m in grid_m:
        for n in grid_n:
            for eta in grid_eta:
                label = f"N{n}_M{m}_eta{eta}"
                variants.append((label, {"particles": n, "simulations": m,
                                         "eta": eta}))
    records = _grid_records(config, variants, seeds, section, args.workers)
    out = args.output or "sweep.csv"
    emit_results(records, "csv", out)
    print(f"wrote {len(records)} rows to {out}")
    return 0


def cmd_book(config: dict, args) -> int:
    model = make_env(config.get("env", {"name": "tictactoe"}))
    section = config.get("book", {})
    values = value_iteration(model).v
    book = generate_opening_book(
        model, values,
        int(section.get("plies", 2)),
        tuple(section.get("window", (-0.3, 0.3))),
        int(section.get("count", 10)),
        int(section.get("seed", 0)))
    print(f"opening book ({len(book)} states):")
    for state in book:
        print(f"  {state}  value {float(values[state]):+.3f}")
    out = args.output
    if out:
        with open(out, "w") as fh:
            json.dump(book, fh)
        print(f"wrote book to {out}")
    return 0


# -- driver ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    fields = ", ".join(f"{f.name}={f.default!r}" for f in
                       dataclasses.fields(SearchConfig))
    parser = argparse.ArgumentParser(
        prog="pmcts",
        description="Parallel particle-based Monte Carlo Tree Search.",
        epilog=f"search config keys (with defaults): {fields}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
            ("search", "run one search and print the root result"),
            ("evaluate", "episode returns per agent with confidence intervals"),
            ("tournament", "two-player round robin plus Bayes-Elo ratings"),
            ("ablate", "the six-rung feature ladder as a CSV"),
            ("sweep", "grid over particle count, budget and temperature"),
            ("book", "generate a balanced opening book")]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("-c", "--config", default=None,
                       help=f"JSON config path (also searched in ${CONFIG_DIR_VAR})")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (dotted path, JSON value)")
        p.add_argument("-o", "--output", default=None, help="output file path")
        p.add_argument("--workers", type=int, default=None,
                       help="logical worker cap (results identical for any value)")
        if name == "search":
            p.add_argument("--dump-tree", action="store_true")
    return parser


_COMMANDS = {"search": cmd_search, "evaluate": cmd_evaluate,
             "tournament": cmd_tournament, "ablate": cmd_ablate,
             "sweep": cmd_sweep, "book": cmd_book}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else
        logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config) if args.config else {}
        apply_overrides(config, args.set)
        return _COMMANDS[args.command](config, args)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        if args.verbose:
            raise
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
