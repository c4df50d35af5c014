"""Experiment orchestration.

Episode rollouts with per-phase wallclock accounting, head-to-head
tournaments over an opening book, Bayes-Elo fitting of the resulting win
matrix, and CSV/JSON result emission.  Everything is deterministic given the
experiment seed; only the wallclock columns vary between reruns.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .engine import SearchConfig, run_search
from .envs import make_env
from .errors import ConfigError, EstimationError, ValidationError
from .evaluators import (BiasedEvaluator, Evaluator, ExactEvaluator,
                         NoisyEvaluator, RolloutEvaluator)
from .mdp import MdpModel
from .oracle import TabularPolicy, uniform_policy

CSV_COLUMNS = ["agent", "env", "N", "M", "seed", "episode", "return",
               "wallclock_select_ms", "wallclock_expand_ms",
               "wallclock_backprop_ms", "unique_trajectory_mean",
               "ess_root_mean"]

#: columns that legitimately differ between byte-identical reruns
WALLCLOCK_COLUMNS = ["wallclock_select_ms", "wallclock_expand_ms",
                     "wallclock_backprop_ms"]


@dataclass
class Agent:
    label: str
    config: SearchConfig


@dataclass
class ExperimentSpec:
    env: dict
    agents: list[Agent]
    episodes: int = 256
    metric: str = "mean_return"
    seed: int = 0
    evaluator: dict = field(default_factory=lambda: {"kind": "exact"})
    opening_plies: int = 2
    opening_count: int = 10
    opening_window: tuple[float, float] = (-0.3, 0.3)
    output: str | None = None

    def validate(self) -> None:
        if not self.agents:
            raise ConfigError("experiment needs at least one agent")
        if self.metric not in ("mean_return", "bayes_elo", "win_rate"):
            raise ConfigError(f"unknown metric {self.metric!r}")
        if self.episodes < 1:
            raise ConfigError("episodes must be positive")
        labels = [a.label for a in self.agents]
        if len(set(labels)) != len(labels):
            raise ConfigError("agent labels must be unique")
        if self.metric == "bayes_elo" and len(self.agents) < 2:
            raise ConfigError("bayes_elo needs at least two agents")


def build_evaluator(model: MdpModel, desc: dict, seed: int,
                    prior: TabularPolicy | None = None) -> Evaluator:
    """Evaluator factory from a descriptor dict (kind + parameters)."""
    desc = dict(desc)
    kind = desc.pop("kind", "exact")
    if prior is None:
        prior = uniform_policy(model)
    if kind == "exact":
        return ExactEvaluator(model, prior)
    if kind == "noisy":
        return NoisyEvaluator(model, prior, desc.get("sigma", 0.5), seed)
    if kind == "biased":
        return BiasedEvaluator(model, prior, desc.get("bias_scale", 0.25), seed)
    if kind == "rollout":
        return RolloutEvaluator(model, prior,
                                desc.get("rollouts_per_leaf", 1),
                                desc.get("max_rollout_depth", 64), seed)
    raise ConfigError(f"unknown evaluator kind {kind!r}")


# -- episode rollouts ------------------------------------------------------


@dataclass
class EpisodeRecord:
    agent: str
    env: str
    N: int
    M: int
    seed: int
    episode: int
    ret: float
    wallclock_select_ms: float
    wallclock_expand_ms: float
    wallclock_backprop_ms: float
    unique_trajectory_mean: float
    ess_root_mean: float
    truncated: bool = False

    def row(self) -> dict:
        return {"agent": self.agent, "env": self.env, "N": self.N,
                "M": self.M, "seed": self.seed, "episode": self.episode,
                "return": repr(self.ret),
                "wallclock_select_ms": f"{self.wallclock_select_ms:.6f}",
                "wallclock_expand_ms": f"{self.wallclock_expand_ms:.6f}",
                "wallclock_backprop_ms": f"{self.wallclock_backprop_ms:.6f}",
                "unique_trajectory_mean": repr(self.unique_trajectory_mean),
                "ess_root_mean": repr(self.ess_root_mean)}


@dataclass
class ReturnStats:
    mean: float
    sem: float
    half_width: float          # 2 * SEM, the > 95% interval half-width
    episodes: int
    records: list[EpisodeRecord]


def run_episode(model: MdpModel, evaluator: Evaluator, config: SearchConfig,
                episode_seed: int, label: str = "", env_name: str = "",
                episode_index: int = 0) -> EpisodeRecord:
    """One greedy episode: search at every state, act, accumulate the
    discounted return.  Truncation at max length bootstraps with the
    evaluator's value of the final state."""
    state = model.initial_state
    rewards: list[float] = []
    select_ms = expand_ms = backprop_ms = 0.0
    unique_sum = ess_sum = 0.0
    iters = 0
    truncated = False
    move = 0
    while not model.is_terminal(state):
        if move >= model.max_episode_length:
            truncated = True
            break
        cfg = dataclasses.replace(config, seed=rng.fold_key(episode_seed, move))
        result = run_search(model, evaluator, state, cfg)
        diag = result.diagnostics
        select_ms += diag["select_ms"]
        expand_ms += diag["expand_ms"]
        backprop_ms += diag["backprop_ms"]
        unique_sum += float(np.sum(diag["unique_trajectories"]))
        finite = [e for e in diag["root_ess"] if not math.isnan(e)]
        ess_sum += float(np.sum(finite))
        iters += diag["iterations"]
        state, reward, _ = model.transition(state, result.action)
        rewards.append(reward)
        move += 1

    bootstrap = evaluator.value(state) if truncated else 0.0
    total = bootstrap
    for r in reversed(rewards):
        total = r + model.discount * total
    return EpisodeRecord(
        agent=label, env=env_name, N=config.particles, M=config.simulations,
        seed=episode_seed, episode=episode_index, ret=total,
        wallclock_select_ms=select_ms, wallclock_expand_ms=expand_ms,
        wallclock_backprop_ms=backprop_ms,
        unique_trajectory_mean=unique_sum / iters if iters else 0.0,
        ess_root_mean=ess_sum / iters if iters else 0.0,
        truncated=truncated)


def summarize_returns(records: list[EpisodeRecord]) -> ReturnStats:
    returns = np.array([r.ret for r in records])
    mean = float(returns.mean())
    sem = float(returns.std(ddof=1) / math.sqrt(len(returns))) if len(returns) > 1 else 0.0
    return ReturnStats(mean, sem, 2.0 * sem, len(records), records)


def run_episodes(spec: ExperimentSpec) -> dict[str, ReturnStats]:
    """Per-agent mean return with a 2-SEM interval over seeded episodes.

    Episode seeds depend only on (experiment seed, episode index), so two
    agents with identical configs produce identical statistics.
    """
    spec.validate()
    model = make_env(spec.env)
    if model.two_player:
        raise ValidationError("run_episodes needs a single-agent environment")
    evaluator = build_evaluator(model, spec.evaluator, spec.seed)
    env_name = spec.env.get("name", "?")
    out: dict[str, ReturnStats] = {}
    for agent in spec.agents:
        records = []
        for episode in range(spec.episodes):
            episode_seed = rng.fold_key(spec.seed, episode)
            records.append(run_episode(model, evaluator, agent.config,
                                       episode_seed, agent.label, env_name,
                                       episode))
        out[agent.label] = summarize_returns(records)
    return out


# -- tournaments -----------------------------------------------------------


@dataclass
class WinMatrix:
    """Ordered-pair game counts; index [i, j] covers games where agent i
    moved first against agent j."""

    labels: list[str]
    first_wins: np.ndarray
    first_draws: np.ndarray
    first_losses: np.ndarray

    @classmethod
    def zeros(cls, labels: list[str]) -> "WinMatrix":
        k = len(labels)
        return cls(list(labels), np.zeros((k, k), dtype=int),
                   np.zeros((k, k), dtype=int), np.zeros((k, k), dtype=int))

    def total_wins(self, i: int, j: int) -> int:
        """Games i won against j over both seatings."""
        return int(self.first_wins[i, j] + self.first_losses[j, i])

    def total_draws(self, i: int, j: int) -> int:
        return int(self.first_draws[i, j] + self.first_draws[j, i])

    def games(self, i: int, j: int) -> int:
        return (int(self.first_wins[i, j] + self.first_draws[i, j]
                    + self.first_losses[i, j])
                + int(self.first_wins[j, i] + self.first_draws[j, i]
                      + self.first_losses[j, i]))


def play_game(model: MdpModel, evaluator: Evaluator, first: SearchConfig,
              second: SearchConfig, opening: int, game_seed: int) -> int:
    """Play out one game from an opening; returns +1 if the first-seated
    agent wins, -1 if it loses, 0 on a draw (including adjudication at the
    move limit)."""
    state = opening
    configs = (first, second)
    to_move = 0
    for move in range(model.max_episode_length):
        if model.is_terminal(state):
            return 0
        cfg = dataclasses.replace(configs[to_move],
                                  seed=rng.fold_key(game_seed, move))
        result = run_search(model, evaluator, state, cfg)
        state, reward, terminal = model.transition(state, result.action)
        if terminal:
            if reward > 0:
                return 1 if to_move == 0 else -1
            if reward < 0:
                return -1 if to_move == 0 else 1
            return 0
        to_move = 1 - to_move
    return 0  # adjudicated draw at the move limit


def run_tournament(spec: ExperimentSpec, openings: list[int] | None = None) -> WinMatrix:
    """Every ordered agent pair plays every opening from both seats."""
    spec.validate()
    if len(spec.agents) < 2:
        raise ConfigError("tournament needs at least two agents")
    model = make_env(spec.env)
    if not model.two_player:
        raise ValidationError("tournament needs a two-player environment")
    evaluator = build_evaluator(model, spec.evaluator, spec.seed)
    if openings is None:
        from .oracle import value_iteration
        values = value_iteration(model).v
        openings = generate_opening_book(model, values, spec.opening_plies,
                                         spec.opening_window,
                                         spec.opening_count, spec.seed)
    if not openings:
        raise ValidationError("opening book is empty")

    matrix = WinMatrix.zeros([a.label for a in spec.agents])
    game = 0
    for i, first in enumerate(spec.agents):
        for j, second in enumerate(spec.agents):
            if i == j:
                continue
            for k, opening in enumerate(openings):
                outcome = play_game(model, evaluator, first.config,
                                    second.config, opening,
                                    rng.fold_key(spec.seed, 71, i, j, k))
                game += 1
                if outcome > 0:
                    matrix.first_wins[i, j] += 1
                elif outcome < 0:
                    matrix.first_losses[i, j] += 1
                else:
                    matrix.first_draws[i, j] += 1
    return matrix


# -- Bayes Elo -------------------------------------------------------------


@dataclass
class EloFit:
    labels: list[str]
    ratings: np.ndarray
    half_widths: np.ndarray    # 95% from the observed-information diagonal
    iterations: int


_ELO_SCALE = math.log(10.0) / 400.0


def fit_bayes_elo(matrix: WinMatrix, tol: float = 1e-10,
                  max_iters: int = 100000) -> EloFit:
    """Maximum-likelihood Elo ratings via minorization-maximization.

    Bradley-Terry with draws counted as half a win and half a loss; ratings
    anchored so the first agent is 0; 95% half-widths from the inverse
    observed information.
    """
    k = len(matrix.labels)
    games = np.zeros((k, k))
    eff_wins = np.zeros((k, k))     # wins + draws/2 of i over j
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            games[i, j] = matrix.games(i, j)
            eff_wins[i, j] = matrix.total_wins(i, j) + 0.5 * matrix.total_draws(i, j)

    # connectivity of the match graph
    comp = list(range(k))

    def find(x):
        while comp[x] != x:
            comp[x] = comp[comp[x]]
            x = comp[x]
        return x

    for i in range(k):
        for j in range(k):
            if games[i, j] > 0:
                comp[find(i)] = find(j)
    roots = {find(i) for i in range(k)}
    if len(roots) > 1:
        groups = {}
        for i in range(k):
            groups.setdefault(find(i), []).append(matrix.labels[i])
        raise EstimationError(
            f"match graph disconnected; components: {sorted(groups.values())}")

    decisive = int(matrix.first_wins.sum() + matrix.first_losses.sum())
    if games.sum() > 0 and decisive == 0:
        warnings.warn("all games drawn; ratings degenerate at 0")
        return EloFit(list(matrix.labels), np.zeros(k), np.full(k, np.inf), 0)

    wins_row = eff_wins.sum(axis=1)
    strengths = np.ones(k)
    iters = 0
    for iters in range(1, max_iters + 1):
        denom = np.zeros(k)
        for i in range(k):
            for j in range(k):
                if games[i, j] > 0:
                    denom[i] += games[i, j] / (strengths[i] + strengths[j])
        new = np.where(denom > 0, wins_row / denom, strengths)
        # zero effective wins would send a strength to 0; floor it
        new = np.maximum(new, 1e-300)
        new = new / new[0]
        if np.max(np.abs(np.log(new) - np.log(strengths))) < tol:
            strengths = new
            break
        strengths = new

    ratings = 400.0 * np.log10(strengths / strengths[0])
    info = np.zeros(k)
    for i in range(k):
        for j in range(k):
            if games[i, j] > 0:
                p = strengths[i] * strengths[j] / (strengths[i] + strengths[j]) ** 2
                info[i] += games[i, j] * _ELO_SCALE ** 2 * p
    half = np.where(info > 0, 1.96 / np.sqrt(np.where(info > 0, info, 1.0)), np.inf)
    return EloFit(list(matrix.labels), ratings, half, iters)


def elo_difference(win_rate: float) -> float:
    """Invert the logistic Elo curve at a decisive-game win rate."""
    if not 0.0 < win_rate < 1.0:
        raise ValidationError("win_rate must be strictly between 0 and 1")
    return 400.0 * math.log10(win_rate / (1.0 - win_rate))


# -- opening book ----------------------------------------------------------


def generate_opening_book(model: MdpModel, oracle_values: np.ndarray,
                          plies: int, window: tuple[float, float], count: int,
                          seed: int) -> list[int]:
    """Unique states exactly `plies` legal moves deep whose oracle value
    (player-to-move perspective, scaled to [-1, 1]) falls in the window.

    All ply-`plies` states are enumerated, filtered, then deterministically
    shuffled; a shortfall yields a partial book with a warning.
    """
    if not model.two_player:
        raise ValidationError("opening books are for two-player environments")
    lo, hi = window
    frontier = {model.initial_state}
    for _ in range(plies):
        nxt = set()
        for s in frontier:
            if model.is_terminal(s):
                continue
            for a in range(model.action_count(s)):
                child, _, terminal = model.transition(s, a)
                if not terminal:
                    nxt.add(child)
        frontier = nxt
    qualifying = sorted(s for s in frontier
                        if lo <= float(oracle_values[s]) <= hi)
    gen = rng.stream(seed, 57)
    order = gen.permutation(len(qualifying))
    book = [qualifying[int(i)] for i in order[:count]]
    if len(book) < count:
        warnings.warn(f"opening book partial: {len(book)} of {count} requested")
    return book


# -- result emission -------------------------------------------------------


def emit_results(records: list[EpisodeRecord], fmt: str, path: str) -> None:
    """Write episode records as CSV (fixed column order) or a JSON mirror."""
    rows = [r.row() for r in records]
    try:
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
                writer.writeheader()
                writer.writerows(rows)
        elif fmt == "json":
            with open(path, "w") as fh:
                json.dump(rows, fh, indent=1)
                fh.write("\n")
        else:
            raise ConfigError(f"unknown output format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def load_records(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
