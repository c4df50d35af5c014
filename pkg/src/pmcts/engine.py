"""The search algorithms.

Five interchangeable planners over the same tree arena: a Gumbel-style
sequential baseline, PUCT with virtual losses or virtual means, the simple
unweighted particle search, the full weighted particle search, and root
parallelization of the sequential baseline.

The particle algorithms run iterations in three barrier-separated phases:
selection (N independent root-to-leaf walks against a read-only tree),
expansion (one batched evaluation of unique leaves) and backpropagation (a
deterministic-order reduction).  Randomness comes exclusively from
counter-based streams keyed by (seed, iteration, particle), so results are
bit-identical across runs and across worker counts.
"""

from __future__ import annotations

import dataclasses
import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, rng
from .errors import ConfigError, ImportanceSupportError, ValidationError
from .evaluators import Evaluator
from .mdp import MdpModel
from .policies import (C_SCALE, C_VISIT, PUCT_C_BASE, PUCT_C_INIT,
                       PuctNodeView, improved_policy, importance_ratio,
                       puct_virtual, root_action_selection, sh_schedule)
from .tree import SearchTree, init_tree, stable_weighted_update

ALGORITHMS = ("gumbel_mcts", "puct_virtual_losses", "puct_virtual_means",
              "simple_pmcts", "pmcts", "root_parallel_gumbel")
ESTIMATORS = ("self_normalized", "unnormalized")
AGGREGATES = ("mean_policy", "mean_q", "vote")


@dataclass
class SearchConfig:
    algorithm: str = "pmcts"
    simulations: int = 32          # M, iterations of the outer loop
    particles: int = 1             # N, parallel trajectories per iteration
    eta: float = 1.5               # proposal temperature
    estimator: str = "self_normalized"
    correction: bool = True        # sequential importance weights on/off
    retrospective: bool = True
    dedup: bool = True
    ess_weighting: bool = True
    per_depth_weights: bool = False
    #: draw a fresh stochastic evaluation per particle even when several
    #: particles expanded the same leaf state (the i.i.d.-per-particle regime;
    #: off = one shared evaluation per unique leaf, the batched default).
    independent_duplicate_evals: bool = False
    sh_top_k: int | None = None
    gumbel_scale: float = 0.0
    aggregate: str = "mean_policy"  # root-parallel aggregation mode
    root_action_mode: str = "argmax_improved"
    seed: int = 0
    c_visit: float = C_VISIT
    c_scale: float = C_SCALE
    puct_c_base: float = PUCT_C_BASE
    puct_c_init: float = PUCT_C_INIT
    workers: int = 1

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.simulations < 1 or self.particles < 1:
            raise ConfigError("simulations and particles must be positive")
        if self.eta <= 0:
            raise ConfigError("eta must be positive")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.aggregate not in AGGREGATES:
            raise ConfigError(f"unknown aggregate {self.aggregate!r}")
        if self.algorithm == "gumbel_mcts" and self.particles != 1:
            raise ConfigError("gumbel_mcts is a sequential baseline; particles must be 1")
        if self.algorithm == "pmcts" and self.retrospective and not self.correction:
            raise ConfigError("retrospective reweighting requires importance correction")
        if self.workers < 1:
            raise ConfigError("workers must be positive")

    def normalized(self) -> "SearchConfig":
        """Copy with algorithm-forced flags applied.

        simple_pmcts is the weighted search with every weighting mechanism
        switched off, which makes the equivalence between the two structural
        rather than a separate code path.
        """
        self.validate()
        cfg = dataclasses.replace(self)
        if cfg.algorithm != "pmcts":
            # the weighting machinery only exists in the full weighted search
            cfg.eta = 1.0
            cfg.correction = False
            cfg.retrospective = False
            cfg.dedup = False
            cfg.ess_weighting = False
            cfg.per_depth_weights = False
            cfg.estimator = "self_normalized"
        return cfg


@dataclass
class Particle:
    """One root-to-leaf trajectory of an iteration."""

    index: int
    nodes: object               # decision nodes s_0 .. s_{T-1} (int array)
    actions: object
    target_p: object
    proposal_p: object
    ratios: object              # per-step importance factors (1 when uncorrected)
    end_terminal: bool
    leaf_node: int = -1
    bootstrap: float = 0.0
    rewards: list[float] = field(default_factory=list)
    nu: list[float] = field(default_factory=list)   # suffix return per depth
    weight: float = 1.0
    merged_weight: float = 1.0
    alive: bool = True

    @property
    def steps(self) -> int:
        return len(self.actions)

    def trajectory_key(self) -> tuple:
        return tuple(int(a) for a in self.actions)

    def suffix_weights(self) -> list[float]:
        """Telescoped ratio products restarting at each depth; entry T is 1."""
        out = [1.0] * (self.steps + 1)
        acc = 1.0
        for t in range(self.steps - 1, -1, -1):
            acc = acc * float(self.ratios[t])
            out[t] = acc
        return out


class ParticleBatch:
    """Array-backed batch of N selection trajectories.

    The selection phase only fills flat arrays; per-particle objects are
    materialized lazily on first access so the timed hot phase does no
    per-particle Python work.
    """

    def __init__(self, iteration: int, count: int, nodes, actions, target_p,
                 proposal_p, ratios, steps, end_terminal, weights, leaf_nodes):
        self.iteration = iteration
        self.count = count
        self._nodes = nodes
        self._actions = actions
        self._target_p = target_p
        self._proposal_p = proposal_p
        self._ratios = ratios
        self._steps = steps
        self._end_terminal = end_terminal
        self._weights = weights
        self._leaf_nodes = leaf_nodes
        self.unique_trajectories = -1
        self._particles: list[Particle] | None = None

    @classmethod
    def from_particles(cls, particles: list[Particle], iteration: int) -> "ParticleBatch":
        batch = cls(iteration, len(particles), None, None, None, None, None,
                    None, None, None, None)
        batch._particles = list(particles)
        return batch

    @property
    def particles(self) -> list[Particle]:
        if self._particles is None:
            out = []
            for p in range(self.count):
                s = int(self._steps[p])
                w = float(self._weights[p])
                part = Particle(
                    index=p,
                    nodes=self._nodes[p, :s],
                    actions=self._actions[p, :s],
                    target_p=self._target_p[p, :s],
                    proposal_p=self._proposal_p[p, :s],
                    ratios=self._ratios[p, :s],
                    end_terminal=bool(self._end_terminal[p]),
                    weight=w, merged_weight=w)
                if part.end_terminal:
                    part.leaf_node = int(self._leaf_nodes[p])
                out.append(part)
            self._particles = out
        return self._particles


class _Workspace:
    """Preallocated selection buffers reused across iterations."""

    def __init__(self, particles: int, buf_len: int):
        self.uniforms = np.empty((particles, buf_len))
        self.nodes = np.full((particles, buf_len), -1, dtype=np.int32)
        self.actions = np.full((particles, buf_len), -1, dtype=np.int32)
        self.target_p = np.zeros((particles, buf_len))
        self.proposal_p = np.zeros((particles, buf_len))
        self.ratios = np.ones((particles, buf_len))
        self.steps = np.zeros(particles, dtype=np.int32)
        self.end_terminal = np.zeros(particles, dtype=np.uint8)
        self.depth_mask = np.arange(buf_len)


@dataclass
class SearchResult:
    action: int
    pi_search: np.ndarray
    pi_restricted: np.ndarray
    v_search: float
    diagnostics: dict
    tree: SearchTree | None = None

    def signature(self) -> str:
        """Content digest for bit-identity assertions (timings excluded)."""
        h = hashlib.sha256()
        h.update(str(self.action).encode())
        h.update(np.ascontiguousarray(self.pi_search).tobytes())
        h.update(np.ascontiguousarray(self.pi_restricted).tobytes())
        h.update(repr(self.v_search).encode())
        if self.tree is not None:
            h.update(self.tree.dump().encode())
        return h.hexdigest()


# -- particle search phases ------------------------------------------------


def select_particles(tree: SearchTree, model: MdpModel, config: SearchConfig,
                     iteration: int, workspace: _Workspace | None = None) -> ParticleBatch:
    """Phase 1: N independent proposal-guided walks over the read-only tree.

    Per-particle randomness comes from counter-based streams keyed by
    (seed, iteration, particle index), generated as one vectorized block.
    """
    n = config.particles
    buf_len = config.simulations + 2
    ws = workspace if workspace is not None else _Workspace(n, buf_len)

    keys = rng.key_block(rng.fold_key(config.seed, 101, iteration), n)
    ws.uniforms[:] = rng.uniform_matrix(keys, buf_len)

    _kernels.select_batch(
        tree.children, tree.prior, tree.n_actions, tree.value, tree.mass,
        tree.reward, tree.raw_value, tree.terminal, tree.root, tree.gamma,
        tree.sign, config.c_visit, config.c_scale, config.eta, ws.uniforms,
        ws.nodes, ws.actions, ws.target_p, ws.proposal_p,
        ws.steps, ws.end_terminal, workers=config.workers)

    valid = ws.depth_mask[None, :] < ws.steps[:, None]
    leaf_nodes = ws.nodes[np.arange(n), ws.steps]
    if config.correction:
        if np.any(ws.proposal_p[valid] <= 0.0):
            raise ImportanceSupportError(
                "proposal assigned zero probability to a sampled action")
        np.divide(ws.target_p, ws.proposal_p, out=ws.ratios, where=valid)
        ws.ratios[~valid] = 1.0
        # cumprod keeps left-to-right order, matching scalar telescoping
        weights = np.cumprod(ws.ratios, axis=1)[:, -1]
    else:
        ws.ratios[:] = 1.0
        weights = np.ones(n)
    return ParticleBatch(iteration, n, ws.nodes, ws.actions, ws.target_p,
                         ws.proposal_p, ws.ratios, ws.steps, ws.end_terminal,
                         weights, leaf_nodes)


def expand_batch(tree: SearchTree, model: MdpModel, evaluator: Evaluator,
                 batch: ParticleBatch, config: SearchConfig) -> dict:
    """Phase 2: insert new leaves and evaluate unique leaf states.

    One batched evaluator call covers all unique non-terminal leaf states;
    with ``independent_duplicate_evals`` every particle instead draws its own
    evaluation (the node keeps the first particle's draw).  Terminal leaves
    get value 0 and no evaluator call.
    """
    pending: dict[tuple[int, int], dict] = {}
    for part in batch.particles:
        if part.end_terminal:
            part.bootstrap = 0.0
            continue
        edge = (int(part.nodes[-1]), int(part.actions[-1]))
        rec = pending.get(edge)
        if rec is None:
            nxt, reward, terminal = model.transition(int(tree.state[edge[0]]), edge[1])
            rec = {"next": nxt, "reward": reward, "terminal": terminal, "parts": []}
            pending[edge] = rec
        rec["parts"].append(part)

    eval_calls = 0
    if config.independent_duplicate_evals:
        for (parent, action), rec in pending.items():
            if rec["terminal"]:
                node = tree.add_child(parent, action, rec["next"], rec["reward"],
                                      True, None, 0.0)
                for part in rec["parts"]:
                    part.leaf_node, part.bootstrap = node, 0.0
                continue
            prior = evaluator.prior(rec["next"])
            draws = []
            for part in rec["parts"]:
                draws.append(float(evaluator.value(rec["next"])))
                eval_calls += 1
            node = tree.add_child(parent, action, rec["next"], rec["reward"],
                                  False, prior, draws[0])
            for part, v in zip(rec["parts"], draws):
                part.leaf_node, part.bootstrap = node, v
    else:
        states, seen = [], {}
        for rec in pending.values():
            if not rec["terminal"] and rec["next"] not in seen:
                seen[rec["next"]] = len(states)
                states.append(rec["next"])
        evaluated = evaluator.batch_evaluate(states) if states else []
        eval_calls = 1 if states else 0
        for (parent, action), rec in pending.items():
            if rec["terminal"]:
                node = tree.add_child(parent, action, rec["next"], rec["reward"],
                                      True, None, 0.0)
                value = 0.0
            else:
                prior, value = evaluated[seen[rec["next"]]]
                node = tree.add_child(parent, action, rec["next"], rec["reward"],
                                      False, prior, float(value))
            for part in rec["parts"]:
                part.leaf_node, part.bootstrap = node, float(value) if not rec["terminal"] else 0.0

    # suffix returns nu(s_t) from the player-to-move perspective at each node
    for part in batch.particles:
        steps = part.steps
        part.rewards = []
        for t in range(steps):
            child = part.nodes[t + 1] if t + 1 < steps else part.leaf_node
            part.rewards.append(float(tree.reward[child]))
        acc = part.bootstrap
        nus = [0.0] * steps
        for t in range(steps - 1, -1, -1):
            acc = part.rewards[t] + tree.gamma * (tree.sign * acc)
            nus[t] = acc
        part.nu = nus
    return {"eval_batch_calls": eval_calls, "new_nodes": len(pending)}


def retrospective_reweight(tree: SearchTree, batch: ParticleBatch,
                           config: SearchConfig) -> None:
    """Replace each particle's final-step factor with the post-expansion
    target probability over the same proposal probability.

    Runs after expansion and before backpropagation, so the parents' updated
    statistics (including the new edges at mass 1) define the target.
    """
    cache: dict[int, np.ndarray] = {}
    for part in batch.particles:
        parent = part.nodes[-1]
        action = part.actions[-1]
        pi = cache.get(parent)
        if pi is None:
            pi, _, _, _ = tree.step_policy(parent, 1.0, config.c_visit, config.c_scale)
            cache[parent] = pi
        part.ratios[-1] = importance_ratio(float(pi[action]), part.proposal_p[-1], 1.0)
        weight = 1.0
        for r in part.ratios:
            weight = weight * r
        part.weight = weight
        part.merged_weight = weight


def dedup_merge(batch: ParticleBatch) -> None:
    """Collapse identical trajectories onto one surviving particle whose
    weight is the exact group sum; the others drop to weight zero."""
    survivors: dict[tuple, Particle] = {}
    for part in batch.particles:
        key = part.trajectory_key()
        head = survivors.get(key)
        if head is None:
            survivors[key] = part
            part.merged_weight = part.weight
        else:
            head.merged_weight += part.weight
            part.merged_weight = 0.0
            part.alive = False
    batch.unique_trajectories = len(survivors)


def count_unique(batch: ParticleBatch) -> int:
    return len({part.trajectory_key() for part in batch.particles})


def backprop(tree: SearchTree, batch: ParticleBatch, config: SearchConfig) -> dict:
    """Phase 3: aggregate particle returns per node and fold them in.

    Contributions are reduced in ascending node-index order with scalar
    accumulation, which keeps the phase deterministic independent of how the
    per-particle values were computed.
    """
    contrib: dict[int, list[tuple[Particle, int]]] = {}
    for part in batch.particles:
        for t in range(part.steps):
            contrib.setdefault(part.nodes[t], []).append((part, t))
        if part.end_terminal:
            # revisited terminal leaf: value stays 0 but its mass keeps growing
            contrib.setdefault(part.leaf_node, []).append((part, part.steps))

    unnormalized = config.estimator == "unnormalized"
    suffix: dict[int, list[float]] = {}
    if unnormalized and config.per_depth_weights:
        for part in batch.particles:
            suffix[part.index] = part.suffix_weights()

    skipped = 0
    root_nu = float("nan")
    root_ess = float("nan")
    for node in sorted(contrib):
        entries = contrib[node]
        count = len(entries)
        wsum = 0.0
        for part, _ in entries:
            wsum = wsum + part.merged_weight
        if wsum <= 0.0:
            skipped += 1
            continue

        sq = 0.0
        nu_norm = 0.0
        nonzero = 0
        for part, t in entries:
            wbar = part.merged_weight / wsum
            nu_t = 0.0 if t == part.steps else part.nu[t]
            nu_norm = nu_norm + wbar * nu_t
            sq = sq + wbar * wbar
            if part.merged_weight > 0.0:
                nonzero += 1
        ess = 1.0 / sq

        if unnormalized:
            total = 0.0
            for part, t in entries:
                if config.per_depth_weights:
                    scale = part.merged_weight / part.weight
                    w_eff = suffix[part.index][t] * scale
                else:
                    w_eff = part.merged_weight
                nu_t = 0.0 if t == part.steps else part.nu[t]
                total = total + w_eff * nu_t
            nu_est = total / count
        else:
            nu_est = nu_norm

        if config.ess_weighting:
            mass_inc = ess
        else:
            mass_inc = float(nonzero) if config.dedup else float(count)

        tree.value[node], tree.mass[node] = stable_weighted_update(
            float(tree.value[node]), float(tree.mass[node]), nu_est, mass_inc)
        if node == tree.root:
            root_nu = nu_est
            root_ess = ess
    return {"skipped_nodes": skipped, "root_nu": root_nu, "root_ess": root_ess}


# -- drivers ---------------------------------------------------------------


def _empty_diagnostics() -> dict:
    return {"iterations": 0, "unique_trajectories": [], "root_ess": [],
            "root_nu": [], "skipped_nodes": [], "eval_batch_calls": 0,
            "select_ms": 0.0, "expand_ms": 0.0, "backprop_ms": 0.0}


def _finalize(tree: SearchTree, config: SearchConfig, diagnostics: dict) -> SearchResult:
    uniform = None
    if config.root_action_mode == "sample_restricted":
        uniform = rng.unit_interval(config.seed, 999)
    sel = root_action_selection(tree, config.root_action_mode,
                                config.c_visit, config.c_scale, uniform)
    return SearchResult(sel.action, sel.pi_search, sel.pi_restricted,
                        sel.v_search, diagnostics, tree)


def _run_particle_search(model: MdpModel, evaluator: Evaluator, root_state: int,
                         config: SearchConfig) -> SearchResult:
    capacity = config.particles * config.simulations + 1
    tree = init_tree(root_state, evaluator, capacity, model.max_action_count(),
                     model.discount, model.perspective_sign)
    diag = _empty_diagnostics()
    workspace = _Workspace(config.particles, config.simulations + 2)
    for iteration in range(config.simulations):
        t0 = time.perf_counter()
        batch = select_particles(tree, model, config, iteration, workspace)
        t1 = time.perf_counter()
        stats = expand_batch(tree, model, evaluator, batch, config)
        if config.retrospective:
            retrospective_reweight(tree, batch, config)
        if config.dedup:
            dedup_merge(batch)
        else:
            batch.unique_trajectories = count_unique(batch)
        t2 = time.perf_counter()
        bstats = backprop(tree, batch, config)
        t3 = time.perf_counter()

        diag["iterations"] += 1
        diag["unique_trajectories"].append(batch.unique_trajectories)
        diag["root_ess"].append(bstats["root_ess"])
        diag["root_nu"].append(bstats["root_nu"])
        diag["skipped_nodes"].append(bstats["skipped_nodes"])
        diag["eval_batch_calls"] += stats["eval_batch_calls"]
        diag["select_ms"] += (t1 - t0) * 1e3
        diag["expand_ms"] += (t2 - t1) * 1e3
        diag["backprop_ms"] += (t3 - t2) * 1e3
    return _finalize(tree, config, diag)


# -- Gumbel-style sequential baseline --------------------------------------


def _interior_action(tree: SearchTree, node: int, config: SearchConfig) -> int:
    """Deterministic visit-deficit rule: argmax pi(a) - M(s,a)/(1 + sum M)."""
    pi, _, _, _ = tree.step_policy(node, 1.0, config.c_visit, config.c_scale)
    masses = tree.child_mass_row(node)
    return int(np.argmax(pi - masses / (1.0 + masses.sum())))


def _simulate(tree: SearchTree, model: MdpModel, evaluator: Evaluator,
              root_action: int, config: SearchConfig) -> None:
    """One sequential simulation with a forced root action."""
    path: list[tuple[int, int]] = []
    node, action = tree.root, root_action
    while True:
        path.append((node, action))
        child = int(tree.children[node, action])
        if child < 0:
            nxt, reward, terminal = model.transition(int(tree.state[node]), action)
            if terminal:
                leaf = tree.add_child(node, action, nxt, reward, True, None, 0.0)
                bootstrap = 0.0
            else:
                prior, value = evaluator.batch_evaluate([nxt])[0]
                leaf = tree.add_child(node, action, nxt, reward, False,
                                      prior, float(value))
                bootstrap = float(value)
            new_leaf = True
            break
        if tree.terminal[child]:
            leaf, bootstrap, new_leaf = child, 0.0, False
            break
        node = child
        action = _interior_action(tree, node, config)

    if not new_leaf:
        # revisited terminal leaf keeps value 0, accrues visit mass
        tree.value[leaf], tree.mass[leaf] = stable_weighted_update(
            float(tree.value[leaf]), float(tree.mass[leaf]), 0.0, 1.0)
    acc = bootstrap
    for t in range(len(path) - 1, -1, -1):
        n, _ = path[t]
        child = path[t + 1][0] if t + 1 < len(path) else leaf
        acc = float(tree.reward[child]) + tree.gamma * (tree.sign * acc)
        tree.value[n], tree.mass[n] = stable_weighted_update(
            float(tree.value[n]), float(tree.mass[n]), acc, 1.0)


def _sh_rank(tree: SearchTree, base_scores: np.ndarray, candidates: list[int],
             config: SearchConfig) -> list[int]:
    """Candidates ordered by base score + beta * completed q, ties by index."""
    q, beta = tree.step_policy_inputs(tree.root)
    scores = np.array([base_scores[a] + beta * q[a] for a in candidates])
    order = np.lexsort((np.array(candidates), -scores))
    return [candidates[i] for i in order]


def _run_gumbel(model: MdpModel, evaluator: Evaluator, root_state: int,
                config: SearchConfig) -> SearchResult:
    capacity = config.simulations + 1
    tree = init_tree(root_state, evaluator, capacity, model.max_action_count(),
                     model.discount, model.perspective_sign)
    diag = _empty_diagnostics()
    root = tree.root
    n_root = int(tree.n_actions[root])

    base = np.log(np.asarray(tree.prior[root, :n_root], dtype=float))
    if config.gumbel_scale > 0.0:
        u = rng.stream(config.seed, 7).random(n_root)
        base = base + config.gumbel_scale * (-np.log(-np.log(u)))

    t0 = time.perf_counter()
    sims = 0
    if config.sh_top_k is not None:
        top_k = config.sh_top_k
    else:
        # largest power of two <= min(A, 16) whose halving schedule fits M
        top_k = 1
        while top_k * 2 <= min(n_root, 16):
            top_k *= 2
        while top_k >= 4 and config.simulations < top_k * (top_k.bit_length() - 1):
            top_k //= 2
        if config.simulations < 2 * top_k:
            top_k = 1
    if top_k >= 2:
        order = np.lexsort((np.arange(n_root), -base))
        surviving = [int(a) for a in order[:top_k]]
        schedule = sh_schedule(config.simulations, 1, top_k)
        for phase_idx, phase in enumerate(schedule.phases):
            if phase_idx > 0:
                surviving = _sh_rank(tree, base, surviving, config)[:phase.surviving]
            for _ in range(phase.per_action):
                for a in surviving:
                    if sims >= config.simulations:
                        break
                    _simulate(tree, model, evaluator, a, config)
                    sims += 1
        best = _sh_rank(tree, base, surviving, config)[0]
    else:
        best = int(np.argmax(base))
    while sims < config.simulations:
        _simulate(tree, model, evaluator, best, config)
        sims += 1
    t1 = time.perf_counter()

    diag["iterations"] = sims
    diag["unique_trajectories"] = [1] * sims
    diag["root_ess"] = [1.0] * sims
    diag["select_ms"] = (t1 - t0) * 1e3
    diag["eval_batch_calls"] = sims
    return _finalize(tree, config, diag)


# -- PUCT with virtual visits ----------------------------------------------


def _run_puct(model: MdpModel, evaluator: Evaluator, root_state: int,
              config: SearchConfig, mode: str) -> SearchResult:
    capacity = config.particles * config.simulations + 1
    max_actions = model.max_action_count()
    tree = init_tree(root_state, evaluator, capacity, max_actions,
                     model.discount, model.perspective_sign)
    virtual = np.zeros((capacity, max_actions))
    # backprop flags for the synchronous scheme: plain per-node means
    flat = dataclasses.replace(config, estimator="self_normalized", dedup=False,
                               ess_weighting=False, correction=False,
                               retrospective=False, per_depth_weights=False)
    diag = _empty_diagnostics()
    for iteration in range(config.simulations):
        t0 = time.perf_counter()
        particles = []
        for p in range(config.particles):
            nodes, actions = [], []
            node = tree.root
            end_terminal = False
            leaf = -1
            while True:
                n = int(tree.n_actions[node])
                view = PuctNodeView(
                    prior=np.asarray(tree.prior[node, :n], dtype=float),
                    q=tree.q_row(node),
                    visits=tree.child_mass_row(node),
                    virtual=virtual[node, :n],
                    value_estimate=float(tree.raw_value[node]))
                a = puct_virtual(view, mode, config.puct_c_base, config.puct_c_init)
                virtual[node, a] += 1.0
                nodes.append(node)
                actions.append(a)
                child = int(tree.children[node, a])
                if child < 0:
                    break
                if tree.terminal[child]:
                    end_terminal = True
                    leaf = child
                    break
                node = child
            steps = len(actions)
            part = Particle(index=p, nodes=nodes, actions=actions,
                            target_p=[1.0] * steps, proposal_p=[1.0] * steps,
                            ratios=[1.0] * steps, end_terminal=end_terminal)
            if end_terminal:
                part.leaf_node = leaf
            particles.append(part)
        batch = ParticleBatch.from_particles(particles, iteration)
        t1 = time.perf_counter()
        stats = expand_batch(tree, model, evaluator, batch, flat)
        batch.unique_trajectories = count_unique(batch)
        t2 = time.perf_counter()
        bstats = backprop(tree, batch, flat)
        virtual[:] = 0.0
        t3 = time.perf_counter()

        diag["iterations"] += 1
        diag["unique_trajectories"].append(batch.unique_trajectories)
        diag["root_ess"].append(bstats["root_ess"])
        diag["root_nu"].append(bstats["root_nu"])
        diag["skipped_nodes"].append(bstats["skipped_nodes"])
        diag["eval_batch_calls"] += stats["eval_batch_calls"]
        diag["select_ms"] += (t1 - t0) * 1e3
        diag["expand_ms"] += (t2 - t1) * 1e3
        diag["backprop_ms"] += (t3 - t2) * 1e3
    return _finalize(tree, config, diag)


# -- root parallelization --------------------------------------------------


def run_root_parallel_baseline(model: MdpModel, evaluator: Evaluator,
                               root_state: int, config: SearchConfig) -> SearchResult:
    """N independent sequential searches aggregated at the root."""
    cfg = config.normalized()
    results = []
    trees = []
    for n in range(cfg.particles):
        sub = dataclasses.replace(cfg, algorithm="gumbel_mcts", particles=1,
                                  seed=rng.fold_key(cfg.seed, 31, n))
        res = _run_gumbel(model, evaluator, root_state, sub)
        results.append(res)
        trees.append(res.tree)

    pi = np.mean([r.pi_search for r in results], axis=0)
    restricted = np.mean([r.pi_restricted for r in results], axis=0)
    restricted = restricted / restricted.sum()
    v_search = float(np.mean([r.v_search for r in results]))
    visited_any = np.zeros(len(pi), dtype=bool)
    for t in trees:
        visited_any |= t.visited_actions(t.root)

    if cfg.aggregate == "mean_policy":
        action = int(np.argmax(np.where(visited_any, restricted, -np.inf)))
    elif cfg.aggregate == "mean_q":
        q_bar = np.mean([t.completed_q(t.root) for t in trees], axis=0)
        beta_bar = float(np.mean([t.step_policy_inputs(t.root)[1] for t in trees]))
        prior = np.asarray(trees[0].prior[trees[0].root, :len(pi)], dtype=float)
        pi = improved_policy(prior, q_bar, beta_bar)
        restricted = np.where(visited_any, pi, 0.0)
        restricted = restricted / restricted.sum()
        action = int(np.argmax(restricted))
    else:  # vote
        counts = np.zeros(len(pi))
        for r in results:
            counts[r.action] += 1
        action = int(np.argmax(counts))

    diag = _empty_diagnostics()
    for r in results:
        diag["eval_batch_calls"] += r.diagnostics["eval_batch_calls"]
        diag["select_ms"] += r.diagnostics["select_ms"]
    diag["iterations"] = cfg.simulations
    diag["unique_trajectories"] = [cfg.particles] * cfg.simulations
    diag["root_ess"] = [float(cfg.particles)] * cfg.simulations
    return SearchResult(action, pi, restricted, v_search, diag, None)


def run_gumbel_baseline(model: MdpModel, evaluator: Evaluator, root_state: int,
                        config: SearchConfig) -> SearchResult:
    return _run_gumbel(model, evaluator, root_state, config.normalized())


def run_search(model: MdpModel, evaluator: Evaluator, root_state: int,
               config: SearchConfig) -> SearchResult:
    """Run M search iterations and return the root selection.

    Deterministic: identical (model, evaluator seeding, config) gives a
    bit-identical result regardless of worker count.
    """
    cfg = config.normalized()
    if model.is_terminal(root_state):
        raise ValidationError("cannot search from a terminal state")
    if cfg.algorithm in ("pmcts", "simple_pmcts"):
        return _run_particle_search(model, evaluator, root_state, cfg)
    if cfg.algorithm == "gumbel_mcts":
        return _run_gumbel(model, evaluator, root_state, cfg)
    if cfg.algorithm == "puct_virtual_losses":
        return _run_puct(model, evaluator, root_state, cfg, "losses")
    if cfg.algorithm == "puct_virtual_means":
        return _run_puct(model, evaluator, root_state, cfg, "means")
    if cfg.algorithm == "root_parallel_gumbel":
        return run_root_parallel_baseline(model, evaluator, root_state, cfg)
    raise ConfigError(f"unhandled algorithm {cfg.algorithm!r}")
