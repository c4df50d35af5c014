"""Sources of prior policies and state values for the search.

Three regimes matching the assumptions the search guarantees are proven
under: exact (oracle values), noisy-unbiased (i.i.d. noise around the exact
value, the classical regime) and deterministic-biased (a fixed per-state
offset, the DNN-like regime where identical states always evaluate
identically).  A classical rollout evaluator is included as well.

Stochastic evaluators draw from counter-based streams keyed by
(master seed, evaluator id, call index), so concurrent callers only change
which draw goes where, never the marginal distribution.
"""

from __future__ import annotations

import itertools
import threading

import numpy as np

from .errors import ValidationError
from .mdp import MdpModel, Trajectory, discounted_return
from .oracle import TabularPolicy, policy_evaluation
from . import rng


class Evaluator:
    """Paired prior-policy and state-value source."""

    kind: str = "exact"

    def prior(self, state: int) -> np.ndarray:
        raise NotImplementedError

    def value(self, state: int) -> float:
        raise NotImplementedError

    def batch_evaluate(self, states: list[int]) -> list[tuple[np.ndarray, float]]:
        # Semantic no-op batching; subclasses may override for true batching.
        return [(self.prior(s), self.value(s)) for s in states]


class ExactEvaluator(Evaluator):
    """Prior as given; values are the exact V^prior from the oracle."""

    kind = "exact"

    def __init__(self, model: MdpModel, prior: TabularPolicy):
        self._model = model
        self._prior = prior
        self._values = policy_evaluation(model, prior).v

    def prior(self, state: int) -> np.ndarray:
        n = self._model.action_count(state)
        return np.array(self._prior.probabilities[state][:n])

    def value(self, state: int) -> float:
        return float(self._values[state])


class NoisyEvaluator(ExactEvaluator):
    """Exact value plus zero-mean noise of variance sigma^2, fresh per call.

    Noise is Gaussian clipped at 6 sigma (keeps returns bounded without
    meaningfully changing the first two moments).  Each call uses its own
    counter-based stream so evaluation order never perturbs other modules.
    """

    kind = "noisy_unbiased"

    def __init__(self, model: MdpModel, prior: TabularPolicy, sigma: float, seed: int,
                 evaluator_id: int = 0):
        if sigma < 0:
            raise ValidationError("sigma must be non-negative")
        super().__init__(model, prior)
        self.sigma = sigma
        self._seed = seed
        self._id = evaluator_id
        self._calls = itertools.count()
        self._lock = threading.Lock()

    def value(self, state: int) -> float:
        base = super().value(state)
        if self.sigma == 0:
            return base
        with self._lock:
            call = next(self._calls)
        noise = float(rng.stream(self._seed, self._id, call).standard_normal())
        noise = max(-6.0, min(6.0, noise))
        return base + self.sigma * noise


class BiasedEvaluator(ExactEvaluator):
    """Exact value plus a fixed per-state offset in [-bias_scale, bias_scale].

    Deterministic: the same state always evaluates to the same value, the way
    a trained network would.  Offsets are independent across states.
    """

    kind = "deterministic_biased"

    def __init__(self, model: MdpModel, prior: TabularPolicy, bias_scale: float, seed: int):
        if bias_scale < 0:
            raise ValidationError("bias_scale must be non-negative")
        super().__init__(model, prior)
        self.bias_scale = bias_scale
        self._seed = seed

    def offset(self, state: int) -> float:
        return self.bias_scale * (2.0 * rng.unit_interval(self._seed, 17, state) - 1.0)

    def value(self, state: int) -> float:
        return super().value(state) + self.offset(state)


def make_noisy_evaluator(model: MdpModel, prior: TabularPolicy, sigma: float,
                         seed: int) -> NoisyEvaluator:
    return NoisyEvaluator(model, prior, sigma, seed)


def make_biased_evaluator(model: MdpModel, prior: TabularPolicy, bias_scale: float,
                          seed: int) -> BiasedEvaluator:
    return BiasedEvaluator(model, prior, bias_scale, seed)


class RolloutEvaluator(Evaluator):
    """Classical leaf evaluation: mean discounted return of K rollouts."""

    kind = "rollout"

    def __init__(self, model: MdpModel, rollout_policy: TabularPolicy,
                 rollouts_per_leaf: int = 1, max_rollout_depth: int = 64, seed: int = 0):
        if rollouts_per_leaf < 1:
            raise ValidationError("rollouts_per_leaf must be >= 1")
        self._model = model
        self._policy = rollout_policy
        self.rollouts_per_leaf = rollouts_per_leaf
        self.max_rollout_depth = max_rollout_depth
        self._seed = seed
        self._calls = itertools.count()
        self._lock = threading.Lock()

    def prior(self, state: int) -> np.ndarray:
        n = self._model.action_count(state)
        return np.array(self._policy.probabilities[state][:n])

    def value(self, state: int) -> float:
        with self._lock:
            call = next(self._calls)
        return rollout_value(self._model, self, state, rng.fold_key(self._seed, call))

    def rollout_policy_row(self, state: int) -> np.ndarray:
        n = self._model.action_count(state)
        return self._policy.probabilities[state][:n]


def rollout_value(model: MdpModel, evaluator: RolloutEvaluator, state: int, seed: int) -> float:
    """Mean of K i.i.d. truncated discounted rollout returns (zero bootstrap).

    Single-agent semantics: two-player models would need sign alternation and
    are evaluated by exact oracles in this package instead.
    """
    total = 0.0
    for k in range(evaluator.rollouts_per_leaf):
        gen = rng.stream(seed, k)
        traj = Trajectory(leaf_state=state)
        s = state
        for _ in range(evaluator.max_rollout_depth):
            if model.is_terminal(s):
                break
            row = evaluator.rollout_policy_row(s)
            a = int(np.searchsorted(np.cumsum(row), gen.random(), side="right"))
            a = min(a, len(row) - 1)
            nxt, r, _ = model.transition(s, a)
            traj.append(s, a, r, nxt)
            s = nxt
        total += discounted_return(traj, 0.0, model.discount)
    return total / evaluator.rollouts_per_leaf
