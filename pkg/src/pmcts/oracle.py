"""Exact dynamic-programming ground truth.

Everything here enumerates the model fully and computes values to solver
tolerance, serving as the measuring stick for the statistical properties of
the search algorithms.  All functions are pure over immutable inputs.

Two-player models are handled through the negamax sign: the Bellman backup
uses ``q(s, a) = r(s, a) + gamma * sign * v(next)`` with values always stored
from the perspective of the player to move.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, DivergenceError, ValidationError
from .mdp import MdpModel

DEFAULT_TOL = 1e-10
DEFAULT_ITER_CAP = 10 ** 6


@dataclass
class TabularPolicy:
    """Per-state action distribution over legal actions (padded with zeros)."""

    probabilities: np.ndarray  # (state_count, max_actions)

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=float)

    def row(self, state: int) -> np.ndarray:
        return self.probabilities[state]

    def validate(self, model: MdpModel, tol: float = 1e-9) -> None:
        for s in range(model.state_count):
            if model.is_terminal(s):
                continue
            n = model.action_count(s)
            row = self.probabilities[s]
            if np.any(row[:n] < 0) or np.any(row[n:] != 0):
                raise ValidationError(f"state {s}: negative mass or mass on illegal actions")
            if abs(row[:n].sum() - 1.0) > tol:
                raise ValidationError(f"state {s}: row sums to {row[:n].sum()}")


def uniform_policy(model: MdpModel) -> TabularPolicy:
    a_max = model.max_action_count()
    probs = np.zeros((model.state_count, a_max))
    for s in range(model.state_count):
        if model.is_terminal(s):
            continue
        n = model.action_count(s)
        probs[s, :n] = 1.0 / n
    return TabularPolicy(probs)


@dataclass
class ExactValues:
    v: np.ndarray            # (state_count,)
    q: np.ndarray            # (state_count, max_actions); NaN on illegal actions
    residual: float


@dataclass
class Tables:
    """Dense transition tables from full enumeration."""

    next_state: np.ndarray   # (S, A) int
    reward: np.ndarray       # (S, A)
    legal: np.ndarray        # (S, A) bool
    terminal: np.ndarray     # (S,) bool
    gamma: float
    sign: int


def enumerate_model(model: MdpModel) -> Tables:
    s_count = model.state_count
    if s_count is None or s_count <= 0:
        raise CapabilityError("model is not enumerable")
    a_max = model.max_action_count()
    next_state = np.zeros((s_count, a_max), dtype=np.int64)
    reward = np.zeros((s_count, a_max))
    legal = np.zeros((s_count, a_max), dtype=bool)
    terminal = np.zeros(s_count, dtype=bool)
    for s in range(s_count):
        if model.is_terminal(s):
            terminal[s] = True
            continue
        n = model.action_count(s)
        for a in range(n):
            nxt, r, _ = model.transition(s, a)
            next_state[s, a] = nxt
            reward[s, a] = r
            legal[s, a] = True
    return Tables(next_state, reward, legal, terminal,
                  model.discount, model.perspective_sign)


def _q_from_v(t: Tables, v: np.ndarray) -> np.ndarray:
    q = t.reward + t.gamma * t.sign * v[t.next_state]
    q[~t.legal] = np.nan
    q[t.terminal, :] = np.nan
    return q


def _sweep_to_fixed_point(t: Tables, backup, tol: float, iter_cap: int) -> tuple[np.ndarray, float]:
    v = np.zeros(len(t.terminal))
    residual = np.inf
    for _ in range(iter_cap):
        q = t.reward + t.gamma * t.sign * v[t.next_state]
        v_new = backup(q)
        v_new[t.terminal] = 0.0
        residual = float(np.max(np.abs(v_new - v))) if len(v) else 0.0
        v = v_new
        if residual <= tol:
            return v, residual
    raise DivergenceError(
        f"no fixed point within {iter_cap} sweeps (residual {residual:.3g}); "
        "check for gamma = 1 without absorbing structure")


def policy_evaluation(model: MdpModel, policy: TabularPolicy,
                      tol: float = DEFAULT_TOL, iter_cap: int = DEFAULT_ITER_CAP) -> ExactValues:
    """V^pi and Q^pi to sup-norm Bellman residual <= tol."""
    if tol <= 0:
        raise ValidationError("tol must be positive")
    t = enumerate_model(model)
    probs = policy.probabilities

    def backup(q):
        return np.sum(np.where(t.legal, probs * q, 0.0), axis=1)

    v, residual = _sweep_to_fixed_point(t, backup, tol, iter_cap)
    return ExactValues(v, _q_from_v(t, v), residual)


def value_iteration(model: MdpModel, tol: float = DEFAULT_TOL,
                    iter_cap: int = DEFAULT_ITER_CAP) -> ExactValues:
    """Optimal values: as policy_evaluation with max over legal actions."""
    if tol <= 0:
        raise ValidationError("tol must be positive")
    t = enumerate_model(model)

    def backup(q):
        return np.max(np.where(t.legal, q, -np.inf), axis=1)

    v, residual = _sweep_to_fixed_point(t, backup, tol, iter_cap)
    v[t.terminal] = 0.0
    return ExactValues(v, _q_from_v(t, v), residual)


def greedy_policy(model: MdpModel, values: ExactValues) -> TabularPolicy:
    probs = np.zeros_like(values.q)
    for s in range(model.state_count):
        if model.is_terminal(s):
            continue
        n = model.action_count(s)
        probs[s, int(np.nanargmax(values.q[s, :n]))] = 1.0
    return TabularPolicy(probs)


def improvement_operator_exact(prior: TabularPolicy, q: np.ndarray,
                               beta: np.ndarray) -> TabularPolicy:
    """Row-wise pi(a|s) proportional to exp(log prior(a|s) + beta(s) q(s, a)).

    ``q`` entries may be NaN on illegal actions; those keep zero mass.
    Softmax uses max-subtraction so large beta * q stays finite.
    """
    probs = np.asarray(prior.probabilities, dtype=float)
    beta = np.broadcast_to(np.asarray(beta, dtype=float), (probs.shape[0],))
    out = np.zeros_like(probs)
    for s in range(probs.shape[0]):
        row = probs[s]
        support = row > 0
        if not support.any():
            raise ValidationError(f"state {s}: prior row has no mass")
        qs = np.where(np.isnan(q[s]), 0.0, q[s])
        logits = np.log(row[support]) + beta[s] * qs[support]
        ex = np.exp(logits - logits.max())
        out[s, support] = ex / ex.sum()
    return TabularPolicy(out)


@dataclass
class ImprovementReport:
    value_prior: float
    value_improved: float
    difference: float
    passed: bool


def verify_policy_improvement(model: MdpModel, prior: TabularPolicy,
                              improved: TabularPolicy, tol: float = 1e-9) -> ImprovementReport:
    """Exact check of V^improved(s1) >= V^prior(s1) - tol."""
    s1 = model.initial_state
    v_prior = float(policy_evaluation(model, prior).v[s1])
    v_improved = float(policy_evaluation(model, improved).v[s1])
    diff = v_improved - v_prior
    return ImprovementReport(v_prior, v_improved, diff, diff >= -tol)


def mixture_policy_value(model: MdpModel, policies: list[TabularPolicy], at_state: int) -> float:
    """Value at a state of the whole-policy mixture: one of the policies is
    picked uniformly and followed to termination, so the value is the mean of
    the member values (linearity over whole-policy selection)."""
    if not policies:
        raise ValidationError("mixture needs at least one policy")
    values = [float(policy_evaluation(model, p).v[at_state]) for p in policies]
    return float(np.mean(values))
