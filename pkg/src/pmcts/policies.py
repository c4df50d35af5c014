"""Selection policies and budget allocation.

The regularized improvement operator and its tempered proposal, the PUCT
rules with virtual losses/means used by the heuristic parallel baselines,
sequential-halving budget schedules for the root, and the final root
action-selection rule shared by all algorithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ImportanceSupportError, SearchFailureError, ValidationError

# Defaults for the improvement operator's q scaling and the PUCT exploration
# constant, matching the standard published values.
C_VISIT = 50.0
C_SCALE = 0.1
PUCT_C_BASE = 19652.0
PUCT_C_INIT = 1.25


def beta_schedule(max_child_mass: float, c_visit: float = C_VISIT,
                  c_scale: float = C_SCALE) -> float:
    """Inverse temperature for the q term: (c_visit + max_a M(s,a)) * c_scale."""
    return (c_visit + max_child_mass) * c_scale


def improved_policy(prior: np.ndarray, completed_q: np.ndarray, beta: float) -> np.ndarray:
    """pi(a) proportional to exp(log prior(a) + beta * q(a)), max-subtracted."""
    prior = np.asarray(prior, dtype=float)
    completed_q = np.asarray(completed_q, dtype=float)
    if not np.all(np.isfinite(completed_q)):
        raise ValidationError("completed q must be finite for all actions")
    if np.any(prior <= 0):
        raise ValidationError("prior must have full support")
    logits = np.log(prior) + beta * completed_q
    ex = np.exp(logits - logits.max())
    return ex / ex.sum()


def proposal_policy(target: np.ndarray, eta: float) -> np.ndarray:
    """Tempered distribution proportional to target^(1/eta); same support."""
    if eta <= 0:
        raise ValidationError("eta must be positive")
    target = np.asarray(target, dtype=float)
    if eta == 1.0:
        return target.copy()
    powed = np.where(target > 0, target ** (1.0 / eta), 0.0)
    return powed / powed.sum()


def importance_ratio(target_prob: float, proposal_prob: float, prev_weight: float) -> float:
    """One sequential importance-sampling step: w * target / proposal."""
    if proposal_prob <= 0:
        raise ImportanceSupportError(
            "proposal assigned zero probability to a sampled action "
            "(proposal must be absolutely continuous w.r.t. the target)")
    return prev_weight * target_prob / proposal_prob


# -- PUCT with virtual visits ---------------------------------------------


@dataclass
class PuctNodeView:
    """Statistics the virtual-visit selection rule reads at one node."""

    prior: np.ndarray          # (A,)
    q: np.ndarray              # (A,), NaN for unvisited
    visits: np.ndarray         # (A,) real visit mass per action
    virtual: np.ndarray        # (A,) in-flight virtual visits
    value_estimate: float      # v_phi(s), completes unvisited q


def puct_scores(view: PuctNodeView, mode: str,
                c_base: float = PUCT_C_BASE, c_init: float = PUCT_C_INIT) -> np.ndarray:
    """Scores whose argmax is the virtual-visit PUCT action.

    Unvisited q is completed with the node value, virtual losses (mode
    "losses") fold each virtual visit in as a -1 return, the q row is then
    min-max normalized, and unvisited entries are zeroed after normalization.
    """
    if mode not in ("losses", "means"):
        raise ValidationError(f"unknown virtual mode {mode!r}")
    visited = ~np.isnan(view.q)
    q = np.where(visited, view.q, view.value_estimate)
    if mode == "losses":
        denom = view.visits + view.virtual
        adj = np.where(denom > 0, (q * view.visits + (-1.0) * view.virtual)
                       / np.where(denom > 0, denom, 1.0), q)
        q = adj
    lo, hi = float(q.min()), float(q.max())
    if hi > lo:
        q_norm = (q - lo) / (hi - lo)
    else:
        q_norm = np.zeros_like(q)
    q_norm = np.where(visited, q_norm, 0.0)

    total = float(view.visits.sum() + view.virtual.sum())
    c = c_init + math.log((total + c_base + 1.0) / c_base)
    explore = view.prior * c * math.sqrt(total) / (1.0 + view.visits + view.virtual)
    return q_norm + explore


def puct_virtual(view: PuctNodeView, mode: str,
                 c_base: float = PUCT_C_BASE, c_init: float = PUCT_C_INIT) -> int:
    """Deterministic argmax of the PUCT scores, ties to the lowest index."""
    return int(np.argmax(puct_scores(view, mode, c_base, c_init)))


# -- Sequential halving ----------------------------------------------------


@dataclass
class ShPhase:
    surviving: int
    per_action: int


@dataclass
class ShSchedule:
    phases: list[ShPhase]
    total_budget: int

    def allocated(self) -> int:
        return sum(p.surviving * p.per_action for p in self.phases)


def sh_schedule(simulations: int, particles: int, top_k: int) -> ShSchedule:
    """Budget allocation over log2(K) halving phases.

    The total budget is simulations * particles.  Phase i keeps K / 2^(i-1)
    actions and gives each floor(total / (log2 K * K_i)) simulations; any
    unallocated remainder goes to the final phase.
    """
    if top_k < 2 or top_k & (top_k - 1) != 0:
        raise ValidationError("top_k must be a power of two >= 2")
    total = simulations * particles
    n_phases = top_k.bit_length() - 1  # log2(top_k)
    if total < top_k * n_phases:
        raise ValidationError(
            f"budget {total} infeasible for K={top_k} (needs >= {top_k * n_phases})")
    phases = []
    for i in range(n_phases):
        k_i = top_k >> i
        phases.append(ShPhase(k_i, total // (n_phases * k_i)))
    remainder = total - sum(p.surviving * p.per_action for p in phases)
    phases[-1].per_action += remainder // phases[-1].surviving
    return ShSchedule(phases, total)


# -- Root return values ----------------------------------------------------


@dataclass
class RootSelection:
    action: int
    pi_search: np.ndarray       # improvement operator at the root's final stats
    pi_restricted: np.ndarray   # pi_search restricted to visited actions
    v_search: float


def root_action_selection(tree, mode: str = "argmax_improved",
                          c_visit: float = C_VISIT, c_scale: float = C_SCALE,
                          sample_uniform: float | None = None) -> RootSelection:
    """Final returns of a search: improved root policy, its restriction to
    visited actions, the visited-only value, and the chosen action.

    The restriction keeps completed-q mass off actions the search never
    explored, so the returned value and acting policy use searched
    information only.
    """
    root = tree.root
    pi, _, q, beta = tree.step_policy(root, 1.0, c_visit, c_scale)
    visited = tree.visited_actions(root)
    if not visited.any():
        raise SearchFailureError("no visited root action")
    restricted = np.where(visited, pi, 0.0)
    restricted = restricted / restricted.sum()
    q = np.asarray(q)
    v_search = float(np.sum(restricted[visited] * q[visited]))

    if mode == "argmax_improved":
        action = int(np.argmax(restricted))
    elif mode == "max_visits":
        masses = tree.child_mass_row(root)
        action = int(np.argmax(np.where(visited, masses, -np.inf)))
    elif mode == "sample_restricted":
        if sample_uniform is None:
            raise ValidationError("sample_restricted mode needs a uniform draw")
        cdf = np.cumsum(restricted)
        action = int(np.searchsorted(cdf, sample_uniform, side="right"))
        action = min(action, len(restricted) - 1)
    else:
        raise ValidationError(f"unknown root action mode {mode!r}")
    return RootSelection(action, pi, restricted, v_search)
