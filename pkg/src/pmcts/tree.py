"""Arena-allocated search tree.

Node statistics live in flat preallocated arrays so that indices stay stable
for the whole search (the arena never reallocates) and the compiled selection
kernel can walk them without touching Python objects.  Per-action q-values
are always derived from child statistics (q = r_child + gamma * sign *
v_child), never stored.

Visit mass is a real number: the weighted search algorithms add fractional
effective-sample-size masses, while the classical baselines add integers.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .mdp import MdpModel
from . import _kernels

UNVISITED = float("nan")


class SearchTree:
    def __init__(self, capacity: int, max_actions: int, gamma: float, sign: int):
        if capacity < 1:
            raise ValidationError("tree capacity must be >= 1")
        if max_actions < 1:
            raise ValidationError("max_actions must be >= 1")
        self.capacity = capacity
        self.max_actions = max_actions
        self.gamma = float(gamma)
        self.sign = float(sign)
        self.size = 0
        self.root = 0

        self.state = np.full(capacity, -1, dtype=np.int64)
        self.parent = np.full(capacity, -1, dtype=np.int32)
        self.parent_action = np.full(capacity, -1, dtype=np.int32)
        self.children = np.full((capacity, max_actions), -1, dtype=np.int32)
        self.prior = np.zeros((capacity, max_actions))
        self.n_actions = np.zeros(capacity, dtype=np.int32)
        self.value = np.zeros(capacity)
        self.raw_value = np.zeros(capacity)   # evaluator value at creation, for v_mix
        self.mass = np.zeros(capacity)
        self.reward = np.zeros(capacity)      # reward of the transition into the node
        self.depth = np.zeros(capacity, dtype=np.int32)
        self.terminal = np.zeros(capacity, dtype=np.uint8)

    def _alloc(self) -> int:
        if self.size >= self.capacity:
            raise RuntimeError("tree arena capacity exceeded; capacity bound bug")
        idx = self.size
        self.size += 1
        return idx

    def add_root(self, state: int, prior: np.ndarray, value: float) -> int:
        idx = self._alloc()
        self.state[idx] = state
        n = len(prior)
        if n > self.max_actions:
            raise ValidationError("prior wider than max_actions")
        self.n_actions[idx] = n
        self.prior[idx, :n] = prior
        self.value[idx] = value
        self.raw_value[idx] = value
        self.mass[idx] = 1.0
        self.depth[idx] = 0
        self.root = idx
        return idx

    def add_child(self, parent: int, action: int, state: int, reward: float,
                  terminal: bool, prior: np.ndarray | None, value: float) -> int:
        """Insert the node for edge (parent, action).

        If the edge is already occupied (another particle's proposal won the
        slot first), the existing child index is returned unchanged, which is
        the deterministic contention rule: the earliest proposal in particle
        order wins, later ones re-point to it.
        """
        existing = int(self.children[parent, action])
        if existing >= 0:
            return existing
        idx = self._alloc()
        self.state[idx] = state
        self.parent[idx] = parent
        self.parent_action[idx] = action
        self.reward[idx] = reward
        self.depth[idx] = self.depth[parent] + 1
        self.terminal[idx] = 1 if terminal else 0
        if terminal:
            self.value[idx] = 0.0
            self.raw_value[idx] = 0.0
        else:
            n = len(prior)
            self.n_actions[idx] = n
            self.prior[idx, :n] = prior
            self.value[idx] = value
            self.raw_value[idx] = value
        self.mass[idx] = 1.0
        self.children[parent, action] = idx
        return idx

    # -- derived statistics ------------------------------------------------

    def q_row(self, node: int) -> np.ndarray:
        """Raw q per action; NaN marks unvisited actions."""
        n = int(self.n_actions[node])
        q = np.full(n, UNVISITED)
        for a in range(n):
            c = int(self.children[node, a])
            if c >= 0:
                q[a] = self.reward[c] + self.gamma * (self.sign * self.value[c])
        return q

    def visited_actions(self, node: int) -> np.ndarray:
        n = int(self.n_actions[node])
        return np.array([self.children[node, a] >= 0 for a in range(n)])

    def child_mass_row(self, node: int) -> np.ndarray:
        n = int(self.n_actions[node])
        out = np.zeros(n)
        for a in range(n):
            c = int(self.children[node, a])
            if c >= 0:
                out[a] = self.mass[c]
        return out

    def completed_q(self, node: int) -> np.ndarray:
        """q with unvisited actions filled by the v_mix blend of the node's
        own evaluation and the prior-weighted visited q-values."""
        q, _ = self.step_policy_inputs(node)
        return np.array(q)

    def step_policy(self, node: int, eta: float, c_visit: float, c_scale: float):
        """(target, proposal, completed q, beta) at a node, via the shared
        scalar reference kernel so Python-side policies match selection."""
        pi, proposal, q, beta = _kernels.step_policy(
            self.children, self.prior, self.n_actions, self.value, self.mass,
            self.reward, self.raw_value, node, self.gamma, self.sign,
            c_visit, c_scale, eta)
        return np.array(pi), np.array(proposal), np.array(q), beta

    def step_policy_inputs(self, node: int):
        _, _, q, beta = _kernels.step_policy(
            self.children, self.prior, self.n_actions, self.value, self.mass,
            self.reward, self.raw_value, node, self.gamma, self.sign, 0.0, 1.0, 1.0)
        return q, beta

    # -- debug surface -----------------------------------------------------

    def dump(self) -> str:
        """Line-oriented text dump for golden tests: index, parent, action,
        mass, value, reward."""
        lines = []
        for i in range(self.size):
            lines.append(
                f"{i}\t{int(self.parent[i])}\t{int(self.parent_action[i])}\t"
                f"{float(self.mass[i])!r}\t{float(self.value[i])!r}\t"
                f"{float(self.reward[i])!r}")
        return "\n".join(lines)

    def check_consistency(self) -> None:
        """Assert structural invariants; used by tests after backpropagation."""
        for i in range(1, self.size):
            p = int(self.parent[i])
            a = int(self.parent_action[i])
            if not (0 <= p < self.size) or int(self.children[p, a]) != i:
                raise AssertionError(f"node {i}: broken parent link")
            if self.depth[i] != self.depth[p] + 1:
                raise AssertionError(f"node {i}: depth mismatch")


def init_tree(root_state: int, evaluator, capacity: int, max_actions: int,
              gamma: float, sign: int) -> SearchTree:
    """Tree with the root initialized from the evaluator (mass 1)."""
    tree = SearchTree(capacity, max_actions, gamma, sign)
    prior = evaluator.prior(root_state)
    value = evaluator.value(root_state)
    tree.add_root(root_state, prior, value)
    return tree


def stable_weighted_update(old_value: float, old_mass: float,
                           new_estimate: float, new_mass: float) -> tuple[float, float]:
    """Incremental weighted mean: old_value + (new - old) * m_new / (m_old + m_new).

    Algebraically equal to (new * m_new + old * m_old) / (m_old + m_new) but
    numerically stable for large accumulated masses.
    """
    if old_mass < 0 or new_mass < 0:
        raise ValidationError("masses must be non-negative")
    total = old_mass + new_mass
    if total == 0:
        raise ValidationError("both masses zero")
    if new_mass == 0:
        return old_value, old_mass
    if old_mass == 0:
        return new_estimate, new_mass
    return old_value + (new_estimate - old_value) * new_mass / total, total
