"""Decision-process abstraction, trajectories and discounted returns.

States and actions are dense integer identifiers.  Models are deterministic:
``transition`` is a pure function, so every module may query it lazily and
concurrently.  Two-player zero-sum games are folded into the same abstraction
with a negamax sign convention (see :attr:`MdpModel.perspective_sign`).
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Step:
    state: int
    action: int
    reward: float


class MdpModel:
    """Deterministic finite decision process.

    Subclasses implement ``action_count``, ``transition`` and ``is_terminal``.
    ``transition(s, a)`` must be pure: identical inputs always yield identical
    ``(next_state, reward, terminal)`` outputs.
    """

    state_count: int
    discount: float
    initial_state: int
    reward_bound: float
    max_episode_length: int
    #: -1 for two-player zero-sum games under the negamax convention
    #: (values are stored from the perspective of the player to move), else +1.
    perspective_sign: int = 1

    def action_count(self, state: int) -> int:
        raise NotImplementedError

    def transition(self, state: int, action: int) -> tuple[int, float, bool]:
        raise NotImplementedError

    def is_terminal(self, state: int) -> bool:
        raise NotImplementedError

    @property
    def two_player(self) -> bool:
        return self.perspective_sign == -1

    def max_action_count(self) -> int:
        cached = getattr(self, "max_actions", None)
        if cached is not None:
            return cached
        return max(self.action_count(s) for s in range(self.state_count)
                   if not self.is_terminal(s))


@dataclass
class Trajectory:
    """A root-to-leaf path: ordered (state, action, reward) steps plus the
    state the final transition lands in."""

    steps: list[Step] = field(default_factory=list)
    leaf_state: int = -1

    @property
    def depth(self) -> int:
        return len(self.steps)

    def append(self, state: int, action: int, reward: float, next_state: int) -> None:
        self.steps.append(Step(state, action, reward))
        self.leaf_state = next_state

    def validate(self, model: MdpModel) -> None:
        """Assert step-chaining consistency against the model."""
        for k, step in enumerate(self.steps):
            nxt, reward, _ = model.transition(step.state, step.action)
            if reward != step.reward:
                raise ValueError(f"step {k}: reward {step.reward} != model reward {reward}")
            expected = self.steps[k + 1].state if k + 1 < len(self.steps) else self.leaf_state
            if nxt != expected:
                raise ValueError(f"step {k}: next state {expected} != model next state {nxt}")


def discounted_return(traj: Trajectory, bootstrap: float, discount: float) -> float:
    """sum_k discount^k * reward_k + discount^depth * bootstrap."""
    total = bootstrap
    for step in reversed(traj.steps):
        total = step.reward + discount * total
    return total


def suffix_return(traj: Trajectory, from_depth: int, bootstrap: float, discount: float) -> float:
    """Discounted return of the trajectory suffix starting at ``from_depth``."""
    if not 0 <= from_depth <= traj.depth:
        raise IndexError(f"from_depth {from_depth} outside [0, {traj.depth}]")
    total = bootstrap
    for step in reversed(traj.steps[from_depth:]):
        total = step.reward + discount * total
    return total
