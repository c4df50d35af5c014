"""Desk-scale deterministic environments.

Three testbeds covering the failure modes the search algorithms target:

* :class:`CliffGrid` -- a gridworld with catastrophic terminal cells next to
  the optimal path, so over-commitment to a single bad expansion is costly.
* :class:`RandomMdp` -- a seeded random model whose exact values the oracle
  can compute, for statistical verification.
* :class:`TicTacToe` -- a fully enumerable two-player zero-sum game for
  tournament evaluation, exposed under the negamax convention.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, ValidationError
from .mdp import MdpModel
from . import rng


class CliffGrid(MdpModel):
    """Gridworld with a row of cliff cells between start and goal.

    Cells are (x, y) with y = 0 the bottom row; state id = y * width + x.
    Start is bottom-left, goal bottom-right, and by default every bottom-row
    cell in between is a cliff (large negative terminal).  Actions are
    0=up, 1=right, 2=down, 3=left; moving off-grid stays in place.
    """

    ACTIONS = ((0, 1), (1, 0), (0, -1), (-1, 0))

    def __init__(self, width: int = 4, height: int = 3,
                 step_reward: float = -0.02, cliff_reward: float = -1.0,
                 goal_reward: float = 1.0, discount: float = 0.99,
                 max_episode_length: int = 50,
                 cliff_cells: tuple[tuple[int, int], ...] | None = None,
                 goal_cell: tuple[int, int] | None = None):
        if width < 3 or height < 2:
            raise ValidationError("CliffGrid needs width >= 3 and height >= 2")
        self.width = width
        self.height = height
        self.goal = goal_cell if goal_cell is not None else (width - 1, 0)
        if cliff_cells is None:
            cliff_cells = tuple((x, 0) for x in range(1, width - 1))
        self.cliff = set(cliff_cells)
        if self.goal in self.cliff:
            raise ValidationError("goal cell overlaps a cliff cell")
        for cell in self.cliff | {self.goal}:
            if not (0 <= cell[0] < width and 0 <= cell[1] < height):
                raise ValidationError(f"cell {cell} out of bounds")
        self.step_reward = step_reward
        self.cliff_reward = cliff_reward
        self.goal_reward = goal_reward
        self.state_count = width * height
        self.discount = discount
        self.initial_state = 0
        self.reward_bound = max(abs(step_reward), abs(cliff_reward), abs(goal_reward))
        self.max_episode_length = max_episode_length
        self.max_actions = 4

    def _cell(self, state: int) -> tuple[int, int]:
        return state % self.width, state // self.width

    def action_count(self, state: int) -> int:
        return 4

    def is_terminal(self, state: int) -> bool:
        cell = self._cell(state)
        return cell == self.goal or cell in self.cliff

    def transition(self, state: int, action: int) -> tuple[int, float, bool]:
        if self.is_terminal(state):
            return state, 0.0, True
        x, y = self._cell(state)
        dx, dy = self.ACTIONS[action]
        nx, ny = x + dx, y + dy
        if not (0 <= nx < self.width and 0 <= ny < self.height):
            nx, ny = x, y
        nxt = ny * self.width + nx
        if (nx, ny) == self.goal:
            return nxt, self.goal_reward, True
        if (nx, ny) in self.cliff:
            return nxt, self.cliff_reward, True
        return nxt, self.step_reward, False


class RandomMdp(MdpModel):
    """Seeded random deterministic model with oracle-computable exact values.

    Transition targets and rewards are derived from counter-based streams
    keyed by (seed, state, action), then cached as tables, so an identical
    seed always yields a bit-identical model.
    """

    def __init__(self, seed: int = 0, state_count: int = 6, action_count: int = 3,
                 reward_scale: float = 1.0, terminal_fraction: float = 0.0,
                 discount: float = 0.95, max_episode_length: int = 64):
        if state_count < 2 or action_count < 1:
            raise ValidationError("RandomMdp needs >= 2 states and >= 1 action")
        if not 0.0 <= terminal_fraction < 1.0:
            raise ValidationError("terminal_fraction must be in [0, 1)")
        self.seed = seed
        self.state_count = state_count
        self._actions = action_count
        self.reward_scale = reward_scale
        self.discount = discount
        self.initial_state = 0
        self.reward_bound = reward_scale
        self.max_episode_length = max_episode_length
        self.max_actions = action_count

        self._terminal = np.zeros(state_count, dtype=bool)
        for s in range(1, state_count):
            self._terminal[s] = rng.unit_interval(seed, 3, s) < terminal_fraction
        self._next = np.zeros((state_count, action_count), dtype=np.int64)
        self._reward = np.zeros((state_count, action_count))
        for s in range(state_count):
            for a in range(action_count):
                self._next[s, a] = int(rng.stream(seed, 1, s, a).integers(state_count))
                self._reward[s, a] = reward_scale * (2.0 * rng.unit_interval(seed, 2, s, a) - 1.0)

    def action_count(self, state: int) -> int:
        return self._actions

    def is_terminal(self, state: int) -> bool:
        return bool(self._terminal[state])

    def transition(self, state: int, action: int) -> tuple[int, float, bool]:
        if self._terminal[state]:
            return state, 0.0, True
        nxt = int(self._next[state, action])
        return nxt, float(self._reward[state, action]), bool(self._terminal[nxt])


_WIN_LINES = ((0, 1, 2), (3, 4, 5), (6, 7, 8),
              (0, 3, 6), (1, 4, 7), (2, 5, 8),
              (0, 4, 8), (2, 4, 6))


class TicTacToe(MdpModel):
    """Tic-tac-toe over base-3 board encodings (0 empty, 1 mover's mark ...).

    State id encodes the raw board; the player to move is derived from mark
    counts.  Action k plays in the k-th empty cell.  Rewards are from the
    perspective of the player who moved (+1 win, 0 draw), and values follow
    the negamax convention (``perspective_sign = -1``).
    """

    perspective_sign = -1

    def __init__(self):
        self.state_count = 3 ** 9
        self.discount = 1.0
        self.initial_state = 0
        self.reward_bound = 1.0
        self.max_episode_length = 9
        self.max_actions = 9

    @staticmethod
    def decode(state: int) -> list[int]:
        cells = []
        for _ in range(9):
            cells.append(state % 3)
            state //= 3
        return cells

    @staticmethod
    def encode(cells: list[int]) -> int:
        state = 0
        for c in reversed(cells):
            state = state * 3 + c
        return state

    @staticmethod
    def _winner(cells: list[int]) -> int:
        """0 if none, else the mark (1=X, 2=O) completing a line."""
        for line in _WIN_LINES:
            m = cells[line[0]]
            if m != 0 and cells[line[1]] == m and cells[line[2]] == m:
                return m
        return 0

    def _mover(self, cells: list[int]) -> int:
        x = sum(1 for c in cells if c == 1)
        o = sum(1 for c in cells if c == 2)
        return 1 if x == o else 2

    def _valid(self, cells: list[int]) -> bool:
        x = sum(1 for c in cells if c == 1)
        o = sum(1 for c in cells if c == 2)
        if not (x == o or x == o + 1):
            return False
        # both players cannot have completed lines
        wins = {self._winner_all(cells, 1), self._winner_all(cells, 2)}
        return wins != {True}

    @staticmethod
    def _winner_all(cells: list[int], mark: int) -> bool:
        return any(all(cells[i] == mark for i in line) for line in _WIN_LINES)

    def is_terminal(self, state: int) -> bool:
        cells = self.decode(state)
        if not self._valid(cells):
            return True
        if self._winner(cells) != 0:
            return True
        return all(c != 0 for c in cells)

    def legal_cells(self, state: int) -> list[int]:
        cells = self.decode(state)
        return [i for i, c in enumerate(cells) if c == 0]

    def action_count(self, state: int) -> int:
        if self.is_terminal(state):
            return 1
        return len(self.legal_cells(state))

    def transition(self, state: int, action: int) -> tuple[int, float, bool]:
        if self.is_terminal(state):
            return state, 0.0, True
        cells = self.decode(state)
        empties = [i for i, c in enumerate(cells) if c == 0]
        if not 0 <= action < len(empties):
            raise ValidationError(f"action {action} illegal in state {state}")
        mover = self._mover(cells)
        cells[empties[action]] = mover
        nxt = self.encode(cells)
        if self._winner(cells) == mover:
            return nxt, 1.0, True
        if all(c != 0 for c in cells):
            return nxt, 0.0, True
        return nxt, 0.0, False


_REGISTRY = {
    "cliff_grid": CliffGrid,
    "random_mdp": RandomMdp,
    "tictactoe": TicTacToe,
}


def make_env(spec: dict) -> MdpModel:
    """Build a registered environment from a descriptor dict.

    The descriptor carries a ``name`` key plus constructor parameters, e.g.
    ``{"name": "cliff_grid", "width": 4, "height": 3}``.
    """
    spec = dict(spec)
    name = spec.pop("name", None)
    if name not in _REGISTRY:
        raise ConfigError(f"unknown environment {name!r}; known: {sorted(_REGISTRY)}")
    try:
        return _REGISTRY[name](**spec)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {name}: {exc}") from exc
