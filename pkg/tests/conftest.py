import numpy as np
import pytest

from pmcts import envs, evaluators, oracle

#: one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    suffix = f"  ({detail})" if detail else ""
    ACCEPTANCE_LINES.append(f"{status}  {name}{suffix}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture
def cliff():
    return envs.CliffGrid()


@pytest.fixture
def hard_cliff():
    return envs.CliffGrid(width=6, height=3, cliff_reward=-2.0)


@pytest.fixture
def small_mdp():
    return envs.RandomMdp(seed=9, state_count=6, action_count=3)


@pytest.fixture
def tictactoe():
    return envs.TicTacToe()


@pytest.fixture
def cliff_exact(cliff):
    prior = oracle.uniform_policy(cliff)
    return evaluators.ExactEvaluator(cliff, prior)


@pytest.fixture
def mdp_exact(small_mdp):
    prior = oracle.uniform_policy(small_mdp)
    return evaluators.ExactEvaluator(small_mdp, prior)


def dominant_policy(model, weight=0.9):
    """Tabular policy putting most mass on action 0 everywhere."""
    a = model.max_action_count()
    row = np.full(a, (1.0 - weight) / (a - 1))
    row[0] = weight
    return oracle.TabularPolicy(np.tile(row, (model.state_count, 1)))
