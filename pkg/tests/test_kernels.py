"""Bit-identity of the compiled selection kernel against the pure-Python one."""

import numpy as np
import pytest

from pmcts import engine, envs, evaluators, oracle, rng
from pmcts._kernels import available_backends, get_backend

needs_compiled = pytest.mark.skipif("compiled" not in available_backends(),
                                    reason="compiled kernel not built")


def grown_tree(model, seed, simulations=48, particles=8):
    prior = oracle.uniform_policy(model)
    evaluator = evaluators.ExactEvaluator(model, prior)
    cfg = engine.SearchConfig(simulations=simulations, particles=particles,
                              seed=seed, workers=1)
    return engine.run_search(model, evaluator, model.initial_state, cfg).tree


def kernel_io(tree, particles, buf_len, seed, eta=1.5):
    keys = rng.key_block(rng.fold_key(seed), particles)
    uniforms = rng.uniform_matrix(keys, buf_len)
    outs = dict(
        out_nodes=np.full((particles, buf_len), -1, dtype=np.int32),
        out_actions=np.full((particles, buf_len), -1, dtype=np.int32),
        out_target_p=np.zeros((particles, buf_len)),
        out_proposal_p=np.zeros((particles, buf_len)),
        out_steps=np.zeros(particles, dtype=np.int32),
        out_end_terminal=np.zeros(particles, dtype=np.uint8))
    args = (tree.children, tree.prior, tree.n_actions, tree.value, tree.mass,
            tree.reward, tree.raw_value, tree.terminal, tree.root, tree.gamma,
            tree.sign, 50.0, 0.1, eta, uniforms)
    return args, outs


def run_backend(name, args, outs, workers=1):
    fresh = {k: v.copy() for k, v in outs.items()}
    get_backend(name)(*args, **fresh, workers=workers)
    return fresh


MODELS = [envs.CliffGrid(width=6, height=4),
          envs.RandomMdp(seed=3, state_count=10, action_count=4),
          envs.TicTacToe()]


@needs_compiled
@pytest.mark.parametrize("model_idx", range(len(MODELS)))
@pytest.mark.parametrize("draw_seed", [0, 1, 2, 3, 4])
def test_backends_bit_identical(model_idx, draw_seed):
    model = MODELS[model_idx]
    tree = grown_tree(model, seed=100 + model_idx)
    args, outs = kernel_io(tree, particles=16, buf_len=60, seed=draw_seed)
    ref = run_backend("python", args, outs)
    got = run_backend("compiled", args, outs)
    for key in ref:
        np.testing.assert_array_equal(got[key], ref[key], err_msg=key)


@needs_compiled
@pytest.mark.parametrize("workers", [2, 4, 8])
def test_compiled_worker_count_does_not_change_output(workers):
    tree = grown_tree(MODELS[0], seed=100)
    args, outs = kernel_io(tree, particles=32, buf_len=60, seed=7)
    ref = run_backend("compiled", args, outs, workers=1)
    got = run_backend("compiled", args, outs, workers=workers)
    for key in ref:
        np.testing.assert_array_equal(got[key], ref[key], err_msg=key)


@needs_compiled
def test_backends_agree_with_untempered_proposal():
    tree = grown_tree(MODELS[1], seed=101)
    args, outs = kernel_io(tree, particles=16, buf_len=60, seed=11, eta=1.0)
    ref = run_backend("python", args, outs)
    got = run_backend("compiled", args, outs)
    for key in ref:
        np.testing.assert_array_equal(got[key], ref[key], err_msg=key)


def test_python_backend_records_valid_walks():
    tree = grown_tree(MODELS[0], seed=100)
    args, outs = kernel_io(tree, particles=16, buf_len=60, seed=5)
    got = run_backend("python", args, outs)
    for n in range(16):
        steps = int(got["out_steps"][n])
        assert steps >= 1
        assert got["out_nodes"][n, 0] == tree.root
        for t in range(steps):
            assert 0.0 < got["out_proposal_p"][n, t] <= 1.0
            assert 0.0 < got["out_target_p"][n, t] <= 1.0
        # interior nodes of the walk follow recorded child links
        for t in range(steps - 1):
            parent = got["out_nodes"][n, t]
            action = got["out_actions"][n, t]
            child = int(tree.children[parent, action])
            if t + 1 < steps or not got["out_end_terminal"][n]:
                if child >= 0:
                    assert got["out_nodes"][n, t + 1] == child
