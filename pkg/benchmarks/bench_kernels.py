"""Compare the compiled and pure-Python selection kernels.

Times the selection phase of a mid-sized search for both backends at several
particle counts and worker counts, and verifies on the way that their outputs
are bit-identical.

Run:  python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import statistics
import time

import numpy as np

from pmcts import engine, envs, evaluators, oracle
from pmcts._kernels import available_backends, get_backend


def build_tree(simulations: int = 64, particles: int = 16):
    model = envs.CliffGrid(width=8, height=5)
    prior = oracle.uniform_policy(model)
    evaluator = evaluators.ExactEvaluator(model, prior)
    cfg = engine.SearchConfig(simulations=simulations, particles=particles,
                              seed=17, workers=1)
    result = engine.run_search(model, evaluator, model.initial_state, cfg)
    return result.tree


def kernel_args(tree, particles: int, buf_len: int, seed: int = 99):
    from pmcts import rng
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
            tree.sign, 50.0, 0.1, 1.5, uniforms)
    return args, outs


def bench(fn, args, outs, workers: int, repeats: int = 200) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args, **outs, workers=workers)
        times.append(time.perf_counter() - t0)
    return statistics.median(times) * 1e6


def main() -> None:
    backends = available_backends()
    print(f"available backends: {backends}")
    tree = build_tree()
    buf_len = 66

    for particles in (1, 4, 16, 64):
        reference = None
        line = [f"N={particles:3d}"]
        for name in backends:
            fn = get_backend(name)
            args, outs = kernel_args(tree, particles, buf_len)
            fn(*args, **outs, workers=1)
            snapshot = {k: v.copy() for k, v in outs.items()}
            if reference is None:
                reference = snapshot
            else:
                for k in snapshot:
                    assert np.array_equal(snapshot[k], reference[k]), \
                        f"backend {name} diverges on {k}"
            for workers in (1, 8) if name == "compiled" else (1,):
                us = bench(fn, args, outs, workers)
                line.append(f"{name}/w{workers}: {us:8.1f}us")
        print("  ".join(line))
    print("outputs bit-identical across backends")


if __name__ == "__main__":
    main()
