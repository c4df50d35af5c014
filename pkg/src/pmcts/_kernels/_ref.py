"""Pure-Python reference implementation of the selection kernel.

This is the fallback backend when the compiled extension is unavailable, and
the semantic reference the compiled kernel must match bit-for-bit.  All inner
arithmetic is written as explicit scalar loops in a fixed order; do not
"optimize" with vectorized reductions, which change summation order and break
cross-backend bit-identity.
"""

from __future__ import annotations

import math

BACKEND = "python"


def step_policy(children, prior, n_actions, value, mass, reward, raw_value,
                node, gamma, sign, c_visit, c_scale, eta):
    """Target and proposal distributions at one tree node.

    Returns (pi, proposal, q, beta) where q is the completed per-action value
    row (visited actions from child stats, unvisited from the v_mix blend).
    """
    a_count = int(n_actions[node])
    q = [0.0] * a_count
    visited = [False] * a_count
    sum_mass = 0.0
    sum_p = 0.0
    sum_pq = 0.0
    max_m = 0.0
    any_unvisited = False
    for a in range(a_count):
        c = int(children[node, a])
        if c >= 0:
            qa = reward[c] + gamma * (sign * value[c])
            q[a] = qa
            visited[a] = True
            m = mass[c]
            sum_mass = sum_mass + m
            p = prior[node, a]
            sum_p = sum_p + p
            sum_pq = sum_pq + p * qa
            if m > max_m:
                max_m = m
        else:
            any_unvisited = True
    if any_unvisited:
        if sum_mass > 0.0:
            v_mix = (raw_value[node] + (sum_mass / sum_p) * sum_pq) / (1.0 + sum_mass)
        else:
            v_mix = raw_value[node]
        for a in range(a_count):
            if not visited[a]:
                q[a] = v_mix
    beta = (c_visit + max_m) * c_scale

    logits = [0.0] * a_count
    mx = -math.inf
    for a in range(a_count):
        la = math.log(prior[node, a]) + beta * q[a]
        logits[a] = la
        if la > mx:
            mx = la
    pi = [0.0] * a_count
    z = 0.0
    for a in range(a_count):
        e = math.exp(logits[a] - mx)
        pi[a] = e
        z = z + e
    for a in range(a_count):
        pi[a] = pi[a] / z

    if eta == 1.0:
        proposal = list(pi)
    else:
        inv = 1.0 / eta
        proposal = [0.0] * a_count
        zt = 0.0
        for a in range(a_count):
            t = pi[a] ** inv
            proposal[a] = t
            zt = zt + t
        for a in range(a_count):
            proposal[a] = proposal[a] / zt
    return pi, proposal, q, beta


def select_batch(children, prior, n_actions, value, mass, reward, raw_value, terminal,
                 root, gamma, sign, c_visit, c_scale, eta, uniforms,
                 out_nodes, out_actions, out_target_p, out_proposal_p,
                 out_steps, out_end_terminal, workers=1):
    """Sample one root-to-leaf trajectory per particle from the proposal.

    Each particle walks the (read-only) tree sampling actions by inverse CDF
    from the tempered improved policy, recording per-step target and proposal
    probabilities, until it hits an unexpanded edge or a terminal child.
    Particles are mutually independent; ``workers`` is accepted for interface
    parity with the compiled backend and ignored here.
    """
    n_particles, max_len = uniforms.shape
    for n in range(n_particles):
        node = root
        step = 0
        while True:
            if step >= max_len:
                raise RuntimeError("selection exceeded trajectory buffer; capacity bug")
            pi, proposal, _, _ = step_policy(
                children, prior, n_actions, value, mass, reward, raw_value,
                node, gamma, sign, c_visit, c_scale, eta)
            a_count = len(proposal)
            u = uniforms[n, step]
            chosen = a_count - 1
            cum = 0.0
            for a in range(a_count):
                cum = cum + proposal[a]
                if u < cum:
                    chosen = a
                    break
            out_nodes[n, step] = node
            out_actions[n, step] = chosen
            out_target_p[n, step] = pi[chosen]
            out_proposal_p[n, step] = proposal[chosen]
            step += 1
            child = int(children[node, chosen])
            if child < 0:
                out_steps[n] = step
                out_end_terminal[n] = 0
                break
            if terminal[child]:
                out_nodes[n, step] = child
                out_steps[n] = step
                out_end_terminal[n] = 1
                break
            node = child
