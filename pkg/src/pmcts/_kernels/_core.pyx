# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled selection kernel.

Mirrors ``_ref.select_batch`` operation for operation: same scalar loop
structure, same summation order, same libm calls, so outputs are bit-identical
to the pure-Python backend.  Particles run in parallel via OpenMP; each writes
only its own output rows, and the tree arrays are read-only, so the schedule
cannot affect the result.
"""

from libc.math cimport log, exp, pow, INFINITY

from cython.parallel cimport prange

import numpy as np

BACKEND = "compiled"


cdef void _walk(const int[:, ::1] children, const double[:, ::1] prior,
                const int[::1] n_actions, const double[::1] value,
                const double[::1] mass, const double[::1] reward,
                const double[::1] raw_value, const unsigned char[::1] terminal,
                int root, double gamma, double sign, double c_visit,
                double c_scale, double eta, const double[:, ::1] uniforms,
                int[:, ::1] out_nodes, int[:, ::1] out_actions,
                double[:, ::1] out_target_p, double[:, ::1] out_proposal_p,
                int[::1] out_steps, unsigned char[::1] out_end_terminal,
                double[:, ::1] scratch_q, double[:, ::1] scratch_pi,
                double[:, ::1] scratch_prop, unsigned char[:, ::1] scratch_vis,
                unsigned char[::1] err, int n, int max_len) noexcept nogil:
    cdef int node = root
    cdef int step = 0
    cdef int a_count, a, c, chosen, child
    cdef double qa, m, p, sum_mass, sum_p, sum_pq, max_m, v_mix, beta
    cdef double la, mx, e, z, inv, t, zt, u, cum
    cdef bint any_unvisited

    while True:
        if step >= max_len:
            err[n] = 1
            return
        # -- step_policy, identical arithmetic order to the reference --
        a_count = n_actions[node]
        sum_mass = 0.0
        sum_p = 0.0
        sum_pq = 0.0
        max_m = 0.0
        any_unvisited = False
        for a in range(a_count):
            c = children[node, a]
            if c >= 0:
                qa = reward[c] + gamma * (sign * value[c])
                scratch_q[n, a] = qa
                scratch_vis[n, a] = 1
                m = mass[c]
                sum_mass = sum_mass + m
                p = prior[node, a]
                sum_p = sum_p + p
                sum_pq = sum_pq + p * qa
                if m > max_m:
                    max_m = m
            else:
                scratch_vis[n, a] = 0
                any_unvisited = True
        if any_unvisited:
            if sum_mass > 0.0:
                v_mix = (raw_value[node] + (sum_mass / sum_p) * sum_pq) / (1.0 + sum_mass)
            else:
                v_mix = raw_value[node]
            for a in range(a_count):
                if scratch_vis[n, a] == 0:
                    scratch_q[n, a] = v_mix
        beta = (c_visit + max_m) * c_scale

        mx = -INFINITY
        for a in range(a_count):
            la = log(prior[node, a]) + beta * scratch_q[n, a]
            scratch_pi[n, a] = la
            if la > mx:
                mx = la
        z = 0.0
        for a in range(a_count):
            e = exp(scratch_pi[n, a] - mx)
            scratch_pi[n, a] = e
            z = z + e
        for a in range(a_count):
            scratch_pi[n, a] = scratch_pi[n, a] / z

        if eta == 1.0:
            for a in range(a_count):
                scratch_prop[n, a] = scratch_pi[n, a]
        else:
            inv = 1.0 / eta
            zt = 0.0
            for a in range(a_count):
                t = pow(scratch_pi[n, a], inv)
                scratch_prop[n, a] = t
                zt = zt + t
            for a in range(a_count):
                scratch_prop[n, a] = scratch_prop[n, a] / zt

        # -- inverse-CDF draw and descent --
        u = uniforms[n, step]
        chosen = a_count - 1
        cum = 0.0
        for a in range(a_count):
            cum = cum + scratch_prop[n, a]
            if u < cum:
                chosen = a
                break
        out_nodes[n, step] = node
        out_actions[n, step] = chosen
        out_target_p[n, step] = scratch_pi[n, chosen]
        out_proposal_p[n, step] = scratch_prop[n, chosen]
        step = step + 1
        child = children[node, chosen]
        if child < 0:
            out_steps[n] = step
            out_end_terminal[n] = 0
            return
        if terminal[child]:
            out_nodes[n, step] = child
            out_steps[n] = step
            out_end_terminal[n] = 1
            return
        node = child


def select_batch(children, prior, n_actions, value, mass, reward, raw_value,
                 terminal, root, gamma, sign, c_visit, c_scale, eta, uniforms,
                 out_nodes, out_actions, out_target_p, out_proposal_p,
                 out_steps, out_end_terminal, workers=1):
    """Sample one root-to-leaf trajectory per particle from the proposal."""
    cdef const int[:, ::1] children_v = children
    cdef const double[:, ::1] prior_v = prior
    cdef const int[::1] n_actions_v = n_actions
    cdef const double[::1] value_v = value
    cdef const double[::1] mass_v = mass
    cdef const double[::1] reward_v = reward
    cdef const double[::1] raw_value_v = raw_value
    cdef const unsigned char[::1] terminal_v = terminal
    cdef const double[:, ::1] uniforms_v = uniforms
    cdef int[:, ::1] out_nodes_v = out_nodes
    cdef int[:, ::1] out_actions_v = out_actions
    cdef double[:, ::1] out_target_v = out_target_p
    cdef double[:, ::1] out_proposal_v = out_proposal_p
    cdef int[::1] out_steps_v = out_steps
    cdef unsigned char[::1] out_end_v = out_end_terminal

    cdef int n_particles = uniforms.shape[0]
    cdef int max_len = uniforms.shape[1]
    cdef int max_a = prior.shape[1]
    cdef int root_c = root
    cdef double gamma_c = gamma, sign_c = sign
    cdef double c_visit_c = c_visit, c_scale_c = c_scale, eta_c = eta
    cdef int n_workers = workers

    scratch_q = np.empty((n_particles, max_a))
    scratch_pi = np.empty((n_particles, max_a))
    scratch_prop = np.empty((n_particles, max_a))
    scratch_vis = np.zeros((n_particles, max_a), dtype=np.uint8)
    err = np.zeros(n_particles, dtype=np.uint8)
    cdef double[:, ::1] sq = scratch_q
    cdef double[:, ::1] spi = scratch_pi
    cdef double[:, ::1] spr = scratch_prop
    cdef unsigned char[:, ::1] svis = scratch_vis
    cdef unsigned char[::1] err_v = err

    cdef int n
    with nogil:
        for n in prange(n_particles, num_threads=n_workers, schedule='static'):
            _walk(children_v, prior_v, n_actions_v, value_v, mass_v, reward_v,
                  raw_value_v, terminal_v, root_c, gamma_c, sign_c, c_visit_c,
                  c_scale_c, eta_c, uniforms_v, out_nodes_v, out_actions_v,
                  out_target_v, out_proposal_v, out_steps_v, out_end_v,
                  sq, spi, spr, svis, err_v, n, max_len)
    if err.any():
        raise RuntimeError("selection exceeded trajectory buffer; capacity bug")
