"""Dinic max-flow on adjacency arrays (float capacities).

Arcs are stored in pairs (arc 2k, reverse 2k+1) so the residual partner is
``e ^ 1``. Capacities are mutated in place to the residual values.
"""

from __future__ import annotations

import numpy as np
from numba import njit

EPS = 1e-12


@njit(cache=True)
def build_adjacency(n_nodes, arc_u, arc_v, arc_cap):
    """Paired forward/backward arcs as (e_to, e_cap, e_next, head)."""
    n_arcs = arc_u.shape[0]
    e_to = np.empty(2 * n_arcs, np.int64)
    e_cap = np.empty(2 * n_arcs, np.float64)
    e_next = np.empty(2 * n_arcs, np.int64)
    head = np.full(n_nodes, -1, np.int64)
    for k in range(n_arcs):
        u = arc_u[k]
        v = arc_v[k]
        e = 2 * k
        e_to[e] = v
        e_cap[e] = arc_cap[k, 0]
        e_next[e] = head[u]
        head[u] = e
        e_to[e + 1] = u
        e_cap[e + 1] = arc_cap[k, 1]
        e_next[e + 1] = head[v]
        head[v] = e + 1
    return e_to, e_cap, e_next, head


@njit(cache=True)
def max_flow(n_nodes, s, t, e_to, e_cap, e_next, head):
    """Total s->t flow; e_cap holds residual capacities afterwards."""
    level = np.empty(n_nodes, np.int64)
    itr = np.empty(n_nodes, np.int64)
    queue = np.empty(n_nodes, np.int64)
    stack_e = np.empty(n_nodes + 1, np.int64)
    stack_v = np.empty(n_nodes + 2, np.int64)
    total = 0.0
    while True:
        for i in range(n_nodes):
            level[i] = -1
        qh = 0
        qt = 0
        queue[qt] = s
        qt += 1
        level[s] = 0
        while qh < qt:
            u = queue[qh]
            qh += 1
            e = head[u]
            while e != -1:
                v = e_to[e]
                if level[v] < 0 and e_cap[e] > EPS:
                    level[v] = level[u] + 1
                    queue[qt] = v
                    qt += 1
                e = e_next[e]
        if level[t] < 0:
            return total
        for i in range(n_nodes):
            itr[i] = head[i]
        while True:
            # one augmenting path in the level graph, current-arc DFS
            top = 0
            stack_v[0] = s
            v = s
            found = False
            while True:
                if v == t:
                    found = True
                    break
                e = itr[v]
                while e != -1:
                    w = e_to[e]
                    if e_cap[e] > EPS and level[w] == level[v] + 1:
                        break
                    e = e_next[e]
                itr[v] = e
                if e != -1:
                    stack_e[top] = e
                    top += 1
                    stack_v[top] = e_to[e]
                    v = e_to[e]
                else:
                    level[v] = -2  # dead end, prune
                    if top == 0:
                        break
                    top -= 1
                    v = stack_v[top]
                    if itr[v] != -1:
                        itr[v] = e_next[itr[v]]
            if not found:
                break
            bottleneck = 1e300
            for k in range(top):
                c = e_cap[stack_e[k]]
                if c < bottleneck:
                    bottleneck = c
            for k in range(top):
                e = stack_e[k]
                e_cap[e] -= bottleneck
                e_cap[e ^ 1] += bottleneck
            total += bottleneck


@njit(cache=True)
def residual_reachable(n_nodes, s, e_to, e_cap, e_next, head):
    """Nodes reachable from s through positive residual capacity."""
    seen = np.zeros(n_nodes, np.uint8)
    queue = np.empty(n_nodes, np.int64)
    qh = 0
    qt = 0
    queue[qt] = s
    qt += 1
    seen[s] = 1
    while qh < qt:
        u = queue[qh]
        qh += 1
        e = head[u]
        while e != -1:
            v = e_to[e]
            if seen[v] == 0 and e_cap[e] > EPS:
                seen[v] = 1
                queue[qt] = v
                qt += 1
            e = e_next[e]
    return seen
