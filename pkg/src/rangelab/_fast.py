"""Compiled inner loops for breadth-first search and kernel evolution."""

import numpy as np
from numba import njit


@njit(cache=True)
def bfs_csr(indptr, indices, src, limit):
    """Return ``(dist, order)``; ``order`` lists reached vertices by distance."""
    n = indptr.size - 1
    dist = np.full(n, -1, np.int32)
    order = np.empty(n, np.int64)
    dist[src] = 0
    order[0] = src
    head = 0
    tail = 1
    while head < tail:
        u = order[head]
        head += 1
        du = dist[u]
        if du >= limit:
            continue
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if dist[v] < 0:
                dist[v] = du + 1
                order[tail] = v
                tail += 1
    return dist, order[:tail]


@njit(cache=True)
def spread(indptr, indices, w, out, m):
    """``out[y] = sum(w[z] for z in N(y))`` for the first ``m`` rows."""
    for y in range(m):
        acc = 0.0
        for e in range(indptr[y], indptr[y + 1]):
            acc += w[indices[e]]
        out[y] = acc


@njit(cache=True)
def range_sum_paths(offsets, n, first):
    """Sum of ``R_n`` over all ``n``-step lattice paths whose first step is ``offsets[first]``."""
    deg = offsets.shape[0]
    size = 2 * n + 3
    grid = np.zeros((size, size), np.int32)
    pi = np.empty(n + 1, np.int64)
    pj = np.empty(n + 1, np.int64)
    distinct = np.empty(n + 1, np.int64)
    nxt = np.zeros(n + 1, np.int64)
    c = n + 1
    grid[c, c] = 1
    pi[0] = c
    pj[0] = c
    distinct[0] = 1
    if n == 0:
        return 1
    ni = c + offsets[first, 0]
    nj = c + offsets[first, 1]
    grid[ni, nj] += 1
    pi[1] = ni
    pj[1] = nj
    distinct[1] = 2
    depth = 1
    total = 0
    while True:
        if depth == n:
            total += distinct[n]
            grid[pi[n], pj[n]] -= 1
            depth -= 1
            if depth == 0:
                break
            continue
        if nxt[depth] == deg:
            nxt[depth] = 0
            if depth == 1:
                break
            grid[pi[depth], pj[depth]] -= 1
            depth -= 1
            continue
        d = nxt[depth]
        nxt[depth] += 1
        ni = pi[depth] + offsets[d, 0]
        nj = pj[depth] + offsets[d, 1]
        new = 1 if grid[ni, nj] == 0 else 0
        grid[ni, nj] += 1
        depth += 1
        pi[depth] = ni
        pj[depth] = nj
        distinct[depth] = distinct[depth - 1] + new
    return total
