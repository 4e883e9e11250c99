"""Numba-compiled inner loops shared by the distance and persistence modules.

Everything here is deterministic: parallel loops only ever write disjoint
rows, so results are bitwise identical for any thread count.
"""

import os
import warnings

# the fallback threading layer is fine; the advisory about TBB versions is noise
warnings.filterwarnings("ignore", message=".*TBB.*", category=Warning)

import numba
import numpy as np
from numba import njit, prange

__all__ = [
    "set_threads",
    "get_threads",
    "dijkstra_all_sources",
    "dijkstra_from_sources",
    "prim_forest",
    "union_find_merges",
    "count_cliques_3",
    "fill_cliques_3",
    "reduce_columns",
    "matching_feasible",
]

_MAX_THREADS = numba.config.NUMBA_NUM_THREADS


def set_threads(n: int) -> int:
    """Set the number of worker threads (0 means all available).

    Values above the machine limit are clamped. Returns the effective count.
    """
    if n < 0:
        raise ValueError(f"thread count must be >= 0, got {n}")
    eff = _MAX_THREADS if n == 0 else min(n, _MAX_THREADS)
    numba.set_num_threads(eff)
    return eff


def get_threads() -> int:
    return numba.get_num_threads()


def threads_from_env(default: int = 0) -> int:
    raw = os.environ.get("FERMATPH_THREADS", "")
    if not raw:
        return default
    return int(raw)


@njit(cache=True, parallel=True)
def dijkstra_all_sources(w):
    """All-pairs shortest paths on a dense weight matrix.

    One Dijkstra run per source with a linear-scan frontier, which is optimal
    for complete graphs. ``w`` may contain +inf for absent edges; unreachable
    targets keep +inf. Each source writes only its own output row.
    """
    n = w.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    for s in prange(n):
        dist = out[s]
        for j in range(n):
            dist[j] = np.inf
        dist[s] = 0.0
        visited = np.zeros(n, dtype=np.bool_)
        for _ in range(n):
            best = -1
            bestd = np.inf
            for j in range(n):
                if not visited[j] and dist[j] < bestd:
                    bestd = dist[j]
                    best = j
            if best < 0:
                break
            visited[best] = True
            wb = w[best]
            for j in range(n):
                nd = bestd + wb[j]
                if nd < dist[j]:
                    dist[j] = nd
    return out


@njit(cache=True, parallel=True)
def dijkstra_from_sources(w, sources):
    """Shortest paths from selected sources on a dense weight matrix."""
    n = w.shape[0]
    m = sources.shape[0]
    out = np.empty((m, n), dtype=np.float64)
    for si in prange(m):
        s = sources[si]
        dist = out[si]
        for j in range(n):
            dist[j] = np.inf
        dist[s] = 0.0
        visited = np.zeros(n, dtype=np.bool_)
        for _ in range(n):
            best = -1
            bestd = np.inf
            for j in range(n):
                if not visited[j] and dist[j] < bestd:
                    bestd = dist[j]
                    best = j
            if best < 0:
                break
            visited[best] = True
            wb = w[best]
            for j in range(n):
                nd = bestd + wb[j]
                if nd < dist[j]:
                    dist[j] = nd
    return out


@njit(cache=True)
def prim_forest(d):
    """Minimum spanning forest of a dense symmetric distance matrix.

    Returns (weights, count, n_components): the first ``count`` entries of
    ``weights`` are the forest edge weights. Components arise when ``d``
    contains +inf blocks.
    """
    n = d.shape[0]
    weights = np.empty(max(n - 1, 1), dtype=np.float64)
    count = 0
    in_tree = np.zeros(n, dtype=np.bool_)
    key = np.full(n, np.inf, dtype=np.float64)
    n_components = 0
    remaining = n
    while remaining > 0:
        # seed a new component at the smallest untouched index
        seed = -1
        for i in range(n):
            if not in_tree[i]:
                seed = i
                break
        n_components += 1
        key[seed] = 0.0
        while True:
            best = -1
            bestd = np.inf
            for i in range(n):
                if not in_tree[i] and key[i] < bestd:
                    bestd = key[i]
                    best = i
            if best < 0:
                break
            in_tree[best] = True
            remaining -= 1
            if bestd > 0.0 or best != seed:
                weights[count] = bestd
                count += 1
            db = d[best]
            for i in range(n):
                if not in_tree[i] and db[i] < key[i]:
                    key[i] = db[i]
    # seeds contribute no edge; fix the count bookkeeping
    return weights, count, n_components


@njit(cache=True)
def union_find_merges(n, eu, ev):
    """Union-find over edges given in filtration order.

    Roots are kept at the component's smallest vertex index, so on a merge
    the component containing the smaller vertex survives. Returns a boolean
    merge mask (True where the edge joined two components) and the final
    number of components.
    """
    parent = np.arange(n, dtype=np.int64)
    merge = np.zeros(eu.shape[0], dtype=np.bool_)
    comps = n
    for e in range(eu.shape[0]):
        a = eu[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = ev[e]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            if a < b:
                parent[b] = a
            else:
                parent[a] = b
            merge[e] = True
            comps -= 1
    return merge, comps


@njit(cache=True)
def count_cliques_3(d, r, strict):
    """Number of index triples i<j<k whose pairwise distances are below r."""
    n = d.shape[0]
    total = np.int64(0)
    for i in range(n):
        di = d[i]
        for j in range(i + 1, n):
            dij = di[j]
            if (dij >= r) if strict else (dij > r):
                continue
            dj = d[j]
            for k in range(j + 1, n):
                v = dij
                if di[k] > v:
                    v = di[k]
                if dj[k] > v:
                    v = dj[k]
                if (v < r) if strict else (v <= r):
                    total += 1
    return total


@njit(cache=True)
def fill_cliques_3(d, r, strict, ti, tj, tk, tv):
    """Fill preallocated arrays with the triples counted by count_cliques_3.

    Emission order is lexicographic in (i, j, k).
    """
    n = d.shape[0]
    pos = 0
    for i in range(n):
        di = d[i]
        for j in range(i + 1, n):
            dij = di[j]
            if (dij >= r) if strict else (dij > r):
                continue
            dj = d[j]
            for k in range(j + 1, n):
                v = dij
                if di[k] > v:
                    v = di[k]
                if dj[k] > v:
                    v = dj[k]
                if (v < r) if strict else (v <= r):
                    ti[pos] = i
                    tj[pos] = j
                    tk[pos] = k
                    tv[pos] = v
                    pos += 1
    return pos


@njit(cache=True)
def reduce_columns(col_ptr, col_rows, n_rows, skip):
    """Left-to-right Z2 column reduction of a sparse boundary-type matrix.

    Columns are given in CSR-like form with row indices sorted ascending.
    ``skip[j]`` marks columns known to reduce to zero (clearing); they are
    not touched. Returns the pivot row of each column, -1 for zero columns.
    """
    m = col_ptr.shape[0] - 1
    pivot_owner = np.full(n_rows, -1, dtype=np.int64)
    pivot_of_col = np.full(m, -1, dtype=np.int64)
    cap = max(col_rows.shape[0] * 2, 1024)
    pool = np.empty(cap, dtype=np.int64)
    pool_len = 0
    col_start = np.zeros(m, dtype=np.int64)
    col_len = np.zeros(m, dtype=np.int64)
    cur = np.empty(n_rows, dtype=np.int64)
    tmp = np.empty(n_rows, dtype=np.int64)
    for j in range(m):
        if skip[j]:
            continue
        lo, hi = col_ptr[j], col_ptr[j + 1]
        clen = hi - lo
        for t in range(clen):
            cur[t] = col_rows[lo + t]
        while clen > 0:
            piv = cur[clen - 1]
            owner = pivot_owner[piv]
            if owner < 0:
                pivot_owner[piv] = j
                pivot_of_col[j] = piv
                if pool_len + clen > pool.shape[0]:
                    newcap = max(pool.shape[0] * 2, pool_len + clen)
                    newpool = np.empty(newcap, dtype=np.int64)
                    newpool[:pool_len] = pool[:pool_len]
                    pool = newpool
                col_start[j] = pool_len
                col_len[j] = clen
                for t in range(clen):
                    pool[pool_len + t] = cur[t]
                pool_len += clen
                break
            # add the owning column (symmetric difference of sorted lists)
            os_, ol = col_start[owner], col_len[owner]
            a = 0
            b = 0
            k = 0
            while a < clen and b < ol:
                ra = cur[a]
                rb = pool[os_ + b]
                if ra < rb:
                    tmp[k] = ra
                    k += 1
                    a += 1
                elif rb < ra:
                    tmp[k] = rb
                    k += 1
                    b += 1
                else:
                    a += 1
                    b += 1
            while a < clen:
                tmp[k] = cur[a]
                k += 1
                a += 1
            while b < ol:
                tmp[k] = pool[os_ + b]
                k += 1
                b += 1
            for t in range(k):
                cur[t] = tmp[t]
            clen = k
    return pivot_of_col


@njit(cache=True)
def _try_augment(root, adj_ptr, adj_idx, match_l, match_r, visited, stk_u, stk_it, stk_v):
    """Iterative DFS augmenting path from left vertex ``root``.

    stk_u / stk_it / stk_v are workspaces holding, per depth level, the left
    vertex, its next adjacency cursor, and the right vertex it descended
    through. On success the path is flipped into the matching.
    """
    depth = 0
    stk_u[0] = root
    stk_it[0] = adj_ptr[root]
    while depth >= 0:
        u = stk_u[depth]
        if stk_it[depth] >= adj_ptr[u + 1]:
            depth -= 1
            continue
        v = adj_idx[stk_it[depth]]
        stk_it[depth] += 1
        if visited[v]:
            continue
        visited[v] = True
        stk_v[depth] = v
        w = match_r[v]
        if w < 0:
            for lvl in range(depth, -1, -1):
                match_l[stk_u[lvl]] = stk_v[lvl]
                match_r[stk_v[lvl]] = stk_u[lvl]
            return True
        depth += 1
        stk_u[depth] = w
        stk_it[depth] = adj_ptr[w]
    return False


@njit(cache=True)
def matching_feasible(cost, diag1, diag2, t, match_l, match_r):
    """Test whether every bar can be matched within l-inf tolerance t.

    Bars may pair with the other diagram (cost[i, j] <= t) or retire to the
    diagonal (diag cost <= t). Feasible iff some matching over the cost
    edges covers every bar whose diagonal move is too expensive. match_l and
    match_r are workspaces of sizes m1 and m2; on success they hold a witness
    matching (indices, -1 for diagonal).
    """
    m1, m2 = cost.shape
    for i in range(m1):
        match_l[i] = -1
    for j in range(m2):
        match_r[j] = -1
    # adjacency as CSR over edges with cost <= t
    deg = np.zeros(m1, dtype=np.int64)
    for i in range(m1):
        c = 0
        for j in range(m2):
            if cost[i, j] <= t:
                c += 1
        deg[i] = c
    adj_ptr = np.zeros(m1 + 1, dtype=np.int64)
    for i in range(m1):
        adj_ptr[i + 1] = adj_ptr[i] + deg[i]
    adj_idx = np.empty(adj_ptr[m1], dtype=np.int64)
    for i in range(m1):
        pos = adj_ptr[i]
        for j in range(m2):
            if cost[i, j] <= t:
                adj_idx[pos] = j
                pos += 1
    visited = np.zeros(m2, dtype=np.bool_)
    stk_u = np.empty(m1 + 1, dtype=np.int64)
    stk_it = np.empty(m1 + 1, dtype=np.int64)
    stk_v = np.empty(m1 + 1, dtype=np.int64)
    # phase 1: cover left bars that cannot retire to the diagonal
    for i in range(m1):
        if diag1[i] > t:
            for j in range(m2):
                visited[j] = False
            if not _try_augment(i, adj_ptr, adj_idx, match_l, match_r, visited, stk_u, stk_it, stk_v):
                return False
    # phase 2: cover forced right bars by augmenting from the right side
    radj_ptr = np.zeros(m2 + 1, dtype=np.int64)
    rdeg = np.zeros(m2, dtype=np.int64)
    for i in range(m1):
        for j in range(m2):
            if cost[i, j] <= t:
                rdeg[j] += 1
    for j in range(m2):
        radj_ptr[j + 1] = radj_ptr[j] + rdeg[j]
    radj_idx = np.empty(radj_ptr[m2], dtype=np.int64)
    fill = radj_ptr[:m2].copy()
    for i in range(m1):
        for j in range(m2):
            if cost[i, j] <= t:
                radj_idx[fill[j]] = i
                fill[j] += 1
    visited_l = np.zeros(m1, dtype=np.bool_)
    stk_u2 = np.empty(m2 + 1, dtype=np.int64)
    stk_it2 = np.empty(m2 + 1, dtype=np.int64)
    stk_v2 = np.empty(m2 + 1, dtype=np.int64)
    for j in range(m2):
        if diag2[j] > t and match_r[j] < 0:
            for i in range(m1):
                visited_l[i] = False
            if not _try_augment(j, radj_ptr, radj_idx, match_r, match_l, visited_l, stk_u2, stk_it2, stk_v2):
                return False
    return True
