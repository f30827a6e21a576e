"""Numba kernels for the Vietoris-Rips filtration and Z/2 matrix reduction.

Hot path of the persistence engine: edge/triangle enumeration, union-find
over sorted edges, and the standard column reduction of the triangle
boundary matrix with sorted-index columns.

The filtration is truncated at the enclosing radius (the smallest r such
that some vertex is within r of every other): past that scale the complex
is a cone, so every H1 class is already dead and no H0 merge remains. The
truncation changes no emitted pair; it only skips provably inert simplices.
"""

import numpy as np
from numba import njit, int32, int64


@njit(cache=True)
def union_find_merges(edge_i, edge_j, n):
    """Mark the component-merging edges among length-sorted edges."""
    parent = np.arange(n, dtype=int64)
    merge_mask = np.zeros(edge_i.shape[0], dtype=np.bool_)
    for e in range(edge_i.shape[0]):
        a = edge_i[e]
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        b = edge_j[e]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a != b:
            parent[b] = a
            merge_mask[e] = True
    return merge_mask


@njit(cache=True)
def enumerate_triangles_ranked(dist, edge_rank, r_cap):
    """Triangles with filtration value (longest edge) <= r_cap.

    Returns per-triangle sorted edge-rank triples, the filtration value,
    the vertex triple, and a lexicographic tie key.
    """
    n = dist.shape[0]
    cap = n * (n - 1) * (n - 2) // 6
    rows = np.empty((cap, 3), dtype=int32)
    val = np.empty(cap, dtype=np.float64)
    verts = np.empty((cap, 3), dtype=int32)
    lex = np.empty(cap, dtype=int64)
    m = 0
    for i in range(n):
        for j in range(i + 1, n):
            dij = dist[i, j]
            if dij > r_cap:
                continue
            for k in range(j + 1, n):
                dik = dist[i, k]
                djk = dist[j, k]
                v = dij
                if dik > v:
                    v = dik
                if djk > v:
                    v = djk
                if v > r_cap:
                    continue
                r0 = edge_rank[i * n + j]
                r1 = edge_rank[i * n + k]
                r2 = edge_rank[j * n + k]
                # insertion sort of the three ranks
                if r0 > r1:
                    r0, r1 = r1, r0
                if r1 > r2:
                    r1, r2 = r2, r1
                if r0 > r1:
                    r0, r1 = r1, r0
                rows[m, 0] = r0
                rows[m, 1] = r1
                rows[m, 2] = r2
                val[m] = v
                verts[m, 0] = i
                verts[m, 1] = j
                verts[m, 2] = k
                lex[m] = (i * n + j) * n + k
                m += 1
    return rows[:m], val[:m], verts[:m], lex[:m]


@njit(cache=True)
def reduce_edge_cocolumns(tri_rows, n_edges, n_positive):
    """Persistence pairing via reduction of the anti-transposed boundary matrix.

    tri_rows holds the sorted edge ranks of each triangle, triangles in
    filtration order. Columns are edges processed in decreasing rank, each
    initialized to the triangles containing it; the pivot is the earliest
    triangle. This is the standard duality trick: the matrix is the
    anti-transpose of the triangle boundary matrix, so the recorded
    (edge, triangle) pairs are exactly the homology persistence pairs for
    the same simplex order, but the columns that reduce to zero are the
    few component-merging edges instead of the many positive triangles.

    Stops once n_positive pairs are found. Returns (paired_edge, paired_tri).
    """
    t_count = tri_rows.shape[0]

    # CSR of triangles per edge, triangle indices ascending per edge.
    counts = np.zeros(n_edges + 1, dtype=int64)
    for t in range(t_count):
        counts[tri_rows[t, 0] + 1] += 1
        counts[tri_rows[t, 1] + 1] += 1
        counts[tri_rows[t, 2] + 1] += 1
    for e in range(n_edges):
        counts[e + 1] += counts[e]
    fill = counts[:-1].copy()
    tri_of_edge = np.empty(3 * t_count, dtype=int32)
    for t in range(t_count):
        for s in range(3):
            e = tri_rows[t, s]
            tri_of_edge[fill[e]] = t
            fill[e] += 1

    pivot_owner_start = np.full(t_count, -1, dtype=int64)
    pivot_owner_size = np.zeros(t_count, dtype=int64)
    pool = np.empty(max(3 * t_count, 64), dtype=int32)
    pool_len = 0

    paired_edge = np.empty(n_positive, dtype=int64)
    paired_tri = np.empty(n_positive, dtype=int64)
    n_pairs = 0

    buf_a = np.empty(t_count, dtype=int32)
    buf_b = np.empty(t_count, dtype=int32)

    for e in range(n_edges - 1, -1, -1):
        if n_pairs == n_positive:
            break
        start = counts[e]
        cur_len = counts[e + 1] - start
        if cur_len == 0:
            continue
        cur = buf_a
        spare = buf_b
        cur[:cur_len] = tri_of_edge[start : start + cur_len]
        while cur_len > 0:
            low = cur[0]
            ostart = pivot_owner_start[low]
            if ostart == -1:
                if pool_len + cur_len > pool.shape[0]:
                    grown = np.empty(2 * (pool_len + cur_len), dtype=int32)
                    grown[:pool_len] = pool[:pool_len]
                    pool = grown
                pivot_owner_start[low] = pool_len
                pivot_owner_size[low] = cur_len
                pool[pool_len : pool_len + cur_len] = cur[:cur_len]
                pool_len += cur_len
                paired_edge[n_pairs] = e
                paired_tri[n_pairs] = low
                n_pairs += 1
                break
            # cur ^= stored column (merge of ascending index runs)
            osize = pivot_owner_size[low]
            ia = 0
            ib = 0
            io = 0
            while ia < cur_len and ib < osize:
                av = cur[ia]
                bv = pool[ostart + ib]
                if av < bv:
                    spare[io] = av
                    ia += 1
                    io += 1
                elif av > bv:
                    spare[io] = bv
                    ib += 1
                    io += 1
                else:
                    ia += 1
                    ib += 1
            while ia < cur_len:
                spare[io] = cur[ia]
                ia += 1
                io += 1
            while ib < osize:
                spare[io] = pool[ostart + ib]
                ib += 1
                io += 1
            tmp = cur
            cur = spare
            spare = tmp
            cur_len = io
    return paired_edge[:n_pairs], paired_tri[:n_pairs]
