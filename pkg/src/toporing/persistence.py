"""Vietoris-Rips persistent homology in dimensions 0 and 1.

The engine computes H0 by a union-find pass over length-sorted edges and H1
by Z/2 column reduction of the triangle boundary matrix (2-skeleton, full
edge range). Every finite pair carries the critical vertex pairs whose
distance realizes its birth and death scale, which is what the guidance
gradient needs. `brute_force_persistence` is an independent oracle used
only in tests: it recovers the same diagram from GF(2) rank computations of
boundary matrices at every distinct edge length.

Tie-breaking is deterministic: edges sort by (length, i, j), triangles by
(longest-edge length, i, j, k); a pair's death edge is the killing
triangle's longest edge, ties going to the lexicographically smaller
vertex pair. Zero-persistence pairs are dropped.
"""

import json
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import as_cloud, pairwise_distances
from ._reduction import (
    union_find_merges,
    enumerate_triangles_ranked,
    reduce_edge_cocolumns,
)

__all__ = [
    "PersistencePair",
    "PersistenceDiagram",
    "rips_persistence",
    "brute_force_persistence",
    "dominant_h1",
    "h0_merge_events",
]

INF = math.inf


class PersistencePair(NamedTuple):
    """One birth-death pair with its critical vertex pairs.

    birth_edge is None exactly for dim-0 pairs (born at scale 0 with no
    creating edge); death_edge is None exactly when death is infinite.
    """

    dim: int
    birth: float
    death: float
    birth_edge: tuple | None = None
    death_edge: tuple | None = None

    @property
    def persistence(self) -> float:
        return self.death - self.birth


@dataclass
class PersistenceDiagram:
    n_points: int
    pairs: list

    def in_dim(self, dim: int) -> list:
        return [p for p in self.pairs if p.dim == dim]

    def finite_h0_deaths(self) -> np.ndarray:
        return np.array(
            [p.death for p in self.pairs if p.dim == 0 and p.death != INF]
        )

    def as_multiset(self):
        """Sorted (dim, birth, death) triples, the tie-robust comparison key."""
        return sorted((p.dim, p.birth, p.death) for p in self.pairs)

    def to_json(self) -> str:
        rows = []
        for p in self.pairs:
            rows.append(
                {
                    "dim": p.dim,
                    "birth": p.birth,
                    "death": None if p.death == INF else p.death,
                    "birth_edge": list(p.birth_edge) if p.birth_edge else None,
                    "death_edge": list(p.death_edge) if p.death_edge else None,
                }
            )
        return json.dumps({"n_points": self.n_points, "pairs": rows})

    @classmethod
    def from_json(cls, text: str) -> "PersistenceDiagram":
        obj = json.loads(text)
        pairs = [
            PersistencePair(
                dim=row["dim"],
                birth=row["birth"],
                death=INF if row["death"] is None else row["death"],
                birth_edge=tuple(row["birth_edge"]) if row["birth_edge"] else None,
                death_edge=tuple(row["death_edge"]) if row["death_edge"] else None,
            )
            for row in obj["pairs"]
        ]
        return cls(n_points=obj["n_points"], pairs=pairs)


def _sorted_edges(dist, r_cap=INF):
    """Edge arrays sorted by (length, i, j), truncated at r_cap."""
    n = dist.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    lengths = dist[iu, ju]
    if r_cap != INF:
        keep = lengths <= r_cap
        iu, ju, lengths = iu[keep], ju[keep], lengths[keep]
    order = np.lexsort((ju, iu, lengths))
    return iu[order], ju[order], lengths[order]


def _enclosing_radius(dist) -> float:
    """Smallest scale at which some vertex is adjacent to all others.

    Past this scale the Rips complex is a cone, so every H1 class is dead
    and all components have merged; simplices beyond it are inert.
    """
    return float(dist.max(axis=1).min())


def h0_merge_events(cloud):
    """Component-merge edges with their scales, cheapest route to H0 deaths.

    Returns (deaths, edges): deaths ascending, edges[k] the vertex pair whose
    distance is deaths[k]. Skips the H1 machinery entirely; used by the
    guidance fast path when only the connectivity term is enabled.
    """
    cloud = as_cloud(cloud)
    n = cloud.shape[0]
    if n == 1:
        return np.empty(0), []
    dist = pairwise_distances(cloud)
    ei, ej, elen = _sorted_edges(dist, _enclosing_radius(dist))
    mask = union_find_merges(ei.astype(np.int64), ej.astype(np.int64), n)
    deaths = elen[mask]
    edges = [(int(a), int(b)) for a, b in zip(ei[mask], ej[mask])]
    return deaths, edges


def rips_persistence(cloud) -> PersistenceDiagram:
    """Full H0/H1 Rips diagram of a point cloud with critical pairs."""
    cloud = as_cloud(cloud)
    n = cloud.shape[0]
    pairs = [PersistencePair(dim=0, birth=0.0, death=INF)]
    if n == 1:
        return PersistenceDiagram(n_points=1, pairs=pairs)

    dist = pairwise_distances(cloud)
    r_cap = _enclosing_radius(dist)
    ei, ej, elen = _sorted_edges(dist, r_cap)
    merge_mask = union_find_merges(ei.astype(np.int64), ej.astype(np.int64), n)
    for a, b, length in zip(ei[merge_mask], ej[merge_mask], elen[merge_mask]):
        if length == 0.0:
            continue  # coincident points give a zero-persistence H0 pair
        pairs.append(
            PersistencePair(
                dim=0, birth=0.0, death=float(length), death_edge=(int(a), int(b))
            )
        )

    if n >= 3:
        n_positive = int(ei.shape[0] - merge_mask.sum())
        rank = np.full(n * n, -1, dtype=np.int32)
        rank[ei.astype(np.int64) * n + ej] = np.arange(ei.shape[0], dtype=np.int32)
        rows, tval, verts, lex = enumerate_triangles_ranked(dist, rank, r_cap)
        torder = np.lexsort((lex, tval))
        rows, tval, verts = rows[torder], tval[torder], verts[torder]
        paired_edge, paired_tri = reduce_edge_cocolumns(rows, ei.shape[0], n_positive)
        if paired_edge.shape[0] != n_positive:
            raise RuntimeError(
                "persistence reduction lost pairs "
                f"({paired_edge.shape[0]} of {n_positive}); truncation bug"
            )

        for erank, t in zip(paired_edge, paired_tri):
            birth = float(elen[erank])
            death = float(tval[t])
            if birth == death:
                continue
            i, j, k = (int(v) for v in verts[t])
            death_edge = _longest_edge(dist, i, j, k)
            pairs.append(
                PersistencePair(
                    dim=1,
                    birth=birth,
                    death=death,
                    birth_edge=(int(ei[erank]), int(ej[erank])),
                    death_edge=death_edge,
                )
            )

    return PersistenceDiagram(n_points=n, pairs=pairs)


def _longest_edge(dist, i, j, k):
    """Longest edge of triangle (i, j, k); ties pick the lexicographically smaller pair."""
    best = (i, j)
    best_len = dist[i, j]
    for u, v in ((i, k), (j, k)):
        if dist[u, v] > best_len:
            best_len = dist[u, v]
            best = (u, v)
    return best


def dominant_h1(diagram: PersistenceDiagram, k: int = 1) -> list:
    """The k dim-1 pairs with largest death, descending; fewer if fewer exist.

    Exact death ties are ordered by (birth, birth_edge), which keeps the
    selection deterministic.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    h1 = diagram.in_dim(1)
    h1.sort(key=lambda p: (-p.death, p.birth, p.birth_edge))
    return h1[:k]


# ---------------------------------------------------------------------------
# Brute-force oracle (tests only)
# ---------------------------------------------------------------------------


def _gf2_rank(columns) -> int:
    """Rank over GF(2) of a matrix given as bitmask columns."""
    pivots = {}
    rank = 0
    for col in columns:
        while col:
            low = col.bit_length() - 1
            if low in pivots:
                col ^= pivots[low]
            else:
                pivots[low] = col
                rank += 1
                break
    return rank


def brute_force_persistence(cloud) -> PersistenceDiagram:
    """Oracle diagram from GF(2) ranks of boundary matrices at every scale.

    Persistent Betti numbers beta_p(i, j) are assembled from explicit rank
    computations and converted to pair multiplicities by inclusion-exclusion;
    no reduction, no clearing. Critical edges are attributed by exact scale
    match, which is all the multiset comparison in tests needs. Guarded to
    N <= 12.
    """
    cloud = as_cloud(cloud)
    n = cloud.shape[0]
    if n > 12:
        raise ValueError(f"brute-force oracle is guarded to N <= 12, got {n}")

    pairs = [PersistencePair(dim=0, birth=0.0, death=INF)]
    if n == 1:
        return PersistenceDiagram(n_points=1, pairs=pairs)

    dist = pairwise_distances(cloud)
    ei, ej, elen = _sorted_edges(dist)
    n_edges = elen.shape[0]
    scales = [0.0] + sorted(set(float(v) for v in elen if v > 0.0))
    m = len(scales) - 1

    # Edge counts per scale index; edges are length-sorted so K_s owns a prefix.
    edge_count = [int(np.searchsorted(elen, s, side="right")) for s in scales]

    # Vertex-boundary columns (rows = vertices) per edge, in sorted edge order.
    d1_cols = [(1 << int(a)) | (1 << int(b)) for a, b in zip(ei, ej)]

    # Triangle columns (rows = sorted edge ranks) with their filtration values.
    rank_of = {}
    for r, (a, b) in enumerate(zip(ei, ej)):
        rank_of[(int(a), int(b))] = r
    tri_cols = []
    tri_vals = []
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                val = max(dist[i, j], dist[i, k], dist[j, k])
                col = (
                    (1 << rank_of[(i, j)])
                    | (1 << rank_of[(i, k)])
                    | (1 << rank_of[(j, k)])
                )
                tri_cols.append(col)
                tri_vals.append(float(val))
    tri_order = np.argsort(tri_vals, kind="stable")
    tri_cols = [tri_cols[t] for t in tri_order]
    tri_vals = [tri_vals[t] for t in tri_order]

    # Dimension 0: components at scale s via rank of the edge boundary matrix.
    def b0(s):
        return n - _gf2_rank(d1_cols[: edge_count[s]])

    comp = [b0(s) for s in range(m + 1)]
    for s in range(1, m + 1):
        for _ in range(comp[s - 1] - comp[s]):
            pairs.append(
                PersistencePair(
                    dim=0,
                    birth=0.0,
                    death=scales[s],
                    death_edge=_edge_at_scale(ei, ej, elen, scales[s]),
                )
            )

    # Dimension 1: beta1(i, j) = dim Z1(K_i) - dim(B1(K_j) ∩ span(E_i)).
    tri_count = [
        int(np.searchsorted(np.array(tri_vals), s, side="right")) for s in scales
    ]
    z1 = [edge_count[s] - _gf2_rank(d1_cols[: edge_count[s]]) for s in range(m + 1)]
    rank_d2 = [_gf2_rank(tri_cols[: tri_count[s]]) for s in range(m + 1)]

    def beta1(i, j):
        # Shifting away the first edge_count[i] rows restricts to rows outside K_i.
        masked = [c >> edge_count[i] for c in tri_cols[: tri_count[j]]]
        boundary_in_ki = rank_d2[j] - _gf2_rank(masked)
        return z1[i] - boundary_in_ki

    beta = {}
    for i in range(m + 1):
        for j in range(i, m + 1):
            beta[(i, j)] = beta1(i, j)

    for i in range(1, m + 1):
        for j in range(i + 1, m + 1):
            mult = (
                beta[(i, j - 1)]
                - beta[(i, j)]
                - beta[(i - 1, j - 1)]
                + beta[(i - 1, j)]
            )
            for _ in range(mult):
                pairs.append(
                    PersistencePair(
                        dim=1,
                        birth=scales[i],
                        death=scales[j],
                        birth_edge=_edge_at_scale(ei, ej, elen, scales[i]),
                        death_edge=_edge_at_scale(ei, ej, elen, scales[j]),
                    )
                )
    # The full 2-skeleton is simply connected, so no H1 class survives.
    assert beta[(m, m)] == 0

    return PersistenceDiagram(n_points=n, pairs=pairs)


def _edge_at_scale(ei, ej, elen, scale):
    idx = int(np.searchsorted(elen, scale, side="left"))
    return (int(ei[idx]), int(ej[idx]))
