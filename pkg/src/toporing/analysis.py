"""Geometric-graph construction and ring metrics for generated clouds.

Bonds are distance-window edges; ring detection is an exact induced-cycle
search (a cycle is chordless when no edge joins two non-consecutive cycle
vertices, which excludes fused small rings whose outer boundary is long).
A cloud counts as a macrocycle when it has a chordless cycle of at least
12 vertices, and as a bicycle when it has at least two distinct ones;
connectivity means one graph component.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import as_cloud, pairwise_distances

__all__ = [
    "MoleculeGraph",
    "CycleSearch",
    "TopoReport",
    "build_graph",
    "largest_chordless_cycle",
    "chordless_cycle_search",
    "classify",
    "batch_metrics",
    "MACRO_RING_SIZE",
]

MACRO_RING_SIZE = 12


@dataclass
class MoleculeGraph:
    n: int
    edges: dict  # (i, j) with i < j -> length

    def neighbors(self):
        adj = [[] for _ in range(self.n)]
        for (i, j) in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return [sorted(a) for a in adj]

    def adjacency(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=bool)
        for (i, j) in self.edges:
            m[i, j] = m[j, i] = True
        return m

    def connected(self) -> bool:
        if self.n <= 1:
            return True
        parent = list(range(self.n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        comps = self.n
        for (i, j) in self.edges:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[rj] = ri
                comps -= 1
        return comps == 1


def build_graph(cloud, bond_min: float = 1.0, bond_max: float = 2.0) -> MoleculeGraph:
    """Edge (i, j) iff bond_min <= d(i, j) <= bond_max."""
    if not (0.0 < bond_min < bond_max):
        raise ValueError(f"need 0 < bond_min < bond_max, got [{bond_min}, {bond_max}]")
    cloud = as_cloud(cloud)
    dist = pairwise_distances(cloud)
    n = cloud.shape[0]
    edges = {}
    iu, ju = np.triu_indices(n, k=1)
    keep = (dist[iu, ju] >= bond_min) & (dist[iu, ju] <= bond_max)
    for i, j in zip(iu[keep], ju[keep]):
        edges[(int(i), int(j))] = float(dist[i, j])
    return MoleculeGraph(n=n, edges=edges)


@dataclass
class CycleSearch:
    """Result of the induced-cycle scan: sizes found and cap status."""

    largest: int
    count_at_least: int
    bound_hit: bool
    threshold: int


def chordless_cycle_search(
    graph: MoleculeGraph, cap: int | None = None, threshold: int = MACRO_RING_SIZE
) -> CycleSearch:
    """Enumerate every chordless cycle of length <= cap exactly once.

    Each cycle is generated in canonical form: smallest vertex first, and
    its smaller neighbor second. Extension vertices must be non-adjacent to
    all earlier path vertices (induced paths); a vertex adjacent to the
    start can only close the cycle, never extend it. Returns the largest
    size, the count of cycles >= threshold, and whether the cap cut any
    extension (only possible for caps below the vertex count).
    """
    if cap is None:
        cap = 2 * graph.n
    if cap < 3:
        raise ValueError(f"cycle cap must be >= 3, got {cap}")
    adj = graph.adjacency()
    nbrs = graph.neighbors()
    largest = 0
    count = 0
    bound_hit = False

    for u in range(graph.n):
        starts = [a for a in nbrs[u] if a > u]
        for a in starts:
            # path holds an induced path u, a, ...; in_path marks membership
            path = [u, a]
            stack = [[w for w in nbrs[a] if w > u]]
            in_path = np.zeros(graph.n, dtype=bool)
            in_path[u] = in_path[a] = True
            while stack:
                if not stack[-1]:
                    stack.pop()
                    if len(path) > 2:
                        in_path[path.pop()] = False
                    continue
                w = stack[-1].pop()
                if in_path[w]:
                    continue
                closes = adj[w, u]
                # chord test against all path vertices except the last (and
                # the start, whose adjacency means close-only)
                chord = False
                for p in path[1:-1]:
                    if adj[w, p]:
                        chord = True
                        break
                if chord:
                    continue
                if closes:
                    size = len(path) + 1
                    if size >= 3 and path[1] < w:
                        if size > largest:
                            largest = size
                        if size >= threshold:
                            count += 1
                    continue  # extending past w would leave the chord (w, u)
                if len(path) + 1 >= cap:
                    bound_hit = True
                    continue
                path.append(w)
                in_path[w] = True
                stack.append([x for x in nbrs[w] if x > u])
    return CycleSearch(
        largest=largest, count_at_least=count, bound_hit=bound_hit, threshold=threshold
    )


def largest_chordless_cycle(graph: MoleculeGraph, cap: int | None = None) -> CycleSearch:
    """Largest chordless cycle with length <= cap; .largest is 0 if acyclic."""
    return chordless_cycle_search(graph, cap=cap)


@dataclass
class TopoReport:
    connected: bool
    largest_chordless_cycle: int
    chordless_cycles_ge_12: int
    classification: str  # "bicycle" | "macrocycle" | "neither"
    bound_hit: bool = False
    fdta_terms: dict | None = None

    @property
    def is_macrocycle(self) -> bool:
        return self.chordless_cycles_ge_12 >= 1

    @property
    def is_bicycle(self) -> bool:
        return self.chordless_cycles_ge_12 >= 2

    def to_dict(self) -> dict:
        return {
            "connected": self.connected,
            "largest_chordless_cycle": self.largest_chordless_cycle,
            "chordless_cycles_ge_12": self.chordless_cycles_ge_12,
            "classification": self.classification,
            "bound_hit": self.bound_hit,
            "fdta_terms": self.fdta_terms,
        }


def classify(graph: MoleculeGraph, cap: int | None = None, fdta_terms: dict | None = None) -> TopoReport:
    """Connectivity plus ring classification of one geometric graph."""
    scan = chordless_cycle_search(graph, cap=cap)
    if scan.count_at_least >= 2:
        label = "bicycle"
    elif scan.count_at_least >= 1:
        label = "macrocycle"
    else:
        label = "neither"
    return TopoReport(
        connected=graph.connected(),
        largest_chordless_cycle=scan.largest,
        chordless_cycles_ge_12=scan.count_at_least,
        classification=label,
        bound_hit=scan.bound_hit,
        fdta_terms=fdta_terms,
    )


def batch_metrics(reports) -> dict:
    """Aggregate rates over a batch of reports.

    Ring rates are computed among connected samples (disconnected clouds do
    not count as usable molecules); rates are NaN when no sample qualifies.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("batch_metrics needs at least one report")
    n = len(reports)
    connected = [r for r in reports if r.connected]
    sizes = [r.largest_chordless_cycle for r in reports]

    def rate(subset, pred):
        return sum(1 for r in subset if pred(r)) / len(subset) if subset else math.nan

    return {
        "n_samples": n,
        "connectivity_rate": len(connected) / n,
        "macrocycle_rate_connected": rate(connected, lambda r: r.is_macrocycle),
        "bicycle_rate_connected": rate(connected, lambda r: r.is_bicycle),
        "mean_largest_cycle": float(np.mean(sizes)),
        "median_largest_cycle": float(np.median(sizes)),
    }
