"""Operator commutativity graph of the annealing Hamiltonian on a ball,
and exact counting of walks that escape the radius-q region.

Blue nodes stand for the single-site transverse-field operators (one per
graph node), red nodes for the edge operators (one per graph edge); a blue
and a red node are adjacent iff the site is an endpoint of the edge.  The
bound terms need the number of length-(2k+m) walks from the marked edge's
red node that land on an operator supported outside B_q(X), q = k - 1.
"""

from __future__ import annotations

from dataclasses import dataclass

from .balls import MarkedBall

__all__ = [
    "CommGraph",
    "WalkCountVector",
    "build_commutativity_graph",
    "count_exit_walks",
    "closed_form_counts",
    "remainder_weight",
]

N_TERMS = 6  # walk lengths 2k .. 2k+5


@dataclass
class CommGraph:
    """Bipartite operator graph.  Indices 0..n_blue-1 are blue (graph
    nodes), the rest red (graph edges, in ball edge order)."""

    n_blue: int
    n_red: int
    adj: list[list[int]]
    root: int
    inside: list[bool]
    degree_bound: int
    blue_dist: list[int]

    def is_bipartite_consistent(self) -> bool:
        for i in range(self.n_blue):
            if any(j < self.n_blue for j in self.adj[i]):
                return False
        for i in range(self.n_blue, self.n_blue + self.n_red):
            if any(j >= self.n_blue for j in self.adj[i]):
                return False
        return True


def build_commutativity_graph(b: MarkedBall, q: int) -> CommGraph:
    """Commutativity graph of the Hamiltonian on ``b`` rooted at the marked
    edge, with operators flagged as inside/outside B_q(X).

    A blue operator is inside iff its node is within distance q of the
    marked endpoints; a red operator is inside iff its edge lies on a path
    of length <= q from them (nearer endpoint within q - 1, plus the
    marked edge itself).
    """
    if q < 0:
        raise ValueError("q must be >= 0")
    n = b.nodes
    dist = b.distances()
    edges = b.edges
    n_red = len(edges)
    adj: list[list[int]] = [[] for _ in range(n + n_red)]
    root = None
    inside = [dist[v] <= q for v in range(n)]
    for i, (u, v) in enumerate(edges):
        red = n + i
        adj[red] = [u, v]
        adj[u].append(red)
        adj[v].append(red)
        if (u, v) == b.marked_edge:
            root = red
            inside.append(True)
        else:
            inside.append(min(dist[u], dist[v]) <= q - 1)
    assert root is not None
    return CommGraph(
        n_blue=n,
        n_red=n_red,
        adj=adj,
        root=root,
        inside=inside,
        degree_bound=b.d,
        blue_dist=dist,
    )


@dataclass(frozen=True)
class WalkCountVector:
    """Exit-walk counts N_m for walk lengths 2k+m, m = 0..5."""

    k: int
    counts: tuple[int, ...]


def count_exit_walks(cg: CommGraph, k: int) -> WalkCountVector:
    """Exact numbers of length-(2k+m) walks from the root ending outside
    B_{q=k-1}(X), m = 0..5, by layered dynamic programming.

    Requires the underlying graph to be degree-complete out to distance
    k + 2, i.e. a tree completion at least 3 layers past q.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    for v in range(cg.n_blue):
        if cg.blue_dist[v] <= k + 2 and len(cg.adj[v]) < cg.degree_bound:
            raise ValueError(
                f"graph not extended far enough: node {v} at distance "
                f"{cg.blue_dist[v]} has degree {len(cg.adj[v])} < {cg.degree_bound}"
            )
    size = cg.n_blue + cg.n_red
    vec = [0] * size
    vec[cg.root] = 1
    counts = []
    for length in range(1, 2 * k + N_TERMS):
        nxt = [0] * size
        for i, c in enumerate(vec):
            if c:
                for j in cg.adj[i]:
                    nxt[j] += c
        vec = nxt
        if length >= 2 * k:
            counts.append(sum(c for i, c in enumerate(vec) if not cg.inside[i]))
    return WalkCountVector(k=k, counts=tuple(counts))


def closed_form_counts(d: int, k: int, m: int) -> int:
    """Worst-case (cycle-free ball) walk counts behind the global bound."""
    if d < 2:
        raise ValueError("d must be >= 2")
    if k < 1:
        raise ValueError("k must be >= 1")
    base = 2 * (d - 1) ** k
    if m == 0 or m == 1:
        return base
    if m == 2:
        return base * (d * (k + 1) + 1)
    if m == 3:
        return base * d * (k + 2)
    if m == 4:
        num = d * d * ((k + 1) ** 2 + 3) + d * (3 * k + 2) + 2 * k
        if num % 2:
            raise ArithmeticError("non-integer walk count")
        return base * num // 2
    if m == 5:
        num = d * d * ((k + 2) ** 2 + 3) + d * (k + 1) + 2 * (k - 1)
        if num % 2:
            raise ArithmeticError("non-integer walk count")
        return base * num // 2
    raise ValueError(f"term index m = {m} outside 0..5")


def remainder_weight(d: int, k: int) -> int:
    """Walk weight (2d)^{k+3} carried by the truncation remainder."""
    return (2 * d) ** (k + 3)
