"""Marked balls inside d-regular graphs: representation, enumeration,
hashing, canonical deduplication and serialization.

A marked ball of radius p is the subgraph of some d-regular graph made of
all nodes and edges sitting on paths of length at most p starting at an
endpoint of a distinguished edge X.  Equivalently (and this is what the
generator enforces): every node is within graph distance p of an endpoint
of X, every edge has an endpoint within distance p - 1, and all nodes at
distance < p carry full degree d.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BallError",
    "MarkedBall",
    "BallHashKey",
    "BallDatabase",
    "enumerate_b1",
    "extend_balls",
    "hash_ball",
    "is_isomorphic",
    "classify_omega",
    "tree_completion",
]

FORMAT_VERSION = 1
CENTRALITY_DECIMALS = 8
CENTRALITY_TOL = 1e-10


class BallError(ValueError):
    """Structural violation in a marked ball."""


def _norm_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass
class MarkedBall:
    """A finite graph with a distinguished edge, radius p and degree bound d.

    Nodes are 0..nodes-1; ``edges`` is kept sorted so equal structures
    serialize identically.
    """

    d: int
    p: int
    edges: tuple[tuple[int, int], ...]
    marked_edge: tuple[int, int]
    omega_class: int | None = None
    _canon: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.edges = tuple(sorted(_norm_edge(u, v) for u, v in self.edges))
        self.marked_edge = _norm_edge(*self.marked_edge)

    # -- basic structure ----------------------------------------------------

    @property
    def nodes(self) -> int:
        return 1 + max(max(u, v) for u, v in self.edges)

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.nodes)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def degrees(self) -> list[int]:
        adj = self.adjacency()
        return [len(a) for a in adj]

    def distances(self) -> list[int]:
        """BFS distance of every node from the nearer marked endpoint."""
        a, b = self.marked_edge
        adj = self.adjacency()
        dist = [-1] * self.nodes
        dist[a] = dist[b] = 0
        queue = deque((a, b))
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return dist

    def validate(self) -> None:
        if self.d < 2:
            raise BallError(f"degree bound d = {self.d} < 2")
        if self.p < 0:
            raise BallError("radius must be >= 0")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise BallError(f"self-loop at node {u}")
            if (u, v) in seen:
                raise BallError(f"multi-edge {u}-{v}")
            seen.add((u, v))
        if self.marked_edge not in seen:
            raise BallError("marked edge missing from edge list")
        if set(range(self.nodes)) != {x for e in self.edges for x in e}:
            raise BallError("node labels must be contiguous 0..n-1")
        deg = self.degrees()
        if max(deg) > self.d:
            raise BallError(f"node degree {max(deg)} exceeds bound {self.d}")
        dist = self.distances()
        for v, dv in enumerate(dist):
            if dv < 0 or dv > self.p:
                raise BallError(f"node {v} outside radius {self.p} (dist {dv})")
        for u, v in self.edges:
            if (u, v) != self.marked_edge and min(dist[u], dist[v]) > self.p - 1:
                raise BallError(f"edge {u}-{v} not on any path of length <= {self.p}")

    def is_regular(self) -> bool:
        return all(deg == self.d for deg in self.degrees())

    # -- canonical form -----------------------------------------------------

    def canonical_form(self) -> tuple:
        if self._canon is None:
            self._canon = _canonical_form(self)
        return self._canon

    @property
    def id(self) -> str:
        payload = repr((self.d, self.p, self.canonical_form()))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def relabeled(self, perm: dict[int, int]) -> "MarkedBall":
        """Apply a node relabeling (old label -> new label)."""
        return MarkedBall(
            d=self.d,
            p=self.p,
            edges=tuple(_norm_edge(perm[u], perm[v]) for u, v in self.edges),
            marked_edge=_norm_edge(*(perm[x] for x in self.marked_edge)),
            omega_class=self.omega_class,
        )

    def to_record(self) -> dict:
        key = hash_ball(self)
        return {
            "id": self.id,
            "d": self.d,
            "p": self.p,
            "nodes": self.nodes,
            "edges": [list(e) for e in self.edges],
            "marked_edge": list(self.marked_edge),
            "omega_class": self.omega_class,
            "hash_key": [key.diameter, list(key.centrality_profile)],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "MarkedBall":
        return cls(
            d=rec["d"],
            p=rec["p"],
            edges=tuple(tuple(e) for e in rec["edges"]),
            marked_edge=tuple(rec["marked_edge"]),
            omega_class=rec["omega_class"],
        )


# ---------------------------------------------------------------------------
# Canonical labeling
#
# Backtracking minimization of the per-node sequence
#     (invariant(v), adjacency bits of v against already-placed nodes)
# with the marked edge pinned to positions 0 and 1 (both orientations).
# The lexicographically smallest full sequence over all admissible
# placements is the canonical form; ties are explored exhaustively.
# ---------------------------------------------------------------------------


def _refine_invariants(adj, base, rounds=2):
    inv = list(base)
    for _ in range(rounds):
        inv = [(inv[v], tuple(sorted(inv[w] for w in adj[v]))) for v in range(len(adj))]
    # compress to small ints, order-preserving
    ranks = {val: i for i, val in enumerate(sorted(set(inv)))}
    return [ranks[val] for val in inv]


def _canonical_form(ball: MarkedBall) -> tuple:
    n = ball.nodes
    adj = ball.adjacency()
    dist = ball.distances()
    deg = [len(a) for a in adj]
    inv = _refine_invariants(adj, [(dist[v], deg[v]) for v in range(n)])
    a, b = ball.marked_edge

    best: list | None = None

    def search(placed: list[int], rows: list, remaining: set[int]):
        nonlocal best
        i = len(placed)
        if i == n:
            if best is None or rows < best:
                best = list(rows)
            return
        # candidate keys: invariant first, then adjacency bits to placed
        keyed = []
        for v in remaining:
            bits = tuple(1 if w in adj[v] else 0 for w in placed)
            keyed.append(((inv[v], bits), v))
        min_key = min(k for k, _ in keyed)
        # prefix pruning against current best
        rows.append(min_key)
        if best is not None and rows > best[: len(rows)]:
            rows.pop()
            return
        for k, v in keyed:
            if k != min_key:
                continue
            placed.append(v)
            remaining.remove(v)
            search(placed, rows, remaining)
            remaining.add(v)
            placed.pop()
        rows.pop()

    for first, second in ((a, b), (b, a)):
        remaining = set(range(n)) - {first, second}
        rows = [(inv[first], ()), (inv[second], (1,))]
        search([first, second], rows, remaining)

    assert best is not None
    return tuple(best)


def is_isomorphic(b1: MarkedBall, b2: MarkedBall) -> bool:
    """True iff some graph isomorphism maps marked edge to marked edge."""
    if b1.nodes != b2.nodes or len(b1.edges) != len(b2.edges):
        return False
    if sorted(b1.degrees()) != sorted(b2.degrees()):
        return False
    return b1.canonical_form() == b2.canonical_form()


# ---------------------------------------------------------------------------
# Isomorphism-invariant hashing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BallHashKey:
    diameter: int
    centrality_profile: tuple[float, ...]


def _diameter(adj) -> int:
    n = len(adj)
    diam = 0
    for src in range(n):
        dist = [-1] * n
        dist[src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        diam = max(diam, max(dist))
    return diam


def hash_ball(b: MarkedBall) -> BallHashKey:
    """Deterministic isomorphism-invariant key: graph diameter plus the
    sorted eigenvector centrality profile of the adjacency matrix."""
    adj = b.adjacency()
    n = len(adj)
    mat = np.zeros((n, n))
    for u, v in b.edges:
        mat[u, v] = mat[v, u] = 1.0
    # power iteration on A + I: same principal eigenvector, guaranteed
    # convergence on connected graphs
    np.fill_diagonal(mat, 1.0)
    vec = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(10000):
        nxt = mat @ vec
        nxt /= np.linalg.norm(nxt)
        if np.max(np.abs(nxt - vec)) <= CENTRALITY_TOL * np.max(np.abs(nxt)):
            vec = nxt
            break
        vec = nxt
    profile = tuple(sorted(round(float(x), CENTRALITY_DECIMALS) for x in np.abs(vec)))
    return BallHashKey(_diameter(adj), profile)


# ---------------------------------------------------------------------------
# Database
# ---------------------------------------------------------------------------


@dataclass
class BallDatabase:
    """Marked balls deduplicated up to marked-edge isomorphism, bucketed by
    the isomorphism-invariant hash key."""

    d: int
    p: int
    buckets: dict[BallHashKey, list[MarkedBall]] = field(default_factory=dict)

    @property
    def total_count(self) -> int:
        return sum(len(bucket) for bucket in self.buckets.values())

    def __iter__(self):
        for key in self.buckets:
            yield from self.buckets[key]

    def __len__(self) -> int:
        return self.total_count

    def add(self, ball: MarkedBall) -> bool:
        """Insert unless an isomorphic ball is already stored.  Returns True
        when the ball was new."""
        key = hash_ball(ball)
        bucket = self.buckets.setdefault(key, [])
        for other in bucket:
            if is_isomorphic(ball, other):
                return False
        bucket.append(ball)
        return True

    def balls(self) -> list[MarkedBall]:
        return list(self)

    def by_id(self, ball_id: str) -> MarkedBall:
        for ball in self:
            if ball.id == ball_id:
                return ball
        raise KeyError(ball_id)

    # -- persistence: line-delimited records, one ball per line -------------

    def save(self, path) -> None:
        with open(path, "w") as fh:
            header = {
                "d": self.d,
                "p": self.p,
                "total_count": self.total_count,
                "format_version": FORMAT_VERSION,
            }
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for ball in sorted(self, key=lambda b: b.id):
                fh.write(json.dumps(ball.to_record(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "BallDatabase":
        with open(path) as fh:
            header = json.loads(fh.readline())
            if header.get("format_version") != FORMAT_VERSION:
                raise BallError(
                    f"unsupported ball database format {header.get('format_version')}"
                )
            db = cls(d=header["d"], p=header["p"])
            count = 0
            for line in fh:
                rec = json.loads(line)
                ball = MarkedBall.from_record(rec)
                key = BallHashKey(rec["hash_key"][0], tuple(rec["hash_key"][1]))
                db.buckets.setdefault(key, []).append(ball)
                count += 1
            if count != header["total_count"]:
                raise BallError(
                    f"ball count mismatch: header {header['total_count']}, got {count}"
                )
        return db


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------


def classify_omega(b: MarkedBall) -> int:
    """Radius-1 neighborhood class of the marked edge in the cubic case.

    The classes are distinguished by the number of common neighbors of the
    marked endpoints: two shared neighbors close a 4-cycle around the edge
    (class 1), one shared neighbor forms a triangle (class 2), none leaves
    a tree neighborhood (class 3).
    """
    if b.d != 3:
        raise BallError("radius-1 classification is defined for d = 3 only")
    if b.p < 1:
        raise BallError("classification needs radius >= 1")
    adj = b.adjacency()
    a, c = b.marked_edge
    common = len(adj[a] & adj[c])
    if common >= 2:
        return 1
    if common == 1:
        return 2
    return 3


def _completions(ball: MarkedBall):
    """Yield edge tuples for all radius-(p+1) completions of ``ball``.

    Every deficient node (all on the boundary at distance p) is brought to
    degree exactly d by linking to another deficient boundary node, to a
    node created earlier in the same completion, or to a fresh node.
    Duplicate graphs may be produced; the caller deduplicates.
    """
    d = ball.d
    n_old = ball.nodes
    adj = ball.adjacency()
    deg = ball.degrees()
    dist = ball.distances()
    deficient = [v for v in range(n_old) if deg[v] < d]
    for v in deficient:
        if dist[v] != ball.p:
            raise BallError(f"deficient node {v} is interior (dist {dist[v]})")

    base_edges = list(ball.edges)

    def rec(idx: int, adj, deg, n_total: int, extra: list[tuple[int, int]]):
        if idx == len(deficient):
            yield tuple(base_edges + extra)
            return
        v = deficient[idx]
        need = d - deg[v]
        if need <= 0:
            yield from rec(idx + 1, adj, deg, n_total, extra)
            return
        later_old = [
            w for w in deficient[idx + 1 :] if deg[w] < d and w not in adj[v]
        ]
        new_nodes = [
            u for u in range(n_old, n_total) if deg[u] < d and u not in adj[v]
        ]
        candidates = later_old + new_nodes
        for fresh in range(need + 1):
            for combo in itertools.combinations(candidates, need - fresh):
                targets = list(combo) + list(range(n_total, n_total + fresh))
                for w in targets:
                    adj[v].add(w)
                    deg[v] += 1
                    if w < n_total:
                        adj[w].add(v)
                        deg[w] += 1
                    else:
                        adj.append({v})
                        deg.append(1)
                    extra.append(_norm_edge(v, w))
                yield from rec(idx + 1, adj, deg, n_total + fresh, extra)
                for w in reversed(targets):
                    adj[v].discard(w)
                    deg[v] -= 1
                    if w < n_total:
                        adj[w].discard(v)
                        deg[w] -= 1
                    else:
                        adj.pop()
                        deg.pop()
                    extra.pop()

    yield from rec(0, adj, deg, n_old, [])


def extend_balls(db: BallDatabase) -> BallDatabase:
    """All non-isomorphic radius-(p+1) balls reachable from a radius-p
    database.  Already d-regular balls cannot grow and are carried over."""
    out = BallDatabase(d=db.d, p=db.p + 1)
    for parent in db:
        if parent.is_regular():
            carried = MarkedBall(
                d=parent.d,
                p=db.p + 1,
                edges=parent.edges,
                marked_edge=parent.marked_edge,
                omega_class=parent.omega_class,
            )
            out.add(carried)
            continue
        for edges in _completions(parent):
            child = MarkedBall(
                d=db.d, p=db.p + 1, edges=edges, marked_edge=parent.marked_edge
            )
            if db.d == 3:
                child.omega_class = classify_omega(child)
            out.add(child)
    return out


def enumerate_b1(d: int) -> BallDatabase:
    """All non-isomorphic radius-1 balls completable inside a d-regular
    graph, grown from the bare marked edge."""
    if d < 2:
        raise BallError(f"degree bound d = {d} < 2")
    seed = MarkedBall(d=d, p=0, edges=((0, 1),), marked_edge=(0, 1))
    db0 = BallDatabase(d=d, p=0)
    db0.add(seed)
    return extend_balls(db0)


# ---------------------------------------------------------------------------
# Tree completion (walk counting support; never simulated)
# ---------------------------------------------------------------------------


def tree_completion(b: MarkedBall, extra_depth: int) -> MarkedBall:
    """Attach fresh tree children to every deficient node until all nodes
    within distance p + extra_depth of the marked edge have degree d."""
    if extra_depth < 0:
        raise ValueError("extra_depth must be >= 0")
    target = b.p + extra_depth
    edges = list(b.edges)
    adj = b.adjacency()
    deg = b.degrees()
    dist = list(b.distances())
    frontier = deque(v for v in range(len(deg)) if dist[v] <= target and deg[v] < b.d)
    while frontier:
        v = frontier.popleft()
        while deg[v] < b.d:
            child = len(deg)
            edges.append(_norm_edge(v, child))
            deg[v] += 1
            deg.append(1)
            adj[v].add(child)
            adj.append({v})
            dist.append(dist[v] + 1)
            if dist[child] <= target:
                frontier.append(child)
    return MarkedBall(
        d=b.d,
        p=max(dist),
        edges=tuple(edges),
        marked_edge=b.marked_edge,
        omega_class=b.omega_class,
    )
