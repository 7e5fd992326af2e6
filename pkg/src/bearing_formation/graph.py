"""Undirected leader/follower interaction graphs and their Laplacians.

Agents are numbered 1..n with the leaders occupying 1..n_leaders.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphError


@dataclass(frozen=True)
class GraphTopology:
    n: int
    n_leaders: int
    edges: tuple[tuple[int, int], ...]
    _neighbors: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_leaders < 1:
            raise GraphError("need at least one leader")
        if self.n - self.n_leaders < 1:
            raise GraphError("need at least one follower")
        canon = set()
        for e in self.edges:
            i, j = (int(e[0]), int(e[1]))
            if i == j:
                raise GraphError(f"self-loop at agent {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise GraphError(f"edge {(i, j)} references an agent outside 1..{self.n}")
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        nbrs: list[list[int]] = [[] for _ in range(self.n + 1)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        object.__setattr__(self, "_neighbors", tuple(tuple(sorted(x)) for x in nbrs))

    @property
    def n_followers(self) -> int:
        return self.n - self.n_leaders

    @property
    def leaders(self) -> range:
        return range(1, self.n_leaders + 1)

    @property
    def followers(self) -> range:
        return range(self.n_leaders + 1, self.n + 1)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._neighbors[i]

    def is_leader(self, i: int) -> bool:
        return 1 <= i <= self.n_leaders

    def without_edges(self, removed) -> GraphTopology:
        drop = {(min(a, b), max(a, b)) for a, b in removed}
        return GraphTopology(self.n, self.n_leaders, tuple(e for e in self.edges if e not in drop))


def laplacian(g: GraphTopology) -> np.ndarray:
    """Integer Laplacian with degree on the diagonal and -1 per edge."""
    L = np.zeros((g.n, g.n), dtype=np.int64)
    for i, j in g.edges:
        L[i - 1, j - 1] = L[j - 1, i - 1] = -1
        L[i - 1, i - 1] += 1
        L[j - 1, j - 1] += 1
    return L


def laplacian_blocks(g: GraphTopology):
    """Return (L_ll, L_lf, L_fl, L_ff) split at the leader/follower boundary."""
    L = laplacian(g)
    k = g.n_leaders
    return L[:k, :k], L[:k, k:], L[k:, :k], L[k:, k:]


def followers_reachable_from_leaders(g: GraphTopology) -> bool:
    seen = set(g.leaders)
    queue = deque(g.leaders)
    while queue:
        i = queue.popleft()
        for j in g.neighbors(i):
            if j not in seen:
                seen.add(j)
                queue.append(j)
    return all(f in seen for f in g.followers)
