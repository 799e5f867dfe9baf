"""Labeled trees, rooted forests, set partitions and connected parts.

Vertices are labeled ``1..n`` throughout. All enumerators are generators so
that large sums (``8**6`` trees at ``n = 8``) run in bounded memory.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Iterator, Sequence

import numpy as np

TREE_N_MAX = 8
FOREST_N_MAX = 7
PARTITION_N_MAX = 10
CONNECTED_N_MAX = 8


class EnumerationBoundError(ValueError):
    """Requested enumeration exceeds its configured size bound."""


def _check_edges(n: int, edges) -> tuple[tuple[int, int], ...]:
    out = []
    for e in edges:
        i, j = sorted(int(v) for v in e)
        if not 1 <= i < j <= n:
            raise ValueError(f"edge {tuple(e)} not a pair of distinct vertices in 1..{n}")
        out.append((i, j))
    if len(set(out)) != len(out):
        raise ValueError("duplicate edge")
    return tuple(sorted(out))


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n + 1))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def is_forest(n: int, edges) -> bool:
    ds = _DisjointSet(n)
    return all(ds.union(i, j) for i, j in edges)


def components(n: int, edges) -> list[frozenset[int]]:
    """Connected components of the graph on ``1..n``, ordered by smallest vertex."""
    ds = _DisjointSet(n)
    for i, j in edges:
        ds.union(i, j)
    groups: dict[int, set[int]] = {}
    for v in range(1, n + 1):
        groups.setdefault(ds.find(v), set()).add(v)
    return sorted((frozenset(g) for g in groups.values()), key=min)


@dataclass(frozen=True)
class TreeGraph:
    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a tree needs at least one vertex")
        edges = _check_edges(self.n, self.edges)
        if len(edges) != self.n - 1 or not is_forest(self.n, edges):
            raise ValueError(f"edges {edges} do not form a tree on {self.n} vertices")
        object.__setattr__(self, "edges", edges)

    def non_edges(self) -> list[tuple[int, int]]:
        es = set(self.edges)
        return [p for p in itertools.combinations(range(1, self.n + 1), 2) if p not in es]

    def bfs_parents(self, root: int = 1) -> list[tuple[int, int]]:
        """(child, parent) pairs in breadth-first order from ``root``."""
        adj: dict[int, list[int]] = {v: [] for v in range(1, self.n + 1)}
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        order, seen, queue = [], {root}, [root]
        while queue:
            nxt = []
            for u in queue:
                for w in sorted(adj[u]):
                    if w not in seen:
                        seen.add(w)
                        order.append((w, u))
                        nxt.append(w)
            queue = nxt
        return order

    def relabel(self, perm: Sequence[int]) -> "TreeGraph":
        """Apply ``v -> perm[v-1]``."""
        return TreeGraph(self.n, tuple((perm[i - 1], perm[j - 1]) for i, j in self.edges))


@dataclass(frozen=True)
class RootedForest:
    n: int
    edges: tuple[tuple[int, int], ...]
    roots: frozenset[int]

    def __post_init__(self):
        edges = _check_edges(self.n, self.edges)
        if not is_forest(self.n, edges):
            raise ValueError("edge set contains a cycle")
        roots = frozenset(int(r) for r in self.roots)
        for comp in components(self.n, edges):
            if len(comp & roots) != 1:
                raise ValueError(f"component {sorted(comp)} must contain exactly one root")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "roots", roots)


@dataclass(frozen=True)
class Partition:
    blocks: tuple[frozenset, ...]

    def __post_init__(self):
        blocks = tuple(frozenset(b) for b in self.blocks)
        if any(not b for b in blocks):
            raise ValueError("empty block")
        seen: set = set()
        for b in blocks:
            if seen & b:
                raise ValueError("blocks overlap")
            seen |= b
        object.__setattr__(self, "blocks", blocks)

    @property
    def ground_set(self) -> frozenset:
        return frozenset().union(*self.blocks)


# -- Pruefer correspondence -------------------------------------------------

def prufer_decode(seq: Sequence[int], n: int | None = None) -> TreeGraph:
    seq = [int(s) for s in seq]
    n = len(seq) + 2 if n is None else n
    if len(seq) != n - 2 or n < 2:
        raise ValueError(f"a Pruefer sequence for n={n} has length {n - 2}")
    for s in seq:
        if not 1 <= s <= n:
            raise ValueError(f"label {s} out of range 1..{n}")
    degree = [1] * (n + 1)
    for s in seq:
        degree[s] += 1
    leaves = [v for v in range(1, n + 1) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for s in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, s))
        degree[s] -= 1
        if degree[s] == 1:
            heapq.heappush(leaves, s)
    edges.append((heapq.heappop(leaves), heapq.heappop(leaves)))
    return TreeGraph(n, tuple(edges))


def prufer_encode(tree: TreeGraph) -> tuple[int, ...]:
    n = tree.n
    if n < 2:
        raise ValueError("Pruefer codes need n >= 2")
    adj: dict[int, set[int]] = {v: set() for v in range(1, n + 1)}
    for i, j in tree.edges:
        adj[i].add(j)
        adj[j].add(i)
    leaves = [v for v in adj if len(adj[v]) == 1]
    heapq.heapify(leaves)
    out = []
    for _ in range(n - 2):
        leaf = heapq.heappop(leaves)
        (nbr,) = adj.pop(leaf)
        adj[nbr].discard(leaf)
        out.append(nbr)
        if len(adj[nbr]) == 1:
            heapq.heappush(leaves, nbr)
    return tuple(out)


def enumerate_trees(n: int, n_max: int = TREE_N_MAX) -> Iterator[TreeGraph]:
    """All ``n**(n-2)`` labeled trees, in lexicographic Pruefer order."""
    if not 1 <= n <= n_max:
        raise EnumerationBoundError(f"tree enumeration needs 1 <= n <= {n_max}, got {n}")
    if n == 1:
        yield TreeGraph(1, ())
        return
    for seq in itertools.product(range(1, n + 1), repeat=n - 2):
        yield prufer_decode(seq, n)


def count_trees(n: int) -> int:
    return 1 if n == 1 else n ** (n - 2)


def sample_tree_uniform(n: int, rng: np.random.Generator) -> TreeGraph:
    if n < 2:
        raise ValueError("n >= 2 required")
    seq = rng.integers(1, n + 1, size=n - 2)
    return prufer_decode(seq.tolist(), n)


# -- set partitions and rooted forests --------------------------------------

def _restricted_growth(m: int) -> Iterator[list[int]]:
    if m == 0:
        yield []
        return
    a = [0] * m

    def rec(i: int, top: int):
        if i == m:
            yield list(a)
            return
        for v in range(top + 2):
            a[i] = v
            yield from rec(i + 1, max(top, v))

    a[0] = 0
    yield from rec(1, 0)


def enumerate_partitions(ground: Iterable[Hashable], n_max: int = PARTITION_N_MAX) -> Iterator[Partition]:
    """Every set partition of ``ground`` once (restricted-growth order)."""
    items = sorted(ground)
    if len(items) > n_max:
        raise EnumerationBoundError(f"partition enumeration bounded by |X| <= {n_max}")
    if not items:
        return
    for rgs in _restricted_growth(len(items)):
        blocks: list[list] = [[] for _ in range(max(rgs) + 1)]
        for item, b in zip(items, rgs):
            blocks[b].append(item)
        yield Partition(tuple(frozenset(b) for b in blocks))


def bell_number(m: int) -> int:
    row = [1]
    for _ in range(m):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def _trees_on(block: Sequence[int]) -> Iterator[tuple[tuple[int, int], ...]]:
    m = len(block)
    for t in enumerate_trees(m):
        yield tuple(tuple(sorted((block[i - 1], block[j - 1]))) for i, j in t.edges)


def enumerate_rooted_forests(n: int, n_max: int = FOREST_N_MAX) -> Iterator[RootedForest]:
    """Every (forest, root set) pair with one root per tree; ``(n+1)**(n-1)`` of them."""
    if not 1 <= n <= n_max:
        raise EnumerationBoundError(f"rooted-forest enumeration needs 1 <= n <= {n_max}, got {n}")
    for part in enumerate_partitions(range(1, n + 1)):
        blocks = [sorted(b) for b in part.blocks]
        per_block = [
            [(edges, r) for edges in _trees_on(b) for r in b] for b in blocks
        ]
        for choice in itertools.product(*per_block):
            edges = tuple(e for es, _ in choice for e in es)
            roots = frozenset(r for _, r in choice)
            yield RootedForest(n, edges, roots)


# -- connected parts ---------------------------------------------------------

def connected_parts_from_subsets(J: np.ndarray) -> np.ndarray:
    """Connected parts for every subset, given ``J`` indexed by bitmask.

    ``J`` has shape ``(2**m, ...)`` with ``J[0]`` unused; trailing axes are
    carried along (one column per sampled configuration). Uses the
    partition recursion organised by the block containing the lowest
    element of each subset.
    """
    size = J.shape[0]
    Jc = np.empty_like(J)
    Jc[0] = 0.0
    for S in range(1, size):
        low = S & -S
        rest = S ^ low
        acc = np.array(J[S], copy=True)
        if rest:
            # A = low | B over proper submasks B of rest: the block holding the lowest element
            B = (rest - 1) & rest
            while True:
                A = low | B
                acc -= Jc[A] * J[S ^ A]
                if B == 0:
                    break
                B = (B - 1) & rest
        Jc[S] = acc
    return Jc


def connected_part(J: Callable[[frozenset], float], X: Iterable[Hashable],
                   n_max: int = CONNECTED_N_MAX) -> float:
    """``J_c(X)`` defined by ``J(X) = sum over partitions of prod J_c(block)``."""
    items = sorted(X)
    m = len(items)
    if m > n_max:
        raise EnumerationBoundError(f"connected_part bounded by |X| <= {n_max}")
    if m == 0:
        raise ValueError("X must be nonempty")
    vals = np.zeros(1 << m)
    for mask in range(1, 1 << m):
        vals[mask] = J(frozenset(items[k] for k in range(m) if mask >> k & 1))
    return float(connected_parts_from_subsets(vals)[-1])


def subset_products(pair: np.ndarray) -> np.ndarray:
    """``prod_{i<j in S} pair[i, j]`` for every bitmask ``S``.

    ``pair`` has shape ``(m, m, ...)``; only the strict upper triangle is read.
    """
    m = pair.shape[0]
    tail = pair.shape[2:]
    out = np.empty((1 << m,) + tail, dtype=pair.dtype)
    out[0] = 1.0
    for h in range(m):
        top = 1 << h
        # K[T] = prod_{i in T} pair[i, h] for T subset of {0..h-1}
        K = np.empty((top,) + tail, dtype=pair.dtype)
        K[0] = 1.0
        for T in range(1, top):
            lowbit = T & -T
            K[T] = K[T ^ lowbit] * pair[lowbit.bit_length() - 1, h]
        out[top:2 * top] = out[:top] * K
    return out
