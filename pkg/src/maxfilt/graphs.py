"""Max filtering on weighted graphs under vertex relabeling.

Templates are small weighted trees in post-order labeling; evaluation against
an n-vertex graph runs a color-coding dynamic program that is exact whenever
the coloring family has the rainbow property, and a lower bound otherwise.
The value convention matches the Frobenius inner product of the zero-padded
template against the conjugated graph (each unordered edge counted twice),
which is what the injection oracle computes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import FilterResult, ValidationError


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Symmetric zero-diagonal adjacency matrix."""

    adj: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adj, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValidationError("adjacency matrix must be square")
        if not np.all(np.isfinite(adj)):
            raise ValidationError("adjacency matrix must be finite")
        if np.max(np.abs(adj - adj.T)) > 0:
            raise ValidationError("adjacency matrix must be symmetric")
        if np.max(np.abs(np.diag(adj))) > 0:
            raise ValidationError("adjacency matrix must have zero diagonal")
        object.__setattr__(self, "adj", adj)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    def to_dict(self) -> dict:
        edges = []
        for u in range(self.n):
            for v in range(u + 1, self.n):
                w = self.adj[u, v]
                if w != 0:
                    edges.append([u, v, float(w)])
        return {"n": self.n, "edges": edges}

    @classmethod
    def from_dict(cls, data: dict) -> "WeightedGraph":
        n = int(data["n"])
        adj = np.zeros((n, n))
        for u, v, w in data["edges"]:
            adj[int(u), int(v)] = float(w)
            adj[int(v), int(u)] = float(w)
        return cls(adj)

    @classmethod
    def cycle(cls, n: int, weight: float = 1.0) -> "WeightedGraph":
        adj = np.zeros((n, n))
        for u in range(n):
            v = (u + 1) % n
            adj[u, v] = adj[v, u] = weight
        return cls(adj)

    @classmethod
    def disjoint_union(cls, *graphs: "WeightedGraph") -> "WeightedGraph":
        n = sum(g.n for g in graphs)
        adj = np.zeros((n, n))
        off = 0
        for g in graphs:
            adj[off:off + g.n, off:off + g.n] = g.adj
            off += g.n
        return cls(adj)


@dataclass(frozen=True, eq=False)
class TreeTemplate:
    """Weighted tree on k vertices whose labeling is a post-order traversal:
    every vertex u < k-1 has exactly one neighbor with a larger label."""

    adj: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adj, dtype=float)
        graph = WeightedGraph(adj)         # symmetry / zero-diagonal / finiteness
        object.__setattr__(self, "adj", graph.adj)
        validate_post_order(self)          # also establishes tree-ness

    @property
    def k(self) -> int:
        return self.adj.shape[0]

    def to_dict(self) -> dict:
        return WeightedGraph(self.adj).to_dict()

    @classmethod
    def from_dict(cls, data: dict) -> "TreeTemplate":
        return cls(WeightedGraph.from_dict(data).adj)

    @classmethod
    def path(cls, k: int, weight: float = 1.0) -> "TreeTemplate":
        adj = np.zeros((k, k))
        for u in range(k - 1):
            adj[u, u + 1] = adj[u + 1, u] = weight
        return cls(adj)


def validate_post_order(tree: TreeTemplate) -> list:
    """Return [(u, parent_u)] for every non-root vertex, parent_u > u.

    Raises if any vertex below the root has a number of later neighbors
    different from one; together with the edge count this certifies both
    tree-ness and post-order labeling.
    """
    adj = np.asarray(tree.adj, dtype=float)
    k = adj.shape[0]
    pairs = []
    for u in range(k - 1):
        later = np.flatnonzero(adj[u, u + 1:]) + u + 1
        if len(later) != 1:
            raise ValidationError(
                f"vertex {u} has {len(later)} later neighbors; labeling is not post-order")
        pairs.append((u, int(later[0])))
    return pairs


@dataclass(frozen=True, eq=False)
class ColorCoding:
    """Family of colorings [n] -> [k] such that (when verified) every k-subset
    of vertices is rainbow under at least one member."""

    n: int
    k: int
    colorings: np.ndarray    # (N, n) ints in [0, k)

    @property
    def size(self) -> int:
        return self.colorings.shape[0]


def coding_size(n: int, k: int, multiplier: float = 1.0) -> int:
    """ceil(k e^k log n) random colorings suffice with positive probability."""
    return max(1, math.ceil(k * math.exp(k) * math.log(n) * multiplier))


def is_rainbow_family(colorings: np.ndarray, n: int, k: int) -> bool:
    """Exhaustively check that every k-subset of [n] is rainbow under some coloring."""
    for subset in itertools.combinations(range(n), k):
        cols = colorings[:, subset]
        cols_sorted = np.sort(cols, axis=1)
        rainbow = np.all(np.diff(cols_sorted, axis=1) > 0, axis=1)
        if not rainbow.any():
            return False
    return True


def make_color_coding(n: int, k: int, rng_seed: int, multiplier: float = 1.0) -> ColorCoding:
    """Draw ceil(k e^k log n) uniform colorings.

    For n <= 12 and k <= 4 the rainbow property is verified exhaustively and
    the family is redrawn (fresh seed derivation) on failure, up to 16
    attempts; exhaustion signals a broken RNG rather than bad luck.
    """
    if not 1 <= k <= n:
        raise ValidationError("need n >= k >= 1")
    size = coding_size(n, k, multiplier)
    children = np.random.SeedSequence(rng_seed).spawn(16)
    verify = n <= 12 and k <= 4
    for attempt in range(16):
        rng = np.random.default_rng(children[attempt])
        colorings = rng.integers(0, k, size=(size, n))
        if not verify or is_rainbow_family(colorings, n, k):
            return ColorCoding(n=n, k=k, colorings=colorings)
    raise ValidationError("rainbow verification failed 16 times; RNG is broken")


def mf_tree_dp(tree: TreeTemplate, graph: WeightedGraph, coding: ColorCoding,
               return_stats: bool = False):
    """Color-coding dynamic program for the tree-template max filter.

    For every (coloring, color permutation) pair, vertices are processed in
    post-order, each accumulating into its parent the best placement of its
    subtree within the color classes.  The returned value is twice the DP
    optimum, converting the per-edge sum into the symmetric Frobenius inner
    product of the zero-padded template with the conjugated graph.  A pair
    with any empty required color class contributes -inf.

    Witness: the injection of tree vertices into graph vertices realizing the
    optimum (recovered by a single-pair traceback).
    """
    a = tree.adj
    b = graph.adj
    k, n = tree.k, graph.n
    if coding.n != n or coding.k != k:
        raise ValidationError("color coding shape does not match tree/graph")
    if n < k:
        raise ValidationError("graph must have at least as many vertices as the tree")
    edges = validate_post_order(tree)

    colorings = coding.colorings
    big_n = colorings.shape[0]
    neg = -np.inf
    best_val = neg
    best_pair = None
    pair_ops = 0
    for pi in itertools.permutations(range(k)):
        pi_arr = np.asarray(pi)
        tv = pi_arr[colorings]                    # tree vertex of each graph vertex
        masks = [tv == u for u in range(k)]       # (N, n) membership per tree vertex
        ell = np.zeros((big_n, n))
        for u, pu in edges:
            cand = np.where(masks[u][:, None, :], ell[:, None, :], neg) \
                + a[u, pu] * np.where(masks[u][:, None, :], b.T[None, :, :], 0.0)
            best_child = cand.max(axis=2)         # (N, n) over v in class(u)
            ell = np.where(masks[pu], ell + best_child, ell)
            pair_ops += int(masks[u].sum(axis=1) @ masks[pu].sum(axis=1))
        root_scores = np.where(masks[k - 1], ell, neg).max(axis=1)
        i = int(np.argmax(root_scores))
        if root_scores[i] > best_val:
            best_val = float(root_scores[i])
            best_pair = (i, pi_arr)
    if not np.isfinite(best_val):
        raise ValidationError("no coloring assigns every color; coding unusable")

    sigma = _traceback(a, b, edges, colorings[best_pair[0]], best_pair[1], k, n)
    result = FilterResult(value=2.0 * best_val, witnesses=[sigma])
    if return_stats:
        stats = {"pairs": pair_ops, "colorings": big_n,
                 "permutations": math.factorial(k)}
        return result, stats
    return result


def _traceback(a, b, edges, coloring, pi_arr, k, n):
    """Re-run the DP for the winning (coloring, permutation) with backpointers."""
    tv = pi_arr[np.asarray(coloring)]
    classes = [np.flatnonzero(tv == u) for u in range(k)]
    ell = np.zeros(n)
    bp = {}
    for u, pu in edges:
        cu, cpu = classes[u], classes[pu]
        scores = ell[cu][None, :] + a[u, pu] * b[np.ix_(cpu, cu)]
        choice = np.argmax(scores, axis=1)
        bp[u] = dict(zip(cpu.tolist(), cu[choice].tolist()))
        ell[cpu] += scores[np.arange(len(cpu)), choice]
    root_class = classes[k - 1]
    sigma = np.full(k, -1, dtype=int)
    sigma[k - 1] = int(root_class[np.argmax(ell[root_class])])
    for u, pu in reversed(edges):
        sigma[u] = bp[u][int(sigma[pu])]
    return sigma


def injection_value(tree: TreeTemplate, graph: WeightedGraph, sigma) -> float:
    """Value of a specific placement: 2 * sum over tree edges of A_e * B_sigma(e)."""
    sigma = np.asarray(sigma, dtype=int)
    total = 0.0
    for u, pu in validate_post_order(tree):
        total += tree.adj[u, pu] * graph.adj[sigma[u], sigma[pu]]
    return 2.0 * total


def brute_force_tree_filter(tree: TreeTemplate, graph: WeightedGraph) -> float:
    """Exact optimum over all injective placements of the tree (n <= 8 only).

    Equals the zero-padded-template max filter over the conjugation action.
    """
    k, n = tree.k, graph.n
    if n > 8:
        raise ValidationError("injection enumeration capped at n <= 8")
    if n < k:
        raise ValidationError("graph must have at least as many vertices as the tree")
    edges = validate_post_order(tree)
    perms = np.array(list(itertools.permutations(range(n), k)))
    total = np.zeros(len(perms))
    for u, pu in edges:
        total += tree.adj[u, pu] * graph.adj[perms[:, u], perms[:, pu]]
    return 2.0 * float(total.max())


def graph_isomorphism_certificate(a1: WeightedGraph, a2: WeightedGraph,
                                  coding: Optional[ColorCoding] = None) -> str:
    """Exact isomorphism check at n <= 8 by enumerating conjugations.

    Two weighted graphs are isomorphic exactly when the max filter between
    them matches both squared Frobenius norms.  ``coding`` is accepted for
    interface compatibility and ignored (the check is exhaustive).
    """
    del coding
    if a1.n != a2.n:
        return "non-isomorphic"
    n = a1.n
    if n > 8:
        raise ValidationError("isomorphism certificate capped at n <= 8")
    n1 = float(np.sum(a1.adj ** 2))
    n2 = float(np.sum(a2.adj ** 2))
    tol = 1e-9 * (1.0 + math.sqrt(n1 * n2))
    if abs(n1 - n2) > tol:
        return "non-isomorphic"
    best = -np.inf
    for perm in itertools.permutations(range(n)):
        p = np.asarray(perm)
        val = float(np.sum(a1.adj * a2.adj[np.ix_(p, p)]))
        if val > best:
            best = val
        if abs(best - n1) <= tol:
            return "isomorphic"
    return "isomorphic" if abs(best - n1) <= tol and abs(best - n2) <= tol else "non-isomorphic"
