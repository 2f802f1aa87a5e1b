"""Graph reasoning tasks: generation, exact solving, and answer verification.

Graphs have 5-25 nodes with optional direction and integer weights. Every
operator is solved exactly: branch and bound with a greedy coloring bound
for clique-family problems, iterative-deepening cycle branching for
feedback/bipartite deletion problems, bitmask dynamic programming for path
problems, and pruned enumeration for cut and density objectives. Solvers
run under a deterministic step budget so that generation rejects instances
that are too expensive instead of stalling, and regenerated datasets stay
byte-identical across machines.

Witness tie-breaking: set-valued witnesses are canonicalized to the
lexicographically smallest optimal witness; sequence- and directed-edge-set
witnesses use the solver's fixed search order (deterministic, documented).
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

import networkx as nx

from .core import (
    GenerationError,
    GroundTruth,
    ProblemInstance,
    Rng,
    round_half_away,
)

OPERATORS = (
    "minimum_density_subgraph",
    "maximum_clique",
    "maximum_independent_set",
    "minimum_vertex_cover",
    "maximum_induced_bipartite_subgraph",
    "maximum_acyclic_subgraph",
    "densest_k_subgraph",
    "balanced_cut",
    "feedback_vertex_set",
    "feedback_edge_set",
    "longest_path",
    "hamiltonian_path",
    "hamiltonian_cycle",
    "graph_diameter",
    "graph_radius",
    "graph_density",
)

# Answer payload shape expected from a model, per operator.
ANSWER_SHAPES = {
    "minimum_density_subgraph": "vertex_set",
    "maximum_clique": "vertex_set",
    "maximum_independent_set": "vertex_set",
    "minimum_vertex_cover": "vertex_set",
    "maximum_induced_bipartite_subgraph": "vertex_set",
    "maximum_acyclic_subgraph": "edge_set",
    "densest_k_subgraph": "vertex_set",
    "balanced_cut": "partition",
    "feedback_vertex_set": "vertex_set",
    "feedback_edge_set": "edge_set",
    "longest_path": "node_sequence",
    "hamiltonian_path": "node_sequence_or_none",
    "hamiltonian_cycle": "node_sequence_or_none",
    "graph_diameter": "int",
    "graph_radius": "int",
    "graph_density": "real",
}

_REQUIRES_DIRECTED = {"maximum_acyclic_subgraph"}
_ALLOWS_DIRECTED = {
    "maximum_acyclic_subgraph",
    "feedback_vertex_set",
    "feedback_edge_set",
    "longest_path",
    "hamiltonian_path",
    "hamiltonian_cycle",
    "graph_density",
}
_ALLOWS_WEIGHTED = {
    "longest_path",
    "graph_diameter",
    "graph_radius",
    "minimum_density_subgraph",
    "densest_k_subgraph",
}
_REQUIRES_CONNECTED = {"graph_diameter", "graph_radius"}

# Exact solving in pure Python is the bottleneck, so each operator gets a
# default node cap (generator policy, configurable; instance bounds stay
# within the family's 5-25 node range).
_NODE_CAPS = {
    "minimum_density_subgraph": 15,
    "maximum_clique": 25,
    "maximum_independent_set": 25,
    "minimum_vertex_cover": 25,
    "maximum_induced_bipartite_subgraph": 16,
    "maximum_acyclic_subgraph": 14,
    "densest_k_subgraph": 15,
    "balanced_cut": 20,
    "feedback_vertex_set": 14,
    "feedback_edge_set": 25,
    "longest_path": 14,
    "hamiltonian_path": 20,
    "hamiltonian_cycle": 20,
    "graph_diameter": 25,
    "graph_radius": 25,
    "graph_density": 25,
}
_DIRECTED_NODE_CAPS = {
    # Directed feedback-edge / acyclic-subgraph objectives run a 2^n DP.
    "feedback_edge_set": 14,
    "feedback_vertex_set": 14,
}

MAX_WEIGHT = 20

DEFAULT_BUDGET_STEPS = 600_000


class SolveBudgetExceeded(RuntimeError):
    """The solver hit its deterministic step budget."""


class DisconnectedGraphError(ValueError):
    """Diameter/radius require a connected graph."""


class _Budget:
    __slots__ = ("remaining",)

    def __init__(self, steps: int):
        self.remaining = steps

    def tick(self, cost: int = 1) -> None:
        self.remaining -= cost
        if self.remaining < 0:
            raise SolveBudgetExceeded()


@dataclass(frozen=True)
class GraphProblem:
    n: int
    edges: tuple[tuple[int, int], ...]
    directed: bool
    operator: str
    weights: Optional[tuple[int, ...]] = None
    k: Optional[int] = None

    def __post_init__(self):
        if self.operator not in OPERATORS:
            raise ValueError(f"unknown operator {self.operator!r}")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) outside node range")
            key = (u, v) if self.directed else (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add(key)
        if self.weights is not None:
            if len(self.weights) != len(self.edges):
                raise ValueError("weights must parallel edges")
            if any(w < 1 or w > MAX_WEIGHT for w in self.weights):
                raise ValueError(f"weights must be in [1, {MAX_WEIGHT}]")

    @property
    def weighted(self) -> bool:
        return self.weights is not None

    @property
    def m(self) -> int:
        return len(self.edges)

    def weight_of(self, i: int) -> int:
        return self.weights[i] if self.weights is not None else 1

    def adjacency_masks(self) -> list[int]:
        """Undirected adjacency bitmasks (or union of both directions)."""
        adj = [0] * self.n
        for u, v in self.edges:
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return adj

    def out_masks(self) -> list[int]:
        if not self.directed:
            return self.adjacency_masks()
        out = [0] * self.n
        for u, v in self.edges:
            out[u] |= 1 << v
        return out

    def in_masks(self) -> list[int]:
        if not self.directed:
            return self.adjacency_masks()
        inc = [0] * self.n
        for u, v in self.edges:
            inc[v] |= 1 << u
        return inc

    def edge_weight_map(self) -> dict[tuple[int, int], int]:
        """Weight lookup keyed by ordered pair (both directions if undirected)."""
        table: dict[tuple[int, int], int] = {}
        for i, (u, v) in enumerate(self.edges):
            w = self.weight_of(i)
            table[(u, v)] = w
            if not self.directed:
                table[(v, u)] = w
        return table

    def to_networkx(self):
        g = nx.DiGraph() if self.directed else nx.Graph()
        g.add_nodes_from(range(self.n))
        for i, (u, v) in enumerate(self.edges):
            g.add_edge(u, v, weight=self.weight_of(i))
        return g

    def to_payload(self) -> dict:
        out: dict = {
            "kind": "graph",
            "nodes": list(range(self.n)),
            "edges": [[u, v] for u, v in self.edges],
            "directed": self.directed,
            "operator": self.operator,
        }
        if self.weights is not None:
            out["weights"] = list(self.weights)
        if self.k is not None:
            out["k"] = self.k
        return out

    @staticmethod
    def from_payload(obj: dict) -> "GraphProblem":
        if obj.get("kind") != "graph":
            raise ValueError(f"not a graph spec payload: kind={obj.get('kind')!r}")
        return GraphProblem(
            n=len(obj["nodes"]),
            edges=tuple((int(u), int(v)) for u, v in obj["edges"]),
            directed=bool(obj["directed"]),
            operator=obj["operator"],
            weights=tuple(obj["weights"]) if obj.get("weights") is not None else None,
            k=obj.get("k"),
        )


@dataclass(frozen=True)
class GraphSolution:
    """Exact optimum: objective value, witness truth, existence flag."""

    value: object  # int for sizes/lengths, float for densities
    truth: GroundTruth
    exists: Optional[bool] = None


@dataclass(frozen=True)
class Verdict:
    verdict: str  # "correct" | "incorrect" | "invalid"
    detail: str = ""


# ---------------------------------------------------------------------------
# Low-level helpers
# ---------------------------------------------------------------------------


def _bits(mask: int):
    while mask:
        b = mask & -mask
        yield b.bit_length() - 1
        mask ^= b


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


def _mask_connected(mask: int, adj: Sequence[int]) -> bool:
    """Is the induced subgraph on `mask` connected (mask non-empty)?"""
    start = mask & -mask
    seen = start
    frontier = start
    while frontier:
        grow = 0
        for v in _bits(frontier):
            grow |= adj[v] & mask
        frontier = grow & ~seen
        seen |= frontier
    return seen == mask


def _internal_weight(mask: int, problem: GraphProblem) -> int:
    total = 0
    for i, (u, v) in enumerate(problem.edges):
        if (mask >> u) & 1 and (mask >> v) & 1:
            total += problem.weight_of(i)
    return total


# ---------------------------------------------------------------------------
# Maximum clique core (greedy-coloring branch and bound), used for clique,
# independent set, and vertex cover.
# ---------------------------------------------------------------------------


def _color_sort(P: int, adj: Sequence[int]) -> tuple[list[int], list[int]]:
    """Greedy coloring of the candidate set: returns (order, bound per index)."""
    classes: list[int] = []
    order: list[int] = []
    bounds: list[int] = []
    for v in _bits(P):
        placed = False
        for ci, cmask in enumerate(classes):
            if not (cmask & adj[v]):
                classes[ci] = cmask | (1 << v)
                placed = True
                break
        if not placed:
            classes.append(1 << v)
    for ci, cmask in enumerate(classes):
        for v in _bits(cmask):
            order.append(v)
            bounds.append(ci + 1)
    return order, bounds


def _max_clique_size(
    adj: Sequence[int], P: int, budget: _Budget, target: Optional[int] = None
) -> int:
    """Size of the maximum clique within candidate mask P.

    With `target`, returns early once a clique of that size is found
    (the returned value is then >= target).
    """
    best = 0

    def expand(size: int, P: int) -> None:
        nonlocal best
        budget.tick()
        if P == 0:
            if size > best:
                best = size
            return
        order, bounds = _color_sort(P, adj)
        for i in range(len(order) - 1, -1, -1):
            if target is not None and best >= target:
                return
            v = order[i]
            if size + bounds[i] <= best:
                return
            expand(size + 1, P & adj[v])
            P &= ~(1 << v)

    expand(0, P)
    return best


def _lex_min_clique(n: int, adj: Sequence[int], opt: int, budget: _Budget) -> int:
    """Lexicographically smallest maximum clique, as a bitmask."""
    chosen = 0
    size = 0
    P = (1 << n) - 1
    for v in range(n):
        if size == opt:
            break
        if not (P >> v) & 1:
            continue
        newP = P & adj[v]
        need = opt - size - 1
        if need == 0 or _max_clique_size(adj, newP, budget, target=need) >= need:
            chosen |= 1 << v
            size += 1
            P = newP
        else:
            P &= ~(1 << v)
    return chosen


def _complement_masks(n: int, adj: Sequence[int]) -> list[int]:
    full = (1 << n) - 1
    return [(full ^ adj[v]) & ~(1 << v) for v in range(n)]


def _solve_clique(problem: GraphProblem, budget: _Budget) -> GraphSolution:
    adj = problem.adjacency_masks()
    opt = _max_clique_size(adj, (1 << problem.n) - 1, budget)
    witness = _lex_min_clique(problem.n, adj, opt, budget)
    return GraphSolution(opt, GroundTruth.vertex_set(_bits(witness)))


def _solve_independent_set(problem: GraphProblem, budget: _Budget) -> GraphSolution:
    cadj = _complement_masks(problem.n, problem.adjacency_masks())
    opt = _max_clique_size(cadj, (1 << problem.n) - 1, budget)
    witness = _lex_min_clique(problem.n, cadj, opt, budget)
    return GraphSolution(opt, GroundTruth.vertex_set(_bits(witness)))


def _solve_vertex_cover(problem: GraphProblem, budget: _Budget) -> GraphSolution:
    n = problem.n
    adj = problem.adjacency_masks()
    cadj = _complement_masks(n, adj)
    full = (1 << n) - 1
    mis = _max_clique_size(cadj, full, budget)
    opt = n - mis
    # Lexicographically smallest cover: decide each vertex in ascending
    # order; v can stay out of the cover only if the remaining graph still
    # admits an independent set of size n - opt containing every vertex
    # banned from the cover so far.
    cover = 0
    banned = 0  # vertices decided to be outside the cover (independent)
    for v in range(n):
        if _popcount(cover) == opt:
            break
        trial_banned = banned
        trial_cover = cover | (1 << v)
        need = n - opt - _popcount(trial_banned)
        blocked = trial_cover | trial_banned
        for b in _bits(trial_banned):
            blocked |= adj[b]
        P = full & ~blocked
        if need <= 0 or _max_clique_size(cadj, P, budget, target=need) >= need:
            cover = trial_cover
        else:
            banned |= 1 << v
    return GraphSolution(opt, GroundTruth.vertex_set(_bits(cover)))


# ---------------------------------------------------------------------------
# Deletion problems: feedback vertex set and maximum induced bipartite
# subgraph via iterative-deepening branching on short cycles.
# ---------------------------------------------------------------------------


def _find_cycle_undirected(n: int, adj: Sequence[int], removed: int) -> Optional[list[int]]:
    """Vertices of some cycle in the graph minus `removed`, else None.

    BFS tree; the first non-tree edge closes a short cycle through the
    lowest common ancestor of its endpoints."""
    alive = ((1 << n) - 1) & ~removed
    parent = [-1] * n
    depth = [0] * n
    unseen = alive
    while unseen:
        root = (unseen & -unseen).bit_length() - 1
        seen_mask = 1 << root
        parent[root] = root
        depth[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in _bits(adj[u] & alive):
                if v == parent[u] and v != u:
                    continue
                if (seen_mask >> v) & 1:
                    pu, pv = u, v
                    cyc_u, cyc_v = [pu], [pv]
                    while depth[pu] > depth[pv]:
                        pu = parent[pu]
                        cyc_u.append(pu)
                    while depth[pv] > depth[pu]:
                        pv = parent[pv]
                        cyc_v.append(pv)
                    while pu != pv:
                        pu = parent[pu]
                        pv = parent[pv]
                        cyc_u.append(pu)
                        cyc_v.append(pv)
                    return cyc_u + cyc_v[:-1][::-1]
                seen_mask |= 1 << v
                parent[v] = u
                depth[v] = depth[u] + 1
                queue.append(v)
        unseen &= ~seen_mask
    return None


def _find_cycle_directed(
    n: int, out: Sequence[int], removed: int
) -> Optional[list[int]]:
    alive = ((1 << n) - 1) & ~removed
    color = [0] * n  # 0 unseen, 1 on stack, 2 done
    stack_path: list[int] = []

    def dfs(u: int) -> Optional[list[int]]:
        color[u] = 1
        stack_path.append(u)
        for v in _bits(out[u] & alive):
            if color[v] == 1:
                i = stack_path.index(v)
                return stack_path[i:]
            if color[v] == 0:
                res = dfs(v)
                if res is not None:
                    return res
        stack_path.pop()
        color[u] = 2
        return None

    for s in _bits(alive):
        if color[s] == 0:
            res = dfs(s)
            if res is not None:
                return res
    return None


def _find_odd_cycle(n: int, adj: Sequence[int], removed: int) -> Optional[list[int]]:
    """Vertices of an odd cycle in the graph minus `removed` (BFS 2-coloring)."""
    alive = ((1 << n) - 1) & ~removed
    side = [-1] * n
    parent = [-1] * n
    depth = [0] * n
    unseen = alive
    while unseen:
        root = (unseen & -unseen).bit_length() - 1
        side[root] = 0
        parent[root] = root
        depth[root] = 0
        comp = 1 << root
        queue = [root]
        while queue:
            u = queue.pop(0)
            for v in _bits(adj[u] & alive):
                if side[v] == -1:
                    side[v] = side[u] ^ 1
                    parent[v] = u
                    depth[v] = depth[u] + 1
                    comp |= 1 << v
                    queue.append(v)
                elif side[v] == side[u] and v != u:
                    # Odd cycle through tree paths of u and v.
                    pu, pv = u, v
                    cyc_u, cyc_v = [pu], [pv]
                    while depth[pu] > depth[pv]:
                        pu = parent[pu]
                        cyc_u.append(pu)
                    while depth[pv] > depth[pu]:
                        pv = parent[pv]
                        cyc_v.append(pv)
                    while pu != pv:
                        pu = parent[pu]
                        pv = parent[pv]
                        cyc_u.append(pu)
                        cyc_v.append(pv)
                    return cyc_u + cyc_v[:-1][::-1]
        unseen &= ~comp
    return None


def _min_deletion(
    find_cycle,
    k_cap: int,
    budget: _Budget,
    forced: int = 0,
    forbidden: int = 0,
) -> Optional[int]:
    """Smallest deletion mask >= `forced`, avoiding `forbidden`, that kills
    every cycle. Iterative deepening; None if no solution within k_cap."""

    def search(deleted: int, k_left: int) -> Optional[int]:
        budget.tick()
        cycle = find_cycle(deleted)
        if cycle is None:
            return deleted
        if k_left == 0:
            return None
        for v in sorted(cycle):
            if (forbidden >> v) & 1:
                continue
            res = search(deleted | (1 << v), k_left - 1)
            if res is not None:
                return res
        return None

    for k in range(0, k_cap + 1):
        res = search(forced, k)
        if res is not None:
            return res
    return None


def _lex_min_deletion(
    n: int, find_cycle, opt: int, budget: _Budget
) -> int:
    """Lex-smallest deletion set of exactly `opt` vertices killing all cycles."""
    chosen = 0
    banned = 0
    for v in range(n):
        if _popcount(chosen) == opt:
            break
        trial = chosen | (1 << v)
        res = _min_deletion(find_cycle, opt - _popcount(trial), budget, trial, banned)
        if res is not None and _popcount(res) <= opt:
            chosen = trial
        else:
            banned |= 1 << v
    return chosen


def _solve_feedback_vertex_set(problem: GraphProblem, budget: _Budget) -> GraphSolution:
    n = problem.n
    if problem.directed:
        out = problem.out_masks()
        finder = lambda removed: _find_cycle_directed(n, out, removed)
    else:
        adj = problem.adjacency_masks()
        finder = lambda removed: _find_cycle_undirected(n, adj, removed)
    base = _min_deletion(finder, n, budget)
    opt = _popcount(base)
    witness = _lex_min_deletion(n, finder, opt, budget) if opt else 0
    return GraphSolution(opt, GroundTruth.vertex_set(_bits(witness)))


def _solve_induced_bipartite(problem: GraphProblem, budget: _Budget) -> GraphSolution:
    n = problem.n
    adj = problem.adjacency_masks()
    finder = lambda removed: _find_odd_cycle(n, adj, removed)
    base = _min_deletion(finder, n, budget)
    deletions = _popcount(base)
    opt = n - deletions
    # Lex-smallest kept set: keep v whenever some optimal deletion set
    # avoids v (and includes everything already banned from keeping).
    kept = 0
    banned_keep = 0
    for v in range(n):
        if _popcount(kept) == opt:
            break
        trial_forbidden = kept | (1 << v)
        res = _min_deletion(
            finder, deletions - _popcount(banned_keep), budget, banned_keep, trial_forbidden
        )
        if res is not None and _popcount(res) <= deletions:
            kept = trial_forbidden
        else:
            banned_keep |= 1 << v
    return GraphSolution(opt, GroundTruth.vertex_set(_bits(kept)))


# ---------------------------------------------------------------------------
# Feedback edge set / maximum acyclic subgraph
# ---------------------------------------------------------------------------


def _solve_feedback_edge_set_undirected(problem: GraphProblem, budget: _Budget) -> GraphSolution:
    # Minimum removal = cycle rank = m - (n - components). The lex-smallest
    # removal set takes each edge, in ascending order, that still lies on a
    # cycle of the remaining graph.
    n = problem.n
    edges = sorted((min(u, v), max(u, v)) for u, v in problem.edges)
    removed: list[tuple[int, int]] = []
    kept = set(edges)

    def connected_without(e: tuple[int, int]) -> bool:
        u0, v0 = e
        adj = [0] * n
        for a, b in kept:
            if (a, b) == e:
                continue
            adj[a] |= 1 << b
            adj[b] |= 1 << a
        seen = 1 << u0
        frontier = seen
        while frontier:
            grow = 0
            for w in _bits(frontier):
                grow |= adj[w]
            frontier = grow & ~seen
            seen |= frontier
            if (seen >> v0) & 1:
                return True
        return False

    for e in edges:
        budget.tick()
        if connected_without(e):
            kept.discard(e)
            removed.append(e)
    return GraphSolution(len(removed), GroundTruth.edge_set(removed))


def _max_forward_edges_order(problem: GraphProblem, budget: _Budget) -> tuple[int, list[int]]:
    """Linear-arrangement DP: max forward edges and one optimal vertex order."""
    n = problem.n
    inc = problem.in_masks()
    dp = [0] * (1 << n)
    for mask in range(1, 1 << n):
        budget.tick()
        best = -1
        sub = mask
        for v in _bits(mask):
            prev = mask ^ (1 << v)
            gain = _popcount(inc[v] & prev)
            cand = dp[prev] + gain
            if cand > best:
                best = cand
        dp[mask] = best
    # Reconstruct with the smallest feasible vertex last at every step.
    order: list[int] = []
    mask = (1 << n) - 1
    while mask:
        for v in _bits(mask):
            prev = mask ^ (1 << v)
            if dp[prev] + _popcount(inc[v] & prev) == dp[mask]:
                order.append(v)
                mask = prev
                break
    order.reverse()
    return dp[(1 << n) - 1], order


def _solve_max_acyclic_subgraph(problem: GraphProblem, budget: _Budget) -> GraphSolution:
    opt, order = _max_forward_edges_order(problem, budget)
    pos = {v: i for i, v in enumerate(order)}
    kept = [(u, v) for u, v in problem.edges if pos[u] < pos[v]]
    return GraphSolution(opt, GroundTruth.edge_set(kept))


def _solve_feedback_edge_set_directed(problem: GraphProblem, budget: _Budget) -> GraphSolution:
    forward, order = _max_forward_edges_order(problem, budget)
    pos = {v: i for i, v in enumerate(order)}
    removed = [(u, v) for u, v in problem.edges if pos[u] > pos[v]]
    return GraphSolution(problem.m - forward, GroundTruth.edge_set(removed))


# ---------------------------------------------------------------------------
# Path problems
# ---------------------------------------------------------------------------


def _hamiltonian_search(
    problem: GraphProblem, budget: _Budget, cycle: bool
) -> Optional[list[int]]:
    """Lex-smallest Hamiltonian path/cycle via DFS with a dead-state memo.

    The memo keys (visited-mask, last-vertex) states proven unextendable, so
    the search degenerates to the usual bitmask DP in the worst case."""
    n = problem.n
    out = problem.out_masks()
    full = (1 << n) - 1

    # Cheap necessary conditions prune most random non-Hamiltonian draws.
    und = problem.adjacency_masks()
    if not _mask_connected(full, und):
        return None
    if not problem.directed:
        degs = [_popcount(a) for a in out]
        if cycle and min(degs) < 2:
            return None
        if not cycle and sum(1 for d in degs if d == 1) > 2:
            return None
    else:
        inc = problem.in_masks()
        outdeg0 = sum(1 for v in range(n) if out[v] == 0)
        indeg0 = sum(1 for v in range(n) if inc[v] == 0)
        if cycle and (outdeg0 or indeg0):
            return None
        if not cycle and (outdeg0 > 1 or indeg0 > 1):
            return None

    dead: set[tuple[int, int]] = set()
    path: list[int] = []

    def extend(mask: int, last: int) -> bool:
        budget.tick()
        if mask == full:
            if not cycle:
                return True
            start = path[0]
            return bool((out[last] >> start) & 1)
        state = (mask, last)
        if state in dead:
            return False
        for v in _bits(out[last] & ~mask):
            path.append(v)
            if extend(mask | (1 << v), v):
                return True
            path.pop()
        dead.add(state)
        return False

    starts = [0] if cycle else range(n)
    for s in starts:
        path = [s]
        if extend(1 << s, s):
            return path
    return None


def _solve_hamiltonian(problem: GraphProblem, budget: _Budget, cycle: bool) -> GraphSolution:
    seq = _hamiltonian_search(problem, budget, cycle)
    if seq is None:
        return GraphSolution(0, GroundTruth.node_sequence(()), exists=False)
    return GraphSolution(problem.n, GroundTruth.node_sequence(seq), exists=True)


def _solve_longest_path(problem: GraphProblem, budget: _Budget) -> GraphSolution:
    # Layered DP over (visited-mask, last-vertex) states; only reachable
    # states are materialized, with parent pointers for reconstruction.
    n = problem.n
    out = problem.out_masks()
    wmap = problem.edge_weight_map()
    parent: dict[tuple[int, int], int] = {}
    layer: dict[tuple[int, int], int] = {(1 << v, v): 0 for v in range(n)}
    best_val = 0
    best_state = (1, 0)
    while layer:
        nxt: dict[tuple[int, int], int] = {}
        for (mask, last), val in layer.items():
            if val > best_val or (val == best_val and (mask, last) < best_state):
                best_val = val
                best_state = (mask, last)
            for v in _bits(out[last] & ~mask):
                budget.tick()
                nv = val + wmap[(last, v)]
                key = (mask | (1 << v), v)
                if nxt.get(key, -1) < nv:
                    nxt[key] = nv
                    parent[key] = last
        layer = nxt
    mask, last = best_state
    seq = [last]
    while mask != (1 << last):
        prev = parent[(mask, last)]
        mask ^= 1 << last
        last = prev
        seq.append(last)
    seq.reverse()
    return GraphSolution(best_val, GroundTruth.node_sequence(seq))


# ---------------------------------------------------------------------------
# Cuts and densities
# ---------------------------------------------------------------------------


def _solve_balanced_cut(problem: GraphProblem, budget: _Budget) -> GraphSolution:
    n = problem.n
    adj = problem.adjacency_masks()
    full = (1 << n) - 1
    size_a = (n + 1) // 2
    if n % 2 == 0:
        # Fix vertex 0 on side A to avoid enumerating each cut twice.
        pools = combinations(range(1, n), size_a - 1)
        base = 1
    else:
        pools = combinations(range(n), size_a)
        base = 0
    best = None
    best_mask = 0
    for combo in pools:
        budget.tick()
        mask = base
        for v in combo:
            mask |= 1 << v
        comp = full & ~mask
        crossing = 0
        for v in _bits(mask):
            crossing += _popcount(adj[v] & comp)
        if best is None or crossing < best:
            best = crossing
            best_mask = mask
    part_a = list(_bits(best_mask))
    part_b = [v for v in range(n) if not (best_mask >> v) & 1]
    return GraphSolution(best, GroundTruth.partition(part_a, part_b))


def graph_density_value(n: int, total_weight: int, directed: bool) -> Fraction:
    pairs = n * (n - 1)
    if not directed:
        return Fraction(2 * total_weight, pairs)
    return Fraction(total_weight, pairs)


def subgraph_density(mask: int, problem: GraphProblem) -> Fraction:
    """Density of the induced subgraph on `mask` (>= 2 nodes): 2w / (s(s-1))."""
    s = _popcount(mask)
    if s < 2:
        raise ValueError("density needs at least 2 nodes")
    return Fraction(2 * _internal_weight(mask, problem), s * (s - 1))


def _solve_min_density_subgraph(problem: GraphProblem, budget: _Budget) -> GraphSolution:
    n = problem.n
    adj = problem.adjacency_masks()
    best: Optional[tuple[Fraction, tuple[int, ...]]] = None
    for mask in range(1, 1 << n):
        budget.tick()
        if _popcount(mask) < 2:
            continue
        if not _mask_connected(mask, adj):
            continue
        dens = subgraph_density(mask, problem)
        key = (dens, tuple(_bits(mask)))
        if best is None or key < best:
            best = key
    if best is None:
        raise ValueError("graph has no connected pair of nodes")
    value = round_half_away(best[0], 3)
    return GraphSolution(value, GroundTruth.vertex_set(best[1]))


def _solve_densest_k_subgraph(problem: GraphProblem, budget: _Budget) -> GraphSolution:
    n, k = problem.n, problem.k
    if k is None or not (2 <= k <= n):
        raise ValueError("densest_k_subgraph requires k in [2, n]")
    best: Optional[tuple[int, tuple[int, ...]]] = None
    for combo in combinations(range(n), k):
        budget.tick()
        mask = 0
        for v in combo:
            mask |= 1 << v
        w = _internal_weight(mask, problem)
        if best is None or w > best[0]:
            best = (w, combo)
    dens = Fraction(2 * best[0], k * (k - 1))
    return GraphSolution(round_half_away(dens, 3), GroundTruth.vertex_set(best[1]))


def _solve_graph_density(problem: GraphProblem, budget: _Budget) -> GraphSolution:
    dens = graph_density_value(problem.n, problem.m, problem.directed)
    value = round_half_away(dens, 3)
    return GraphSolution(value, GroundTruth.real_scalar(dens, precision=3))


# ---------------------------------------------------------------------------
# Metrics: diameter / radius
# ---------------------------------------------------------------------------


def _eccentricities(problem: GraphProblem) -> list[int]:
    n = problem.n
    adj_lists: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for i, (u, v) in enumerate(problem.edges):
        w = problem.weight_of(i)
        adj_lists[u].append((v, w))
        adj_lists[v].append((u, w))
    eccs = []
    for s in range(n):
        dist: list[Optional[int]] = [None] * n
        dist[s] = 0
        if problem.weighted:
            heap = [(0, s)]
            while heap:
                d, u = heapq.heappop(heap)
                if d > dist[u]:
                    continue
                for v, w in adj_lists[u]:
                    nd = d + w
                    if dist[v] is None or nd < dist[v]:
                        dist[v] = nd
                        heapq.heappush(heap, (nd, v))
        else:
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for v, _ in adj_lists[u]:
                    if dist[v] is None:
                        dist[v] = dist[u] + 1
                        queue.append(v)
        if any(d is None for d in dist):
            raise DisconnectedGraphError("graph is not connected")
        eccs.append(max(dist))
    return eccs


def _solve_diameter(problem: GraphProblem, budget: _Budget) -> GraphSolution:
    value = max(_eccentricities(problem))
    return GraphSolution(value, GroundTruth.int_scalar(value))


def _solve_radius(problem: GraphProblem, budget: _Budget) -> GraphSolution:
    value = min(_eccentricities(problem))
    return GraphSolution(value, GroundTruth.int_scalar(value))


_SOLVERS = {
    "minimum_density_subgraph": _solve_min_density_subgraph,
    "maximum_clique": _solve_clique,
    "maximum_independent_set": _solve_independent_set,
    "minimum_vertex_cover": _solve_vertex_cover,
    "maximum_induced_bipartite_subgraph": _solve_induced_bipartite,
    "maximum_acyclic_subgraph": _solve_max_acyclic_subgraph,
    "densest_k_subgraph": _solve_densest_k_subgraph,
    "balanced_cut": _solve_balanced_cut,
    "feedback_vertex_set": _solve_feedback_vertex_set,
    "longest_path": _solve_longest_path,
    "graph_diameter": _solve_diameter,
    "graph_radius": _solve_radius,
    "graph_density": _solve_graph_density,
}


def solve_exact(problem: GraphProblem, budget_steps: int = DEFAULT_BUDGET_STEPS) -> GraphSolution:
    """Exact optimum for the problem's operator. Raises SolveBudgetExceeded
    if the deterministic step budget runs out."""
    budget = _Budget(budget_steps)
    op = problem.operator
    if op == "feedback_edge_set":
        if problem.directed:
            return _solve_feedback_edge_set_directed(problem, budget)
        return _solve_feedback_edge_set_undirected(problem, budget)
    if op == "hamiltonian_path":
        return _solve_hamiltonian(problem, budget, cycle=False)
    if op == "hamiltonian_cycle":
        return _solve_hamiltonian(problem, budget, cycle=True)
    return _SOLVERS[op](problem, budget)


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------


def _as_vertex_list(value) -> Optional[list[int]]:
    if isinstance(value, (list, tuple)) and all(isinstance(v, int) for v in value):
        return list(value)
    return None


def _path_value(problem: GraphProblem, seq: Sequence[int]) -> Optional[int]:
    """Total length of a simple path, or None if it is not a valid path."""
    if len(set(seq)) != len(seq):
        return None
    wmap = problem.edge_weight_map()
    total = 0
    for a, b in zip(seq, seq[1:]):
        if (a, b) not in wmap:
            return None
        total += wmap[(a, b)]
    return total


def _cycle_ok(problem: GraphProblem, seq: Sequence[int]) -> bool:
    if len(seq) != problem.n or set(seq) != set(range(problem.n)):
        return False
    wmap = problem.edge_weight_map()
    ring = list(seq) + [seq[0]]
    return all((a, b) in wmap for a, b in zip(ring, ring[1:]))


def verify_answer(problem: GraphProblem, truth: GroundTruth, candidate) -> Verdict:
    """Grade a candidate answer: correct iff it satisfies the operator's
    validity predicate and attains the optimal objective (any co-optimal
    witness is accepted). Structural garbage is `invalid`, everything else
    that fails is `incorrect`.

    `candidate` is a GroundTruth-shaped payload (or a ParsedAnswer whose
    .value is one)."""
    value = getattr(candidate, "value", candidate)
    if isinstance(value, GroundTruth):
        value = value.value
    status = getattr(candidate, "status", None)
    if status is not None and status != "extracted":
        return Verdict("invalid", "no extracted answer")

    op = problem.operator
    shape = ANSWER_SHAPES[op]
    n = problem.n
    g = problem.to_networkx()

    if shape == "int":
        if not isinstance(value, (int, float)):
            return Verdict("invalid", "expected a number")
        truth_val = truth.value
        ok = float(value) == float(truth_val)
        return Verdict("correct" if ok else "incorrect", f"expected {truth_val}")

    if shape == "real":
        if not isinstance(value, (int, float)):
            return Verdict("invalid", "expected a number")
        ok = round_half_away(Fraction(value), 3) == round_half_away(Fraction(truth.value), 3)
        return Verdict("correct" if ok else "incorrect", f"expected {truth.value}")

    if shape == "vertex_set":
        ids = _as_vertex_list(value)
        if ids is None:
            return Verdict("invalid", "expected a list of vertex ids")
        if any(not 0 <= v < n for v in ids):
            return Verdict("invalid", "vertex id out of range")
        s = set(ids)
        opt = len(truth.value)
        sub = g.subgraph(s)
        if op == "maximum_clique":
            valid = sub.number_of_edges() == len(s) * (len(s) - 1) // 2
            return _graded(valid and len(s) == opt, valid, "not a clique", opt)
        if op == "maximum_independent_set":
            valid = sub.number_of_edges() == 0
            return _graded(valid and len(s) == opt, valid, "not independent", opt)
        if op == "minimum_vertex_cover":
            valid = all(u in s or v in s for u, v in g.edges())
            return _graded(valid and len(s) == opt, valid, "does not cover all edges", opt)
        if op == "maximum_induced_bipartite_subgraph":
            valid = nx.is_bipartite(nx.Graph(g.subgraph(s)))
            return _graded(valid and len(s) == opt, valid, "induced subgraph is not bipartite", opt)
        if op == "feedback_vertex_set":
            remaining = g.subgraph(set(range(n)) - s)
            if problem.directed:
                valid = nx.is_directed_acyclic_graph(remaining)
            else:
                valid = nx.is_forest(nx.Graph(remaining)) if remaining.number_of_nodes() else True
            return _graded(valid and len(s) == opt, valid, "removal leaves a cycle", opt)
        if op == "minimum_density_subgraph":
            if len(s) < 2:
                return Verdict("incorrect", "need at least 2 vertices")
            mask = 0
            for v in s:
                mask |= 1 << v
            if not _mask_connected(mask, problem.adjacency_masks()):
                return Verdict("incorrect", "subgraph is not connected")
            dens = round_half_away(subgraph_density(mask, problem), 3)
            best = round_half_away(subgraph_density(_mask_of(truth.value), problem), 3)
            return Verdict("correct" if dens == best else "incorrect", f"density {dens} vs optimum {best}")
        if op == "densest_k_subgraph":
            if len(s) != problem.k:
                return Verdict("incorrect", f"need exactly k={problem.k} vertices")
            dens = round_half_away(subgraph_density(_mask_of(s), problem), 3)
            best = round_half_away(subgraph_density(_mask_of(truth.value), problem), 3)
            return Verdict("correct" if dens == best else "incorrect", f"density {dens} vs optimum {best}")
        return Verdict("invalid", f"unhandled vertex-set operator {op}")

    if shape == "edge_set":
        if not isinstance(value, (list, tuple)):
            return Verdict("invalid", "expected a list of edges")
        pairs = []
        for item in value:
            if not (isinstance(item, (list, tuple)) and len(item) == 2):
                return Verdict("invalid", "edges must be [u, v] pairs")
            u, v = item
            if not (isinstance(u, int) and isinstance(v, int)):
                return Verdict("invalid", "edge endpoints must be integers")
            if not (0 <= u < n and 0 <= v < n):
                return Verdict("invalid", "edge endpoint out of range")
            pairs.append((u, v))
        present = set()
        for u, v in problem.edges:
            present.add((u, v))
            if not problem.directed:
                present.add((v, u))
        if any((u, v) not in present for u, v in pairs):
            return Verdict("invalid", "answer contains an edge not in the graph")
        norm = set((u, v) if problem.directed else (min(u, v), max(u, v)) for u, v in pairs)
        opt = len(truth.value)
        if op == "feedback_edge_set":
            h = g.copy()
            h.remove_edges_from(norm)
            if problem.directed:
                valid = nx.is_directed_acyclic_graph(h)
            else:
                valid = nx.is_forest(nx.Graph(h)) if h.number_of_nodes() else True
            return _graded(valid and len(norm) == opt, valid, "removal leaves a cycle", opt)
        if op == "maximum_acyclic_subgraph":
            h = nx.DiGraph()
            h.add_nodes_from(range(n))
            h.add_edges_from(norm)
            valid = nx.is_directed_acyclic_graph(h)
            return _graded(valid and len(norm) == opt, valid, "kept edges contain a cycle", opt)
        return Verdict("invalid", f"unhandled edge-set operator {op}")

    if shape == "partition":
        if not (
            isinstance(value, (list, tuple))
            and len(value) == 2
            and all(isinstance(part, (list, tuple)) for part in value)
        ):
            return Verdict("invalid", "expected two lists of vertex ids")
        a = _as_vertex_list(value[0])
        b = _as_vertex_list(value[1])
        if a is None or b is None:
            return Verdict("invalid", "parts must be lists of vertex ids")
        sa, sb = set(a), set(b)
        if any(not 0 <= v < n for v in sa | sb):
            return Verdict("invalid", "vertex id out of range")
        if sa & sb or (sa | sb) != set(range(n)):
            return Verdict("incorrect", "parts must partition all vertices")
        if abs(len(sa) - len(sb)) > 1:
            return Verdict("incorrect", "part sizes differ by more than one")
        crossing = sum(1 for u, v in g.edges() if (u in sa) != (v in sa))
        ta, tb = truth.value
        opt = sum(1 for u, v in g.edges() if (u in set(ta)) != (v in set(ta)))
        ok = crossing == opt
        return Verdict("correct" if ok else "incorrect", f"crossing {crossing} vs optimum {opt}")

    if shape in ("node_sequence", "node_sequence_or_none"):
        if value is None or value == "none":
            value = []
        ids = _as_vertex_list(value)
        if ids is None:
            return Verdict("invalid", "expected a list of vertex ids")
        if any(not 0 <= v < n for v in ids):
            return Verdict("invalid", "vertex id out of range")
        if op == "longest_path":
            if not ids:
                return Verdict("incorrect", "empty path")
            val = _path_value(problem, ids)
            if val is None:
                return Verdict("incorrect", "not a simple path in the graph")
            opt = _path_value(problem, truth.value)
            return Verdict("correct" if val == opt else "incorrect", f"length {val} vs optimum {opt}")
        if op == "hamiltonian_path":
            exists = len(truth.value) > 0
            if not ids:
                return Verdict("correct" if not exists else "incorrect", "claimed no path exists")
            if not exists:
                return Verdict("incorrect", "no hamiltonian path exists")
            if len(ids) != n or set(ids) != set(range(n)):
                return Verdict("incorrect", "path must visit every vertex exactly once")
            ok = _path_value(problem, ids) is not None
            return Verdict("correct" if ok else "incorrect", "consecutive vertices must be adjacent")
        if op == "hamiltonian_cycle":
            exists = len(truth.value) > 0
            if not ids:
                return Verdict("correct" if not exists else "incorrect", "claimed no cycle exists")
            if not exists:
                return Verdict("incorrect", "no hamiltonian cycle exists")
            ok = _cycle_ok(problem, ids)
            return Verdict("correct" if ok else "incorrect", "not a hamiltonian cycle")
        return Verdict("invalid", f"unhandled sequence operator {op}")

    return Verdict("invalid", f"unhandled shape {shape}")


def _mask_of(ids) -> int:
    mask = 0
    for v in ids:
        mask |= 1 << v
    return mask


def _graded(correct: bool, valid: bool, invalid_reason: str, opt: int) -> Verdict:
    if correct:
        return Verdict("correct")
    if not valid:
        return Verdict("incorrect", invalid_reason)
    return Verdict("incorrect", f"valid but not optimal (optimum {opt})")


# ---------------------------------------------------------------------------
# Prompt rendering
# ---------------------------------------------------------------------------

_TASK_SENTENCES = {
    "minimum_density_subgraph": (
        "Find a minimum density subgraph of the {kind} below. Among all connected "
        "induced subgraphs with at least 2 vertices, find a vertex set S minimizing "
        "the density 2*{wsum}/(|S|*(|S|-1)). If several subgraphs achieve the minimum "
        "density, return any one of them."
    ),
    "maximum_clique": (
        "Find a maximum clique of the {kind} below: the largest set of vertices that "
        "are all pairwise connected by edges. If multiple maximum cliques exist, "
        "return any one of them."
    ),
    "maximum_independent_set": (
        "Find the maximum independent set of the {kind} below. Find the largest set "
        "of vertices with no edges between them. If multiple maximum independent sets "
        "exist, return any one of them."
    ),
    "minimum_vertex_cover": (
        "Find a minimum vertex cover of the {kind} below: the smallest set of "
        "vertices such that every edge has at least one endpoint in the set. If "
        "multiple minimum vertex covers exist, return any one of them."
    ),
    "maximum_induced_bipartite_subgraph": (
        "Find a maximum induced bipartite subgraph of the {kind} below: the largest "
        "set of vertices whose induced subgraph is bipartite (two-colorable with no "
        "edge inside a color class). If multiple optimal sets exist, return any one "
        "of them."
    ),
    "maximum_acyclic_subgraph": (
        "Find a maximum acyclic subgraph of the {kind} below: the largest set of "
        "edges that contains no directed cycle. If multiple optimal edge sets exist, "
        "return any one of them."
    ),
    "densest_k_subgraph": (
        "Find a densest subgraph with exactly {k} vertices in the {kind} below: a "
        "set S of {k} vertices maximizing the density 2*{wsum}/(|S|*(|S|-1)). If "
        "several sets achieve the maximum density, return any one of them."
    ),
    "balanced_cut": (
        "Find a balanced cut of the {kind} below: split all vertices into two parts "
        "whose sizes differ by at most one, minimizing the number of edges crossing "
        "between the parts. If multiple balanced cuts are optimal, return any one of "
        "them."
    ),
    "feedback_vertex_set": (
        "Find a minimum feedback vertex set of the {kind} below: the smallest set of "
        "vertices whose removal leaves a graph with no {cyclekind}. If multiple "
        "optimal sets exist, return any one of them."
    ),
    "feedback_edge_set": (
        "Find a minimum feedback edge set of the {kind} below: the smallest set of "
        "edges whose removal leaves a graph with no {cyclekind}. If multiple optimal "
        "sets exist, return any one of them."
    ),
    "longest_path": (
        "Find a longest path in the {kind} below: a simple path (no repeated "
        "vertices) with the maximum {pathobj}. If multiple longest paths exist, "
        "return any one of them."
    ),
    "hamiltonian_path": (
        "Find a Hamiltonian path in the {kind} below: a path that visits every "
        "vertex exactly once. If multiple Hamiltonian paths exist, return any one of "
        "them."
    ),
    "hamiltonian_cycle": (
        "Find a Hamiltonian cycle in the {kind} below: a cycle that visits every "
        "vertex exactly once and returns to its starting vertex. If multiple "
        "Hamiltonian cycles exist, return any one of them."
    ),
    "graph_diameter": (
        "Compute the diameter of the {kind} below: the greatest shortest-path "
        "distance{wnote} between any two vertices."
    ),
    "graph_radius": (
        "Compute the radius of the {kind} below: the smallest value, over all "
        "vertices v, of the greatest shortest-path distance{wnote} from v to any "
        "other vertex."
    ),
    "graph_density": (
        "Compute the density of the {kind} below: {densdef}. Round your answer to "
        "three decimal places."
    ),
}

_ANSWER_FORMATS = {
    "vertex_set": 'Give your final answer as a JSON object of the form {"answer": [v1, v2, ...]} listing the chosen vertices.',
    "edge_set": 'Give your final answer as a JSON object of the form {"answer": [[u1, v1], [u2, v2], ...]} listing the chosen edges.',
    "partition": 'Give your final answer as a JSON object of the form {"answer": [[...], [...]]} giving the two parts.',
    "node_sequence": 'Give your final answer as a JSON object of the form {"answer": [v1, v2, ...]} listing the vertices in order.',
    "node_sequence_or_none": (
        'Give your final answer as a JSON object of the form {"answer": [v1, v2, ...]} '
        'listing the vertices in order, or {"answer": "none"} if none exists.'
    ),
    "int": 'Give your final answer as a JSON object of the form {"answer": N}.',
    "real": 'Give your final answer as a JSON object of the form {"answer": X} with X rounded to three decimal places.',
}


def render_graph_prompt(problem: GraphProblem) -> str:
    kind = ("directed " if problem.directed else "undirected ") + "graph"
    kind += f" with {problem.n} nodes"
    if problem.weighted:
        kind = kind.replace("graph", "weighted graph")
    wsum = "(total edge weight inside S)" if problem.weighted else "(number of edges inside S)"
    cyclekind = "directed cycle" if problem.directed else "cycle"
    pathobj = "total edge weight" if problem.weighted else "number of edges"
    wnote = " (sum of edge weights along the path)" if problem.weighted else ""
    if problem.directed:
        densdef = "the number of edges divided by n*(n-1), where n is the number of nodes"
    else:
        densdef = "twice the number of edges divided by n*(n-1), where n is the number of nodes"
    task = _TASK_SENTENCES[problem.operator].format(
        kind=kind,
        k=problem.k,
        wsum=wsum,
        cyclekind=cyclekind,
        pathobj=pathobj,
        wnote=wnote,
        densdef=densdef,
    )
    nodes = "[" + ", ".join(str(v) for v in range(problem.n)) + "]"
    if problem.weighted:
        edges = "[" + ", ".join(
            f"({u}, {v}, {problem.weight_of(i)})" for i, (u, v) in enumerate(problem.edges)
        ) + "]"
        edge_label = "Edges (u, v, weight)"
    else:
        edges = "[" + ", ".join(f"({u}, {v})" for u, v in problem.edges) + "]"
        edge_label = "Edges"
    lines = [
        task,
        f"Graph: Nodes: {nodes}; {edge_label}: {edges}.",
        _ANSWER_FORMATS[ANSWER_SHAPES[problem.operator]],
    ]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


@dataclass
class GraphConfig:
    count: int
    node_bounds: tuple[int, int] = (5, 25)
    edge_density_bounds: tuple[float, float] = (0.15, 0.5)
    operator_whitelist: Optional[Sequence[str]] = None
    directed_fraction: float = 0.2
    weighted_fraction: float = 0.25
    seed: int = 0
    budget_steps: int = DEFAULT_BUDGET_STEPS
    max_attempts_per_instance: int = 10_000

    def validate(self) -> None:
        lo, hi = self.node_bounds
        if not (5 <= lo <= hi <= 25):
            raise GenerationError(f"node_bounds must lie within [5, 25]: {self.node_bounds}")
        dlo, dhi = self.edge_density_bounds
        if not (0.0 <= dlo <= dhi <= 1.0):
            raise GenerationError(f"bad edge_density_bounds: {self.edge_density_bounds}")
        if self.operator_whitelist is not None:
            unknown = [op for op in self.operator_whitelist if op not in OPERATORS]
            if unknown:
                raise GenerationError(f"unknown operators in whitelist: {unknown}")
            if not self.operator_whitelist:
                raise GenerationError("operator whitelist is empty")


def _draw_graph(rng: Rng, config: GraphConfig, op: str) -> Optional[GraphProblem]:
    if op in _REQUIRES_DIRECTED:
        directed = True
    elif op in _ALLOWS_DIRECTED:
        directed = rng.random() < config.directed_fraction
    else:
        directed = False
    weighted = op in _ALLOWS_WEIGHTED and rng.random() < config.weighted_fraction

    cap = _NODE_CAPS[op]
    if directed and op in _DIRECTED_NODE_CAPS:
        cap = _DIRECTED_NODE_CAPS[op]
    lo, hi = config.node_bounds
    hi = min(hi, cap)
    if lo > hi:
        return None
    n = rng.randint(lo, hi)
    dlo, dhi = config.edge_density_bounds
    p = dlo + rng.random() * (dhi - dlo)

    edges: list[tuple[int, int]] = []
    if directed:
        for u in range(n):
            for v in range(n):
                if u != v and rng.random() < p:
                    edges.append((u, v))
    else:
        for u in range(n):
            for v in range(u + 1, n):
                if rng.random() < p:
                    edges.append((u, v))

    weights = tuple(rng.randint(1, MAX_WEIGHT) for _ in edges) if weighted else None
    k = rng.randint(3, n - 1) if op == "densest_k_subgraph" else None

    try:
        problem = GraphProblem(n, tuple(edges), directed, op, weights, k)
    except ValueError:
        return None

    if op in _REQUIRES_CONNECTED or op == "minimum_density_subgraph":
        if not edges:
            return None
    if op in _REQUIRES_CONNECTED:
        if not _mask_connected((1 << n) - 1, problem.adjacency_masks()):
            return None
    if op == "densest_k_subgraph" and not edges:
        return None
    return problem


def generate_graphs(config: GraphConfig) -> list[ProblemInstance]:
    """Generate `config.count` unique graph instances with exact truths."""
    config.validate()
    rng = Rng(config.seed)
    ops = tuple(config.operator_whitelist) if config.operator_whitelist else OPERATORS
    instances: list[ProblemInstance] = []
    seen: set[str] = set()
    attempts = 0
    budget_failures = 0
    for ordinal in range(config.count):
        placed = False
        for _ in range(config.max_attempts_per_instance):
            attempts += 1
            op = ops[rng.randint(0, len(ops) - 1)]
            problem = _draw_graph(rng, config, op)
            if problem is None:
                continue
            key = json.dumps(problem.to_payload(), sort_keys=True)
            if key in seen:
                continue
            try:
                solution = solve_exact(problem, config.budget_steps)
            except SolveBudgetExceeded:
                budget_failures += 1
                if attempts >= 50 and budget_failures * 2 > attempts:
                    raise GenerationError(
                        "more than half of all solve attempts exceeded the budget; "
                        "use smaller node_bounds or lower edge density"
                    )
                continue
            seen.add(key)
            instances.append(
                ProblemInstance(
                    id=f"graph-{config.seed}-{ordinal}",
                    family="graph",
                    prompt=render_graph_prompt(problem),
                    spec=problem.to_payload(),
                    truth=solution.truth,
                    complexity={
                        "n_nodes": problem.n,
                        "n_edges": problem.m,
                        "directed": problem.directed,
                        "weighted": problem.weighted,
                    },
                    seed=config.seed,
                )
            )
            placed = True
            break
        if not placed:
            raise GenerationError(
                f"exhausted {config.max_attempts_per_instance} attempts at instance {ordinal}"
            )
    return instances
