"""Palm trees, path decomposition, planarity testing and planar extraction.

``dfs_palm`` orients a connected graph from vertex 1 into tree arcs and back
edges, numbering vertices by DFS discovery.  ``find_paths`` emits the initial
cycle and the remaining paths (tree arcs before back edges at each vertex,
each class ordered by the low-point function phi).  ``is_planar`` runs a
left-right planarity test on the phi-sorted palm tree.  ``embed_or_split``
walks the paths with the side-admissibility check; when a path fits on neither
it branches into candidates that drop either the path's back edge or the
blocking back edges of one side, rejecting candidates that lose a protected
edge and validating every emitted graph with is_planar.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .netcore import RdnetError


class DisconnectedInput(RdnetError):
    """Palm-tree construction needs a connected graph."""


class NoCandidate(RdnetError):
    """Every split branch was rejected."""


def _canonical_pairs(edges):
    out = set()
    for u, v in edges:
        if u == v:
            raise ValueError(f"self-loop at {u}")
        out.add((min(u, v), max(u, v)))
    return out


# ---------------------------------------------------------------------------
# Palm tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PalmTree:
    """DFS orientation with discovery numbering, low points and phi values.

    Vertices inside the palm tree are DFS numbers 1..n; ``order[k-1]`` gives
    the original label of DFS vertex k.
    """

    n: int
    order: tuple
    tree_arcs: tuple
    back_edges: tuple
    low1: tuple
    low2: tuple
    phi: dict
    children: dict
    back_from: dict

    def original_pair(self, i: int, j: int) -> tuple:
        a, b = self.order[i - 1], self.order[j - 1]
        return (min(a, b), max(a, b))


def dfs_palm(n: int, edges) -> PalmTree:
    """Build the palm tree of a connected graph rooted at vertex 1."""
    pairs = _canonical_pairs(edges)
    adj = {v: [] for v in range(1, n + 1)}
    for u, v in pairs:
        adj[u].append(v)
        adj[v].append(u)
    for v in adj:
        adj[v].sort()

    number = {}
    order = []
    parent = {}
    stack = [(1, iter(adj[1]))]
    number[1] = 1
    order.append(1)
    while stack:
        v, it = stack[-1]
        advanced = False
        for w in it:
            if w not in number:
                number[w] = len(number) + 1
                order.append(w)
                parent[w] = v
                stack.append((w, iter(adj[w])))
                advanced = True
                break
        if not advanced:
            stack.pop()
    if len(number) < n:
        raise DisconnectedInput("graph is not connected")

    tree_arcs = []
    back_edges = []
    for u, v in pairs:
        i, j = number[u], number[v]
        if parent.get(u) == v or parent.get(v) == u:
            tree_arcs.append((min(i, j), max(i, j)))
        else:
            back_edges.append((max(i, j), min(i, j)))
    tree_arcs.sort()
    back_edges.sort()

    children = {v: [] for v in range(1, n + 1)}
    for i, j in tree_arcs:
        children[i].append(j)
    back_from = {v: [] for v in range(1, n + 1)}
    for i, j in back_edges:
        back_from[i].append(j)
    for v in back_from:
        back_from[v].sort()

    # Reachable-vertex sets give the exact set-difference semantics of the
    # second low point.
    reach = {v: {v} for v in range(1, n + 1)}
    for v in range(n, 0, -1):
        reach[v].update(back_from[v])
        for c in children[v]:
            reach[v].update(reach[c])
    low1 = [0] * (n + 1)
    low2 = [0] * (n + 1)
    for v in range(1, n + 1):
        lo = min(reach[v])
        rest = reach[v] - {lo}
        low1[v] = lo
        low2[v] = min(rest) if rest else v

    phi = {}
    for i, j in tree_arcs:
        phi[(i, j)] = 2 * low1[j] if low2[j] >= i else 2 * low1[j] + 1
    for i, j in back_edges:
        phi[(i, j)] = 2 * j

    return PalmTree(
        n=n,
        order=tuple(order),
        tree_arcs=tuple(tree_arcs),
        back_edges=tuple(back_edges),
        low1=tuple(low1),
        low2=tuple(low2),
        phi=phi,
        children={v: tuple(children[v]) for v in children},
        back_from={v: tuple(back_from[v]) for v in back_from},
    )


# ---------------------------------------------------------------------------
# Path decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Path:
    """A tree path ending in exactly one back edge (DFS numbering)."""

    vertices: tuple
    segment: int

    @property
    def start(self) -> int:
        return self.vertices[0]

    @property
    def target(self) -> int:
        return self.vertices[-1]

    @property
    def back_edge(self) -> tuple:
        return (self.vertices[-2], self.vertices[-1])

    def edge_count(self) -> int:
        return len(self.vertices) - 1


@dataclass(frozen=True)
class PathDecomposition:
    cycle: tuple
    paths: tuple
    segments: tuple


def find_paths(palm: PalmTree) -> PathDecomposition:
    """Emit the initial cycle and the remaining paths of the palm tree.

    Adjacency order at every vertex: tree arcs first, then back edges, each
    class sorted by phi.  The first emitted path is the cycle; every later
    path starts a new segment when it leaves a cycle vertex, otherwise it
    belongs to the segment that owns its start vertex.
    """
    adj2 = {}
    for v in range(1, palm.n + 1):
        tree = sorted(palm.children[v], key=lambda w: (palm.phi[(v, w)], w))
        back = sorted(palm.back_from[v], key=lambda w: (palm.phi[(v, w)], w))
        adj2[v] = [(w, True) for w in tree] + [(w, False) for w in back]

    raw_paths = []
    current = []

    def walk(v):
        for w, is_tree in adj2[v]:
            if not current:
                current.append(v)
            current.append(w)
            if is_tree:
                walk(w)
                if current and current[-1] == w:
                    # dangling tree path (bridge below); discard it
                    current.clear()
            else:
                raw_paths.append(tuple(current))
                current.clear()

    walk(1)
    if not raw_paths:
        return PathDecomposition(cycle=(), paths=(), segments=())

    cycle = raw_paths[0]
    cycle_set = set(cycle)
    seg_of_vertex = {}
    seg_paths = []
    paths = []
    for verts in raw_paths[1:]:
        start = verts[0]
        if start in cycle_set or start not in seg_of_vertex:
            seg_id = len(seg_paths)
            seg_paths.append([])
        else:
            seg_id = seg_of_vertex[start]
        for v in verts[1:-1]:
            seg_of_vertex[v] = seg_id
        seg_paths[seg_id].append(len(paths))
        paths.append(Path(vertices=verts, segment=seg_id))
    return PathDecomposition(
        cycle=cycle,
        paths=tuple(paths),
        segments=tuple(tuple(idx) for idx in seg_paths),
    )


# ---------------------------------------------------------------------------
# Embedding state and the side-admissibility rule
# ---------------------------------------------------------------------------

@dataclass
class EmbeddingState:
    """Back edges embedded so far, kept per side as (source, target, path)."""

    left: list = field(default_factory=list)
    right: list = field(default_factory=list)

    def side(self, name: str) -> list:
        return self.left if name == "left" else self.right


def admissible_side(state: EmbeddingState, path: Path, side: str) -> bool:
    """A path i1 -> j1 fits on a side iff no embedded back edge there
    enters a vertex k with j1 < k < i1 (strict on both ends)."""
    i1, j1 = path.start, path.target
    return all(not (j1 < target < i1) for _, target, _ in state.side(side))


def _blocking(state: EmbeddingState, path: Path, side: str) -> list:
    i1, j1 = path.start, path.target
    return [entry for entry in state.side(side) if j1 < entry[1] < i1]


# ---------------------------------------------------------------------------
# Left-right planarity test (palm tree + phi ordering)
# ---------------------------------------------------------------------------

class _Interval:
    __slots__ = ("low", "high")

    def __init__(self, low=None, high=None):
        self.low = low
        self.high = high

    def empty(self):
        return self.low is None and self.high is None


class _ConflictPair:
    __slots__ = ("L", "R")

    def __init__(self, left=None, right=None):
        self.L = left if left is not None else _Interval()
        self.R = right if right is not None else _Interval()

    def swap(self):
        self.L, self.R = self.R, self.L


class _LRPlanarity:
    """Boolean left-right planarity check."""

    def __init__(self, n, pairs):
        self.n = n
        self.adj = {v: [] for v in range(1, n + 1)}
        for u, v in pairs:
            self.adj[u].append(v)
            self.adj[v].append(u)
        self.height = {v: None for v in range(1, n + 1)}
        self.parent_edge = {v: None for v in range(1, n + 1)}
        self.oriented = set()
        self.lowpt = {}
        self.lowpt2 = {}
        self.nesting = {}
        self.ref = {}
        self.side = {}
        self.S = []
        self.stack_bottom = {}
        self.lowpt_edge = {}
        self.ordered_adj = {}

    def run(self) -> bool:
        roots = []
        for v in range(1, self.n + 1):
            if self.height[v] is None:
                self.height[v] = 0
                roots.append(v)
                self._dfs_orient(v)
        for v in range(1, self.n + 1):
            self.ordered_adj[v] = sorted(
                (w for w in self.adj[v] if (v, w) in self.oriented),
                key=lambda w: self.nesting[(v, w)],
            )
        for v in roots:
            if not self._dfs_test(v):
                return False
        return True

    def _dfs_orient(self, v):
        e = self.parent_edge[v]
        for w in self.adj[v]:
            if (v, w) in self.oriented or (w, v) in self.oriented:
                continue
            ei = (v, w)
            self.oriented.add(ei)
            self.lowpt[ei] = self.height[v]
            self.lowpt2[ei] = self.height[v]
            if self.height[w] is None:
                self.parent_edge[w] = ei
                self.height[w] = self.height[v] + 1
                self._dfs_orient(w)
            else:
                self.lowpt[ei] = self.height[w]
            self.nesting[ei] = 2 * self.lowpt[ei]
            if self.lowpt2[ei] < self.height[v]:
                self.nesting[ei] += 1
            if e is not None:
                if self.lowpt[ei] < self.lowpt[e]:
                    self.lowpt2[e] = min(self.lowpt[e], self.lowpt2[ei])
                    self.lowpt[e] = self.lowpt[ei]
                elif self.lowpt[ei] > self.lowpt[e]:
                    self.lowpt2[e] = min(self.lowpt2[e], self.lowpt[ei])
                else:
                    self.lowpt2[e] = min(self.lowpt2[e], self.lowpt2[ei])

    def _dfs_test(self, v):
        e = self.parent_edge[v]
        for w in self.ordered_adj[v]:
            ei = (v, w)
            self.stack_bottom[ei] = self.S[-1] if self.S else None
            if ei == self.parent_edge[w]:
                if not self._dfs_test(w):
                    return False
            else:
                self.lowpt_edge[ei] = ei
                self.S.append(_ConflictPair(right=_Interval(ei, ei)))
            if self.lowpt[ei] < self.height[v]:
                if w == self.ordered_adj[v][0]:
                    self.lowpt_edge[e] = self.lowpt_edge[ei]
                else:
                    if not self._add_constraints(ei, e):
                        return False
        if e is not None:
            u = e[0]
            self._trim_back_edges(u)
            if self.lowpt[e] < self.height[u]:
                top = self.S[-1]
                hl = top.L.high
                hr = top.R.high
                if hl is not None and (hr is None or self.lowpt[hl] > self.lowpt[hr]):
                    self.ref[e] = hl
                else:
                    self.ref[e] = hr
        return True

    def _conflicting(self, interval, b):
        return (not interval.empty()) and self.lowpt[interval.high] > self.lowpt[b]

    def _add_constraints(self, ei, e):
        P = _ConflictPair()
        while True:
            Q = self.S.pop()
            if not Q.L.empty():
                Q.swap()
            if not Q.L.empty():
                return False
            if Q.R.low is not None and self.lowpt[Q.R.low] > self.lowpt[e]:
                if P.R.empty():
                    P.R.high = Q.R.high
                else:
                    self.ref[P.R.low] = Q.R.high
                P.R.low = Q.R.low
            else:
                self.ref[Q.R.low] = self.lowpt_edge[e]
            if (self.S[-1] if self.S else None) is self.stack_bottom[ei]:
                break
        while self._conflicting(self.S[-1].L, ei) or self._conflicting(self.S[-1].R, ei):
            Q = self.S.pop()
            if self._conflicting(Q.R, ei):
                Q.swap()
            if self._conflicting(Q.R, ei):
                return False
            self.ref[P.R.low] = Q.R.high
            if Q.R.low is not None:
                P.R.low = Q.R.low
            if P.L.empty():
                P.L.high = Q.L.high
            else:
                self.ref[P.L.low] = Q.L.high
            P.L.low = Q.L.low
        if not (P.L.empty() and P.R.empty()):
            self.S.append(P)
        return True

    def _lowest(self, P):
        if P.L.empty():
            return self.lowpt[P.R.low]
        if P.R.empty():
            return self.lowpt[P.L.low]
        return min(self.lowpt[P.L.low], self.lowpt[P.R.low])

    def _trim_back_edges(self, u):
        while self.S and self._lowest(self.S[-1]) == self.height[u]:
            P = self.S.pop()
            if P.L.low is not None:
                self.side[P.L.low] = -1
        if self.S:
            P = self.S.pop()
            while P.L.high is not None and P.L.high[1] == u:
                P.L.high = self.ref.get(P.L.high)
            if P.L.high is None and P.L.low is not None:
                self.ref[P.L.low] = P.R.low
                self.side[P.L.low] = -1
                P.L.low = None
            while P.R.high is not None and P.R.high[1] == u:
                P.R.high = self.ref.get(P.R.high)
            if P.R.high is None and P.R.low is not None:
                self.ref[P.R.low] = P.L.low
                self.side[P.R.low] = -1
                P.R.low = None
            self.S.append(P)


def is_planar(n: int, edges) -> bool:
    """Planarity of a simple graph on vertices 1..n (components allowed)."""
    pairs = sorted(_canonical_pairs(edges))
    if n >= 3 and len(pairs) > 3 * n - 6:
        return False
    return _LRPlanarity(n, pairs).run()


# ---------------------------------------------------------------------------
# Candidate extraction (modified Auslander-Parter-Goldstein)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Conflict:
    """A path that fits on neither side, with the per-side blocking edges."""

    path_edge: tuple
    left_blocking: tuple
    right_blocking: tuple


def _walk_embedding(n, pairs):
    """First-fit side-admissibility walk; returns the first Conflict or None.

    Blocking sets are reported as original-label edges so the caller can drop
    them from the graph.
    """
    palm = dfs_palm(n, pairs)
    decomp = find_paths(palm)
    state = EmbeddingState()
    for idx, path in enumerate(decomp.paths):
        if admissible_side(state, path, "left"):
            state.left.append((path.start, path.target, idx))
        elif admissible_side(state, path, "right"):
            state.right.append((path.start, path.target, idx))
        else:
            def to_orig(entries):
                out = []
                for src, tgt, p_idx in entries:
                    be = decomp.paths[p_idx].back_edge
                    out.append(palm.original_pair(*be))
                return tuple(sorted(set(out)))

            left_block = _blocking(state, path, "left")
            right_block = _blocking(state, path, "right")
            return Conflict(
                path_edge=palm.original_pair(*path.back_edge),
                left_blocking=to_orig(left_block),
                right_blocking=to_orig(right_block),
            )
    return None


@dataclass(frozen=True)
class CandidateSet:
    """Planar graphs extracted from a (possibly non-planar) input."""

    n: int
    graphs: tuple
    dropped: tuple
    truncated: bool


def embed_or_split(n: int, edges, protected=(), cap: int = 64,
                   max_expansions: int = 4096) -> CandidateSet:
    """Extract planar candidate graphs that keep every protected edge.

    A planar input comes back as the singleton candidate set.  Otherwise the
    admissibility walk locates a conflict and branches: keep the offending path and
    drop one side's blocking back edges, or drop the path's own back edge.
    Branches missing a protected edge are rejected; all emitted candidates
    pass is_planar.  Candidates are ordered by (number of dropped edges,
    edge list) and truncated at ``cap``.
    """
    base = frozenset(_canonical_pairs(edges))
    protected = frozenset(_canonical_pairs(protected)) if protected else frozenset()
    if not protected <= base:
        raise ValueError("protected edges must be a subset of the input edges")

    results = []
    seen = set()
    queue = [base]
    expansions = 0
    truncated = False
    while queue:
        queue.sort(key=lambda s: (len(base - s), sorted(s)))
        current = queue.pop(0)
        if current in seen:
            continue
        seen.add(current)
        if not protected <= current:
            continue
        if expansions >= max_expansions or len(results) >= cap:
            truncated = True
            break
        expansions += 1
        pairs = sorted(current)
        if is_planar(n, pairs):
            results.append(current)
            continue
        conflict = _walk_embedding(n, pairs)
        if conflict is None:
            # The heuristic walk found no conflict although the graph is
            # non-planar; branch on every single back edge to stay complete.
            palm = dfs_palm(n, pairs)
            branches = [current - {palm.original_pair(i, j)}
                        for i, j in palm.back_edges]
        else:
            branches = [
                current - set(conflict.left_blocking),
                current - set(conflict.right_blocking),
                current - {conflict.path_edge},
            ]
        for branch in branches:
            if branch != current and branch not in seen:
                queue.append(branch)

    unique = sorted(set(results), key=lambda s: (len(base - s), sorted(s)))
    unique = unique[:cap]
    if not unique:
        raise NoCandidate("every branch lost a protected edge")
    return CandidateSet(
        n=n,
        graphs=tuple(tuple(sorted(s)) for s in unique),
        dropped=tuple(tuple(sorted(base - s)) for s in unique),
        truncated=truncated,
    )
