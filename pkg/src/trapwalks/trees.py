"""Finite ordered rooted trees: search-depth codec, reduced subtrees, distances.

Vertex ids are assigned in depth-first discovery order, which makes every
encoding deterministic and lets children be recovered by sorting ids.  All
values are immutable after construction.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels


class OrderedTree:
    """Ordered rooted tree on vertices 0..n-1 (root 0, ids in DFS order).

    `slots` optionally records, for trees embedded in the binary substrate,
    which child slots each vertex occupies (bit 1 = first slot, bit 2 =
    second slot); it is None for trees with no such embedding.
    """

    __slots__ = ("parent", "child_ptr", "child_arr", "depth", "slots")

    def __init__(self, parent, child_ptr, child_arr, depth, slots=None):
        self.parent = parent
        self.child_ptr = child_ptr
        self.child_arr = child_arr
        self.depth = depth
        self.slots = slots
        for arr in (parent, child_ptr, child_arr, depth):
            arr.setflags(write=False)

    @property
    def n(self):
        return self.parent.shape[0]

    def children(self, v):
        return self.child_arr[self.child_ptr[v] : self.child_ptr[v + 1]]

    def n_children(self, v):
        return int(self.child_ptr[v + 1] - self.child_ptr[v])

    @classmethod
    def from_offspring(cls, counts, slots=None):
        """Build from preorder offspring counts (counts[i] = children of vertex i)."""
        counts = np.ascontiguousarray(counts, dtype=np.int64)
        n = counts.shape[0]
        if n == 0 or counts.sum() != n - 1:
            raise ValueError("offspring counts must describe a single tree")
        parent = _kernels.tree_from_offspring(counts)
        return cls._from_parent_counts(parent, counts, slots)

    @classmethod
    def from_parent(cls, parent, slots=None):
        """Build from a parent array with parent[0] == -1 and parent[i] < i."""
        parent = np.ascontiguousarray(parent, dtype=np.int32)
        if parent.shape[0] == 0 or parent[0] != -1:
            raise ValueError("parent[0] must be -1")
        if parent.shape[0] > 1 and not np.all(parent[1:] < np.arange(1, parent.shape[0])):
            raise ValueError("vertex ids must be in depth-first discovery order")
        counts = np.zeros(parent.shape[0], dtype=np.int64)
        np.add.at(counts, parent[1:], 1)
        return cls._from_parent_counts(parent, counts, slots)

    @classmethod
    def _from_parent_counts(cls, parent, counts, slots):
        n = parent.shape[0]
        child_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=child_ptr[1:])
        # ids ascend within each sibling group, which is their birth order
        order = np.argsort(parent[1:], kind="stable").astype(np.int64) + 1
        child_arr = np.empty(n - 1 if n else 0, dtype=np.int32)
        child_arr[:] = order
        depth = _kernels.vertex_depths(parent)
        if slots is not None:
            slots = np.ascontiguousarray(slots, dtype=np.uint8)
        return cls(parent, child_ptr, child_arr, depth, slots)

    def adjacency(self):
        """CSR neighbour lists (parent first, then children in order)."""
        n = self.n
        has_p = (self.parent >= 0).astype(np.int64)
        counts = np.diff(self.child_ptr)
        deg = counts + has_p
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        nbrs = np.empty(indptr[-1], dtype=np.int32)
        pos = indptr[:-1].copy()
        mask = self.parent >= 0
        nbrs[pos[mask]] = self.parent[mask]
        pos = pos + has_p
        if n > 1:
            intra = np.arange(n - 1, dtype=np.int64) - np.repeat(self.child_ptr[:-1], counts)
            nbrs[np.repeat(pos, counts) + intra] = self.child_arr
        return indptr, nbrs

    def to_parens(self):
        """Canonical newline-free balanced-parenthesis serialization."""
        curve = search_depth(self)
        out = []
        level = 0
        for v in curve.values[1:-1]:
            if v > level:
                out.append("(")
            elif v < level:
                out.append(")")
            level = v
        return "(" + "".join(out) + ")"

    def __eq__(self, other):
        if not isinstance(other, OrderedTree):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.parent, other.parent))

    def __hash__(self):
        return hash((self.n, self.parent.tobytes()))

    def __repr__(self):
        return f"OrderedTree(n={self.n})"


def tree_from_parens(text):
    """Inverse of OrderedTree.to_parens."""
    text = text.strip()
    if not text or text[0] != "(" or text[-1] != ")":
        raise ValueError("not a balanced-parenthesis tree encoding")
    counts = []
    stack = []
    for ch in text:
        if ch == "(":
            if stack:
                counts[stack[-1]] += 1
            stack.append(len(counts))
            counts.append(0)
        elif ch == ")":
            if not stack:
                raise ValueError("unbalanced parentheses")
            stack.pop()
        else:
            raise ValueError(f"unexpected character {ch!r}")
    if stack:
        raise ValueError("unbalanced parentheses")
    return OrderedTree.from_offspring(np.array(counts, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class SearchDepthCurve:
    """Depths of the depth-first walk at grid i/2n, i = 0..2n (endpoints 0)."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)


def search_depth(tree: OrderedTree) -> SearchDepthCurve:
    values = _kernels.search_depth_curve(tree.child_ptr, tree.child_arr, tree.depth)
    return SearchDepthCurve(tree.n, values)


def tree_from_search_depth(curve) -> OrderedTree:
    """Decode a search-depth curve; rejects curves violating the codec invariants."""
    values = curve.values if isinstance(curve, SearchDepthCurve) else np.asarray(curve, dtype=np.int32)
    values = np.ascontiguousarray(values, dtype=np.int64)
    ln = values.shape[0]
    if ln < 3 or ln % 2 == 0:
        raise ValueError("curve must have 2n+1 values")
    n = (ln - 1) // 2
    if values[0] != 0 or values[ln - 1] != 0 or values[1] != 0:
        raise ValueError("curve endpoints must be 0 and the root is visited first")
    counts = _kernels.offspring_from_curve(values)
    if counts.shape[0] != n:
        raise ValueError("curve violates the unit-step invariant")
    return OrderedTree.from_offspring(counts)


@dataclass(frozen=True, eq=False)
class ReducedSubtreeIndex:
    """Union of root-to-anchor paths plus the nearest-member projection."""

    member: np.ndarray
    projection: np.ndarray

    def __post_init__(self):
        self.member.setflags(write=False)
        self.projection.setflags(write=False)


def reduce_tree(tree: OrderedTree, anchors) -> ReducedSubtreeIndex:
    """Reduced subtree spanned by the anchors: r(T, A) and the projection onto it."""
    anchors = np.asarray(list(anchors) if not isinstance(anchors, np.ndarray) else anchors, dtype=np.int64)
    if anchors.size == 0:
        raise ValueError("anchor set must be nonempty")
    if anchors.min() < 0 or anchors.max() >= tree.n:
        raise ValueError("anchor out of range")
    member = np.zeros(tree.n, dtype=bool)
    member[anchors] = True
    member[0] = True
    # ids are in discovery order, so one backward sweep marks all ancestors
    for v in range(tree.n - 1, 0, -1):
        if member[v]:
            member[tree.parent[v]] = True
    projection = np.empty(tree.n, dtype=np.int32)
    projection[0] = 0
    for v in range(1, tree.n):
        projection[v] = v if member[v] else projection[tree.parent[v]]
    return ReducedSubtreeIndex(member, projection)


def graph_distance(tree: OrderedTree, u, v) -> int:
    """Path-length metric on the tree."""
    u = int(u)
    v = int(v)
    if not (0 <= u < tree.n and 0 <= v < tree.n):
        raise ValueError("vertex id out of range")
    du, dv = int(tree.depth[u]), int(tree.depth[v])
    dist = 0
    while du > dv:
        u = tree.parent[u]
        du -= 1
        dist += 1
    while dv > du:
        v = tree.parent[v]
        dv -= 1
        dist += 1
    while u != v:
        u = tree.parent[u]
        v = tree.parent[v]
        dist += 2
    return dist
