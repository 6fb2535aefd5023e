"""Continuum-tree constructions: excursion codec, reduced metric skeletons,
line breaking, branch-mass decompositions, the conditioned-tree inverse
local time sampler, and the spatially subordinated walk assemblers."""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .clusters import sample_conditioned_cluster, sample_uniform_tree
from .processes import SubordinatorPath, merge_atoms
from .rng import kernel_seed
from .trees import reduce_tree


# ---------------------------------------------------------------------------
# excursions and the tree pseudometric


@dataclass(frozen=True, eq=False)
class ExcursionGrid:
    """Nonnegative grid path with values[0] = values[m] = 0.

    interior_zeros counts grid points where positivity fails at the grid
    resolution (the continuum excursion is positive on (0, 1)).
    """

    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def grid_size(self):
        return self.values.shape[0] - 1

    @property
    def interior_zeros(self):
        return int(np.count_nonzero(self.values[1:-1] <= 0.0))


def sample_excursion(grid_size, rng) -> ExcursionGrid:
    """Normalized Brownian excursion on a uniform grid.

    Brownian bridge from Gaussian increments, rotated at its minimum
    (Vervaat construction).  The rotation point uses the exact continuum
    minimum of each grid cell (sampled from the bridge-minimum law), which
    removes the O(m^-1/2) downward bias of a grid-only minimum; endpoints
    are exactly zero.
    """
    m = int(grid_size)
    if m < 2:
        raise ValueError("grid_size must be >= 2")
    steps = rng.standard_normal(m) / math.sqrt(m)
    path = np.concatenate([[0.0], np.cumsum(steps)])
    bridge = path - path[-1] * np.arange(m + 1) / m
    a = bridge[:-1]
    b = bridge[1:]
    cell_min = 0.5 * (a + b - np.sqrt((a - b) ** 2 - (2.0 / m) * np.log(rng.random(m))))
    j = int(np.argmin(cell_min))
    offset = float(cell_min[j])
    # the excursion starts at the in-cell minimum of cell j: grid values
    # j+1, ..., m-1, 0, ..., j-1 follow (the grid point nearest the minimum
    # is dropped to keep 2 zero endpoints on an m+1 grid)
    interior = np.concatenate([bridge[j + 1 : m], bridge[:j]]) - offset
    rotated = np.empty(m + 1)
    rotated[0] = 0.0
    rotated[1:m] = interior
    rotated[m] = 0.0
    return ExcursionGrid(rotated)


def crt_pseudometric(w: ExcursionGrid, i, j):
    """d_w(s, t) = w(s) + w(t) - 2 min(w on [s, t]) at grid indices."""
    values = w.values
    i, j = int(i), int(j)
    if not (0 <= i <= w.grid_size and 0 <= j <= w.grid_size):
        raise ValueError("grid index out of range")
    lo, hi = (i, j) if i <= j else (j, i)
    return float(values[i] + values[j] - 2.0 * values[lo : hi + 1].min())


# ---------------------------------------------------------------------------
# metric skeletons


class MetricSkeleton:
    """Rooted metric tree with finitely many edges and K labeled leaves.

    Nodes are 0..n_nodes-1 with node 0 the root; parent_node[v] and
    parent_len[v] describe the edge into v.  leaves[i] is the node carrying
    leaf label i.
    """

    __slots__ = ("parent_node", "parent_len", "leaves")

    def __init__(self, parent_node, parent_len, leaves):
        self.parent_node = np.ascontiguousarray(parent_node, dtype=np.int32)
        self.parent_len = np.ascontiguousarray(parent_len, dtype=np.float64)
        self.leaves = np.ascontiguousarray(leaves, dtype=np.int32)
        if self.parent_node[0] != -1:
            raise ValueError("node 0 must be the root")
        if np.any(self.parent_len[1:] <= 0.0):
            raise ValueError("edge lengths must be positive")

    @property
    def n_nodes(self):
        return self.parent_node.shape[0]

    @property
    def k(self):
        return self.leaves.shape[0]

    @property
    def total_length(self):
        return float(self.parent_len.sum())

    def node_depth(self):
        depth = np.zeros(self.n_nodes)
        for v in range(1, self.n_nodes):
            depth[v] = depth[self.parent_node[v]] + self.parent_len[v]
        return depth

    def children_lists(self):
        out = [[] for _ in range(self.n_nodes)]
        for v in range(1, self.n_nodes):
            out[self.parent_node[v]].append(v)
        return out

    def scaled(self, factor):
        return MetricSkeleton(self.parent_node.copy(), self.parent_len * factor, self.leaves.copy())

    def shape_signature(self):
        """Canonical nested signature (leaf labels included); equal signatures
        mean equal labeled shapes."""
        children = self.children_lists()
        label = {int(node): i for i, node in enumerate(self.leaves)}

        def sig(v):
            subs = tuple(sorted(sig(c) for c in children[v]))
            return (label.get(v, -1), subs)

        return sig(0)

    def canonical_nodes(self):
        """Node ids in the deterministic order induced by the signature."""
        children = self.children_lists()
        label = {int(node): i for i, node in enumerate(self.leaves)}
        memo = {}

        def sig(v):
            if v not in memo:
                memo[v] = (label.get(v, -1), tuple(sorted(sig(c) for c in children[v])))
            return memo[v]

        order = []

        def visit(v):
            order.append(v)
            for c in sorted(children[v], key=sig):
                visit(c)

        visit(0)
        return order


def line_breaking(K, rng) -> MetricSkeleton:
    """Aldous line-breaking: cuts of an inhomogeneous Poisson process of rate t,
    each new segment glued at a uniform point of the current tree."""
    if K < 1:
        raise ValueError("K must be >= 1")
    cuts = np.sqrt(2.0 * np.cumsum(rng.exponential(1.0, size=K)))
    parent = [-1, 0]
    length = [0.0, float(cuts[0])]
    leaves = [1]
    for k in range(1, K):
        total = float(cuts[k - 1])
        u = rng.uniform(0.0, total)
        acc = 0.0
        target = None
        for v in range(1, len(parent)):
            if acc + length[v] >= u:
                target = v
                break
            acc += length[v]
        offset = u - acc
        seg = float(cuts[k] - cuts[k - 1])
        if offset <= 0.0 or offset >= length[target]:
            # attach exactly at a node (grid-measure zero): reuse the node
            at = parent[target] if offset <= 0.0 else target
            parent.append(at)
            length.append(seg)
        else:
            mid = len(parent)
            parent.append(parent[target])
            length.append(offset)
            parent[target] = mid
            length[target] = length[target] - offset
            parent.append(mid)
            length.append(seg)
        leaves.append(len(parent) - 1)
    return MetricSkeleton(np.array(parent), np.array(length), np.array(leaves))


def reduced_tree_from_excursion(w: ExcursionGrid, K, rng, max_tries=64) -> MetricSkeleton:
    """Skeleton spanned by K uniform points of the excursion's tree.

    Edge lengths reproduce the grid pseudometric exactly.  Degenerate draws
    (coincident points, a leaf sitting on another leaf's path) are
    resampled.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    values = w.values
    m = w.grid_size
    for _ in range(max_tries):
        ts = np.sort(rng.integers(1, m, size=K))
        if np.unique(ts).size < K:
            continue
        parent = [-1]
        length = [0.0]
        leaf_nodes = {}
        ok = True

        def build(group, base_h, parent_node):
            nonlocal ok
            if not ok:
                return
            if len(group) == 1:
                t = group[0]
                if values[t] <= base_h:
                    ok = False
                    return
                parent.append(parent_node)
                length.append(float(values[t] - base_h))
                leaf_nodes[t] = len(parent) - 1
                return
            lo, hi = group[0], group[-1]
            seg = values[lo : hi + 1]
            r = lo + int(np.argmin(seg))
            h = float(values[r])
            if h <= base_h or r in group:
                ok = False
                return
            parent.append(parent_node)
            length.append(h - base_h)
            node = len(parent) - 1
            left = [t for t in group if t < r]
            right = [t for t in group if t > r]
            if not left or not right:
                ok = False
                return
            build(left, h, node)
            build(right, h, node)

        ts_list = [int(t) for t in ts]
        if K == 1:
            build(ts_list, 0.0, 0)
        else:
            build(ts_list, 0.0, 0)
        if ok:
            # leaf labels in sampling order of the (sorted) points
            leaves = [leaf_nodes[t] for t in ts_list]
            return MetricSkeleton(np.array(parent), np.array(length), np.array(leaves))
    raise RuntimeError("could not sample a nondegenerate reduced tree")


# ---------------------------------------------------------------------------
# branch-mass decompositions


@dataclass(frozen=True, eq=False)
class TreeMassMeasure:
    """Atoms (edge_node, offset, mass) on a skeleton; masses sum to 1.

    edge_node is the child node of the carrying edge; offset is measured
    from the parent end and lies in [0, parent_len[edge_node]].
    """

    edge_node: np.ndarray
    offset: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        if abs(float(self.mass.sum()) - 1.0) > 1e-12:
            raise ValueError("masses must sum to 1")
        for arr in (self.edge_node, self.offset, self.mass):
            arr.setflags(write=False)

    @property
    def n_atoms(self):
        return self.mass.shape[0]


def sample_skeleton_with_masses(n, K, rng, offspring="poisson", max_tries=256):
    """Joint draw of (skeleton, hanging-branch mass measure) by the discrete route.

    A size-n conditioned tree is reduced along K uniform vertices; edge
    lengths are rescaled by n^(-1/2), hanging-branch sizes normalized to
    total mass one, and atom offsets placed at the projection points.
    Degenerate anchor draws (root anchors, nested anchors) are resampled.
    """
    sampler = sample_uniform_tree if offspring == "poisson" else sample_conditioned_cluster
    for _ in range(max_tries):
        tree = sampler(n, rng)
        anchors = rng.choice(tree.n, size=K, replace=False)
        if np.any(anchors == 0):
            continue
        idx = reduce_tree(tree, anchors)
        member = idx.member
        # nested anchors make a leaf an internal node: resample
        anchor_set = set(int(a) for a in anchors)
        nested = False
        for a in anchor_set:
            v = int(tree.parent[a])
            while v > 0:
                if v in anchor_set:
                    nested = True
                    break
                v = int(tree.parent[v])
            if nested:
                break
        if nested:
            continue
        member_ids = np.flatnonzero(member)
        mdeg = np.zeros(tree.n, dtype=np.int64)
        for v in member_ids:
            if v != 0:
                mdeg[tree.parent[v]] += 1
        is_node = member.copy()
        is_node[:] = False
        is_node[0] = True
        for a in anchor_set:
            is_node[a] = True
        for v in member_ids:
            if mdeg[v] >= 2:
                is_node[v] = True
        node_of = {}
        parent_node = [-1]
        parent_edges = [0]
        node_of[0] = 0
        # vertices in discovery order: parents precede children
        edge_len_vertices = [0.0]
        up_node = np.full(tree.n, -1, dtype=np.int64)  # nearest node at or above
        steps_from_node = np.zeros(tree.n, dtype=np.int64)
        up_node[0] = 0
        for v in member_ids:
            if v == 0:
                continue
            p = int(tree.parent[v])
            if is_node[v]:
                node_of[v] = len(parent_node)
                parent_node.append(int(up_node[p] if not is_node[p] else node_of[p]))
                edge_len_vertices.append(float(steps_from_node[p] + 1))
                up_node[v] = node_of[v]
                steps_from_node[v] = 0
            else:
                up_node[v] = up_node[p] if not is_node[p] else node_of[p]
                steps_from_node[v] = steps_from_node[p] + 1
        scale = 1.0 / math.sqrt(n)
        skeleton = MetricSkeleton(
            np.array(parent_node),
            np.array(edge_len_vertices) * scale,
            np.array([node_of[int(a)] for a in anchors]),
        )
        # hanging masses per member vertex
        counts = np.zeros(tree.n, dtype=np.int64)
        proj = idx.projection
        nonmember = ~member
        np.add.at(counts, proj[nonmember], 1)
        total = int(counts.sum())
        if total == 0:
            continue
        # atom position of member vertex v: on the edge into the next node
        # below v, at offset steps_from_node (node vertices sit at offset 0 of
        # their own edge's child end, i.e. full length)
        edge_node = []
        offs = []
        mass = []
        children = [[] for _ in range(len(parent_node))]
        for v in range(1, len(parent_node)):
            children[parent_node[v]].append(v)
        # map member vertex -> (edge child node, offset from parent node)
        down_edge = {}
        for v in member_ids[::-1]:
            if is_node[v]:
                nid = node_of[v]
                if nid == 0:
                    # the root point lies at offset 0 of any outgoing edge
                    down_edge[v] = (children[0][0], 0.0) if children[0] else (0, 0.0)
                else:
                    down_edge[v] = (nid, float(edge_len_vertices[nid]))
            else:
                child_node, _ = down_edge[_member_child(tree, member, v)]
                down_edge[v] = (child_node, float(steps_from_node[v]))
        for v in member_ids:
            if counts[v] == 0:
                continue
            en, off = down_edge[int(v)]
            edge_node.append(en)
            offs.append(off * scale)
            mass.append(counts[v] / total)
        measure = TreeMassMeasure(
            np.array(edge_node, dtype=np.int32), np.array(offs), np.array(mass)
        )
        return skeleton, measure
    raise RuntimeError("could not draw a nondegenerate reduced tree")


def _member_child(tree, member, v):
    for c in tree.children(v):
        if member[c]:
            return int(c)
    raise RuntimeError("chain vertex without member child")


def sample_branch_mass_measure(skeleton: MetricSkeleton, n, rng, offspring="poisson", max_tries=256):
    """Mass measure on a given skeleton via the discrete route.

    Draws (skeleton', masses) jointly, conditions on the labeled shape of
    skeleton' matching the given skeleton, then rescales atom offsets
    edge-by-edge onto the given lengths.  Raises on leaf-count mismatch.
    """
    want = skeleton.shape_signature()
    K = skeleton.k
    for _ in range(max_tries):
        drawn_skel, measure = sample_skeleton_with_masses(n, K, rng, offspring=offspring)
        if drawn_skel.k != K:
            raise ValueError("skeleton/leaf-count mismatch")
        if drawn_skel.shape_signature() != want:
            continue
        src_order = drawn_skel.canonical_nodes()
        dst_order = skeleton.canonical_nodes()
        node_map = {int(s): int(d) for s, d in zip(src_order, dst_order)}
        ratio = {
            int(v): skeleton.parent_len[node_map[int(v)]] / drawn_skel.parent_len[int(v)]
            for v in range(1, drawn_skel.n_nodes)
        }
        edge_node = np.array([node_map[int(v)] for v in measure.edge_node], dtype=np.int32)
        offset = np.array(
            [off * ratio[int(v)] for off, v in zip(measure.offset, measure.edge_node)]
        )
        return TreeMassMeasure(edge_node, offset, measure.mass.copy())
    raise RuntimeError("shape-conditioned mass draw failed; try a larger max_tries")


# ---------------------------------------------------------------------------
# inverse local time of the walk on a large conditioned tree


class CrtSubordinator:
    """Rescaled inverse local time at the root of a size-m conditioned tree.

    S(t) = m^(-3/2) linv(ceil(deg(root) sqrt(m) t / 2)) where linv is the
    inverse root local time of the embedded walk; the root-degree factor
    keeps the visit counting aligned with occupation density, so E[S(t)] = t
    for every tree family.  The annealed law over fresh trees approximates
    the inverse local time at the root of the Brownian motion on the
    continuum tree.  The path extends lazily and is resumable.
    """

    def __init__(self, m, rng, offspring="binomial", t_max=1.0):
        self.m = int(m)
        tree = (
            sample_conditioned_cluster(self.m, rng)
            if offspring == "binomial"
            else sample_uniform_tree(self.m, rng)
        )
        self._root_deg = max(tree.n_children(0), 1)
        self._indptr, self._nbrs = tree.adjacency()
        self._state = np.array([kernel_seed(rng)], dtype=np.uint64)
        self._arrivals = np.zeros(16, dtype=np.int64)
        self._filled = 1  # arrivals[0] = 0: first visit at step 0
        self._vertex = 0
        self._step = 0
        self.ensure(t_max)

    def _visits_for(self, t):
        return int(math.ceil(self._root_deg * math.sqrt(self.m) * max(t, 0.0) / 2.0)) + 2

    def ensure(self, t_max):
        target = self._visits_for(t_max)
        if target <= self._filled:
            return
        if target > self._arrivals.shape[0]:
            grown = np.zeros(max(target, 2 * self._arrivals.shape[0]), dtype=np.int64)
            grown[: self._filled] = self._arrivals[: self._filled]
            self._arrivals = grown
        budget = self._step + 64 * self.m * (target - self._filled) + 10**7
        v, s, k = _kernels.root_arrivals(
            self._indptr, self._nbrs, self._arrivals, self._filled, self._vertex, self._step, budget, self._state
        )
        self._vertex, self._step, self._filled = int(v), int(s), int(k)
        if self._filled < target:
            raise RuntimeError("inverse-local-time extension exhausted its step budget")

    def value(self, t):
        """S(t), vectorized; extends the path as needed."""
        t = np.asarray(t, dtype=np.float64)
        tmax = float(t.max()) if t.size else 0.0
        self.ensure(tmax)
        k = np.ceil(self._root_deg * np.sqrt(self.m) * np.maximum(t, 0.0) / 2.0).astype(np.int64)
        out = self._arrivals[k] * self.m**-1.5
        return float(out) if out.ndim == 0 else out

    def path(self, t_max) -> SubordinatorPath:
        self.ensure(t_max)
        k_max = self._visits_for(t_max) - 2
        ks = np.arange(k_max + 1)
        times = 2.0 * ks / (self._root_deg * math.sqrt(self.m))
        return SubordinatorPath(times, self._arrivals[: k_max + 1] * self.m**-1.5)


def crt_inverse_local_time_sampler(m, rng, t_max=1.0, offspring="binomial") -> SubordinatorPath:
    """One annealed draw of the rescaled inverse local time, as a step path."""
    return CrtSubordinator(m, rng, offspring=offspring, t_max=t_max).path(t_max)


def crt_subordinator_factory(m=1000, offspring="binomial"):
    """Factory for per-trap subordinators backed by fresh conditioned trees."""

    def factory(rng):
        return CrtSubordinator(m, rng, offspring=offspring, t_max=0.0)

    return factory


class IdentitySubordinator:
    """S(t) = t; closes the factory interface for degenerate tests."""

    def ensure(self, t_max):
        pass

    def value(self, t):
        t = np.asarray(t, dtype=np.float64)
        return float(t) if t.ndim == 0 else t.copy()


def identity_subordinator_factory():
    return lambda rng: IdentitySubordinator()


# ---------------------------------------------------------------------------
# spatially subordinated walks


@dataclass(frozen=True, eq=False)
class SSBMPath:
    """Positions at requested clock times of a trap-subordinated lattice walk."""

    clock_times: np.ndarray
    positions: np.ndarray
    running_max: np.ndarray
    sites: np.ndarray
    truncation_deficit: float
    steps_used: int


def _line_csr(n_sites):
    indptr = np.zeros(n_sites + 1, dtype=np.int64)
    deg = np.full(n_sites, 2, dtype=np.int64)
    deg[0] = 1
    deg[-1] = 1
    np.cumsum(deg, out=indptr[1:])
    nbrs = np.empty(indptr[-1], dtype=np.int32)
    nbrs[0] = 1
    for s in range(1, n_sites - 1):
        nbrs[indptr[s]] = s - 1
        nbrs[indptr[s] + 1] = s + 1
    nbrs[indptr[n_sites - 1]] = n_sites - 2
    return indptr, nbrs


def _run_trap_clock(indptr, nbrs, site_depth, site_mass_small, resolved, clock_times,
                    lattice_step, subordinator_factory, budget, visit_guess, rng,
                    deficit, max_attempts=4):
    """Shared driver: prepare per-visit increments, run, grow budgets on demand."""
    clock_times = np.ascontiguousarray(clock_times, dtype=np.float64)
    if np.any(np.diff(clock_times) < 0) or clock_times.size == 0:
        raise ValueError("clock times must be nondecreasing and nonempty")
    drift = site_mass_small * lattice_step
    subs = [(site, mass, subordinator_factory(rng)) for site, mass in resolved]
    trap_id = np.full(site_depth.shape[0], -1, dtype=np.int64)
    for i, (site, _, _) in enumerate(subs):
        trap_id[site] = i
    visit_budget = max(int(visit_guess), 64)
    for attempt in range(max_attempts):
        offs = [0]
        incs = []
        for site, mass, sub in subs:
            du = lattice_step * mass**-0.5
            grid = np.arange(visit_budget + 1, dtype=np.float64) * du
            vals = np.asarray(sub.value(grid), dtype=np.float64) * mass**1.5
            incs.append(np.diff(vals))
            offs.append(offs[-1] + visit_budget)
        trap_inc = np.concatenate(incs) if incs else np.zeros(0)
        trap_off = np.array(offs, dtype=np.int64)
        q_site, q_max, status, steps, clock = _kernels.trap_clock_walk(
            indptr, nbrs, site_depth, drift, trap_id, trap_inc, trap_off,
            clock_times, int(budget), kernel_seed(rng),
        )
        if status == 0:
            return SSBMPath(
                clock_times,
                site_depth[q_site],
                q_max,
                q_site,
                float(deficit),
                int(steps),
            )
        if status == 1:
            raise RuntimeError(
                "lattice budget exhausted before the clock reached the horizon"
            )
        visit_budget *= 4
    raise RuntimeError("per-trap visit budget kept overflowing")


def ssbm_simulate(traps, subordinator_factory, lattice_step, horizon_steps, clock_times,
                  rng, x_max=None, y_resolve=0.25) -> SSBMPath:
    """Trap-subordinated reflected walk on the half line.

    traps is an AtomicMeasure on [0, x_max]; atoms are snapped to the grid
    (masses at a shared site summed).  Atoms below y_resolve contribute a
    deterministic per-visit drift (their subordinators run at their exact
    mean slope); atoms at or above it get fresh subordinators from the
    factory.  Clock: sum_i y_i^{3/2} S_i(y_i^{-1/2} l(x_i, t)).
    """
    if x_max is None:
        x_max = float(traps.x.max()) + 1.0 if traps.x.size else 1.0
    dx = float(lattice_step)
    n_sites = int(round(x_max / dx)) + 1
    sites = np.clip(np.round(traps.x / dx).astype(np.int64), 0, n_sites - 1)
    site_mass_small = np.zeros(n_sites)
    merged = {}
    for s, y in zip(sites, traps.y):
        merged[int(s)] = merged.get(int(s), 0.0) + float(y)
    resolved = []
    for s, y in sorted(merged.items()):
        if y >= y_resolve:
            resolved.append((s, y))
        else:
            site_mass_small[s] += y
    indptr, nbrs = _line_csr(n_sites)
    site_depth = np.arange(n_sites, dtype=np.float64) * dx
    visit_guess = 8.0 * math.sqrt(float(horizon_steps)) + 256
    return _run_trap_clock(
        indptr, nbrs, site_depth, site_mass_small, resolved, clock_times, dx,
        subordinator_factory, horizon_steps, visit_guess, rng, traps.mass_deficit,
    )


def gridify_skeleton(skeleton: MetricSkeleton, dx):
    """Lattice sites along the skeleton edges.

    Edge lengths are rounded to whole cells (at least one); returns
    (indptr, nbrs, site_depth, locate, perturbation) where
    locate(edge_node, offset) -> site id and perturbation is the total
    absolute length adjustment.
    """
    n_nodes = skeleton.n_nodes
    cells = np.maximum(1, np.round(skeleton.parent_len / dx).astype(np.int64))
    cells[0] = 0
    perturbation = float(np.abs(cells * dx - skeleton.parent_len)[1:].sum())
    node_site = np.zeros(n_nodes, dtype=np.int64)
    n_sites = 1
    interior_base = np.zeros(n_nodes, dtype=np.int64)
    for v in range(1, n_nodes):
        interior_base[v] = n_sites
        n_sites += cells[v] - 1
        node_site[v] = n_sites
        n_sites += 1
    pairs = []
    for v in range(1, n_nodes):
        chain = [node_site[skeleton.parent_node[v]]]
        chain.extend(range(interior_base[v], interior_base[v] + cells[v] - 1))
        chain.append(node_site[v])
        for a, b in zip(chain[:-1], chain[1:]):
            pairs.append((a, b))
            pairs.append((b, a))
    pairs.sort()
    indptr = np.zeros(n_sites + 1, dtype=np.int64)
    nbrs = np.empty(len(pairs), dtype=np.int32)
    for i, (a, b) in enumerate(pairs):
        indptr[a + 1] += 1
        nbrs[i] = b
    np.cumsum(indptr, out=indptr)
    depth = np.zeros(n_sites)
    node_depth = np.zeros(n_nodes)
    for v in range(1, n_nodes):
        node_depth[v] = node_depth[skeleton.parent_node[v]] + cells[v] * dx
        depth[node_site[v]] = node_depth[v]
        base_depth = node_depth[skeleton.parent_node[v]]
        for j in range(cells[v] - 1):
            depth[interior_base[v] + j] = base_depth + (j + 1) * dx

    def locate(edge_node, offset):
        v = int(edge_node)
        k = int(round(offset / dx))
        k = min(max(k, 0), int(cells[v]))
        if k == 0:
            return int(node_site[skeleton.parent_node[v]])
        if k == cells[v]:
            return int(node_site[v])
        return int(interior_base[v] + k - 1)

    return indptr, nbrs, depth, locate, perturbation


def k_ssbm_simulate(skeleton: MetricSkeleton, mass_measure: TreeMassMeasure,
                    subordinator_factory, lattice_step, horizon_steps, clock_times,
                    rng, y_resolve=1e-3) -> SSBMPath:
    """Trap-subordinated lattice walk on a finite metric skeleton.

    The walk takes equiprobable steps among incident lattice directions
    (branch nodes have degree 3, leaves reflect); trap atoms are snapped to
    lattice sites with collision masses summed; the clock and inversion
    follow the same conventions as ssbm_simulate.
    """
    dx = float(lattice_step)
    indptr, nbrs, depth, locate, _ = gridify_skeleton(skeleton, dx)
    merged = {}
    for en, off, y in zip(mass_measure.edge_node, mass_measure.offset, mass_measure.mass):
        s = locate(en, off)
        merged[s] = merged.get(s, 0.0) + float(y)
    site_mass_small = np.zeros(depth.shape[0])
    resolved = []
    for s, y in sorted(merged.items()):
        if y >= y_resolve:
            resolved.append((s, y))
        else:
            site_mass_small[s] += y
    n_sites = depth.shape[0]
    visit_guess = 12.0 * float(horizon_steps) / max(n_sites, 1) + 256
    return _run_trap_clock(
        indptr, nbrs, depth, site_mass_small, resolved, clock_times, dx,
        subordinator_factory, horizon_steps, visit_guess, rng, 0.0,
    )
