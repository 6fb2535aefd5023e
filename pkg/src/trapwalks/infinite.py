"""Truncated constructions of the incipient infinite cluster and the
invasion cluster, plus the lower-envelope process driving the invasion limit."""

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .clusters import PercolationParams, Substrate, dual_parameter, sample_cluster
from .rng import kernel_seed
from .trees import OrderedTree


@dataclass(frozen=True, eq=False)
class IICInstance:
    """Backbone 0..K-1 with an independent critical branch glued at each vertex.

    branches is None when the instance was built sizes-only; branch_sizes
    always holds the branch vertex counts (the i.i.d. heavy-tailed law).
    """

    backbone_length: int
    branch_sizes: np.ndarray
    branches: list | None = None


def build_iic(K, rng, branch_cap=10**7, materialize=True) -> IICInstance:
    """K independent critical clusters on the degree-1-root substrate.

    With materialize=False only branch sizes are sampled (lazy/truncated
    representation for large K); branch_cap guards runaway growth and is
    applied to the structural sampler only.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if materialize:
        params = PercolationParams(0.5, Substrate.TSTAR)
        branches = [sample_cluster(params, rng, max_vertices=branch_cap) for _ in range(K)]
        sizes = np.array([b.n for b in branches], dtype=np.int64)
        return IICInstance(K, sizes, branches)
    from .clusters import sample_cluster_sizes

    sizes = sample_cluster_sizes(0.5, K, branch_cap, rng)
    return IICInstance(K, sizes, None)


def iic_adjacency(instance: IICInstance):
    """CSR adjacency of the glued graph plus the backbone projection map.

    Global ids: backbone vertex k -> k; branch vertices follow in blocks.
    The branch root is identified with its backbone vertex.
    """
    if instance.branches is None:
        raise ValueError("instance was built sizes-only")
    K = instance.backbone_length
    offsets = np.zeros(K + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([b.n - 1 for b in instance.branches])
    total = K + int(offsets[-1])
    proj = np.empty(total, dtype=np.int32)
    proj[:K] = np.arange(K, dtype=np.int32)
    nbr_lists = [[] for _ in range(total)]
    for k, branch in enumerate(instance.branches):
        base = K + offsets[k]
        glob = lambda v: k if v == 0 else base + v - 1
        proj[base : base + branch.n - 1] = k
        for v in range(branch.n):
            gv = glob(v)
            for c in branch.children(v):
                gc = glob(int(c))
                nbr_lists[gv].append(gc)
                nbr_lists[gc].append(gv)
    for k in range(K - 1):
        nbr_lists[k].append(k + 1)
        nbr_lists[k + 1].append(k)
    indptr = np.zeros(total + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(x) for x in nbr_lists])
    nbrs = np.fromiter((w for lst in nbr_lists for w in lst), dtype=np.int32, count=int(indptr[-1]))
    return indptr, nbrs, proj


@dataclass(frozen=True, eq=False)
class IPCInstance:
    """Invaded tree with weights; vertex ids in invasion order.

    future_max is one exact conditional draw of the largest weight the
    invasion would accept after the recorded run (see invade).
    """

    tree: OrderedTree
    weights: np.ndarray
    boundary_min: float
    future_max: float

    @property
    def invasion_order(self):
        return np.arange(self.tree.n, dtype=np.int64)


def _escape_threshold_quantile(g):
    """Inverse CDF of the escape threshold L of a fresh subtree.

    L = min over the two child slots of max(weight, L'), which solves
    P[L < u] = 1 - (1 - u P[L < u])^2, i.e. P[L < u] = (2u - 1)/u^2 on
    [1/2, 1]: the invasion of a fresh subtree stays below u forever iff an
    infinite u-open cluster is available.
    """
    g = np.asarray(g, dtype=np.float64)
    out = np.where(g > 1e-12, (1.0 - np.sqrt(np.maximum(1.0 - g, 0.0))) / np.where(g > 1e-12, g, 1.0), 0.5)
    return out


def invade(N, rng) -> IPCInstance:
    """Greedy invasion of the binary tree: N vertices, minimal boundary weight first.

    Besides the invaded tree, draws future_max, the maximum weight the
    invasion ever accepts after step N, from its exact conditional law
    given the final boundary: min over boundary vertices b of
    max(w_b, L_b) with L_b the escape threshold of b's fresh subtree.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    parent, weight, depth, invaded, boundary = _kernels.invade_kernel(int(N), kernel_seed(rng))
    # relabel candidates by invasion order (parents always invade first)
    rank = np.full(parent.shape[0], -1, dtype=np.int64)
    rank[invaded] = np.arange(N, dtype=np.int64)
    new_parent = np.empty(N, dtype=np.int32)
    new_parent[0] = -1
    new_parent[1:] = rank[parent[invaded[1:]]]
    tree = OrderedTree.from_parent(new_parent)
    escape = _escape_threshold_quantile(rng.random(boundary.shape[0]))
    future_max = float(np.maximum(boundary, escape).min()) if boundary.size else 0.5
    return IPCInstance(tree, weight[invaded].copy(), float(boundary.min()), future_max)


def export_ipc_csv(instance: IPCInstance, path):
    """Edge list with weights: parentId, childId, weight, invasionIndex."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parentId", "childId", "weight", "invasionIndex"])
        for v in range(1, instance.tree.n):
            writer.writerow([int(instance.tree.parent[v]), v, repr(float(instance.weights[v])), v])


@dataclass(frozen=True, eq=False)
class BackboneEstimate:
    """Root-anchored path, its weights, and forward-maximum weights M_k.

    forward_max[k] estimates the maximal weight the invasion accepts after
    backbone vertex k.  Positions run 0..len(vertices)-1.
    """

    vertices: np.ndarray
    weights: np.ndarray
    forward_max: np.ndarray
    full_depth: int


def estimate_backbone(instance: IPCInstance, trim_fraction) -> BackboneEstimate:
    """Ancestral path of the deepest invaded vertex, trimmed for reliability.

    Ties in depth break toward the smaller vertex id.  The forward maxima
    use that every weight accepted after backbone vertex k is bounded by a
    later backbone weight (the boundary always contains the next backbone
    vertex, whose weight exceeds the accepted minimum), and later backbone
    weights are themselves accepted later: M_k equals the maximum over all
    weights invaded after vertex k.  Within the run that is the suffix
    maximum of the recorded invasion weights; the unobserved remainder is
    covered by the instance's exact future_max draw.
    """
    if not 0.0 < trim_fraction < 1.0:
        raise ValueError("trim_fraction must lie in (0, 1)")
    tree = instance.tree
    if int(tree.depth.max()) < 2:
        raise ValueError("degenerate instance: invaded tree has depth < 2")
    deepest = int(np.argmax(tree.depth))  # argmax returns the first (smallest id)
    path = []
    v = deepest
    while v >= 0:
        path.append(v)
        v = int(tree.parent[v])
    path.reverse()
    path = np.array(path, dtype=np.int64)
    weights = instance.weights[path]
    full_depth = path.shape[0] - 1
    # suffix max over invasion order (vertex ids are invasion steps)
    suffix = np.empty(tree.n + 1, dtype=np.float64)
    suffix[tree.n] = instance.future_max
    suffix[:-1] = instance.weights
    suffix = np.maximum.accumulate(suffix[::-1])[::-1]
    forward = suffix[np.minimum(path + 1, tree.n)]
    keep = int(np.floor(trim_fraction * full_depth)) + 1
    return BackboneEstimate(path[:keep], weights[:keep], forward[:keep], full_depth)


@dataclass(frozen=True, eq=False)
class EnvelopeProcess:
    """Piecewise-constant nonincreasing right-continuous process on (x_min, x_max].

    starts[i] is where level[i] begins; starts[0] == x_min.  Jumps happen at
    starts[1:], and the value at a jump point is already the new level.
    """

    starts: np.ndarray
    levels: np.ndarray
    x_min: float
    x_max: float

    def value(self, t):
        t = np.asarray(t, dtype=np.float64)
        if np.any(t <= self.x_min) or np.any(t > self.x_max):
            raise ValueError("argument outside the envelope domain")
        idx = np.searchsorted(self.starts, t, side="right") - 1
        out = self.levels[idx]
        return float(out) if out.ndim == 0 else out

    @property
    def jump_times(self):
        return self.starts[1:]


def sample_envelope(x_min, x_max, rng) -> EnvelopeProcess:
    """Lower envelope of a unit-rate Poisson process, restricted to (x_min, x_max].

    Sequential record-minimum construction: the level at x_min is
    Exp(x_min); below level y new records arrive at rate y and land
    uniformly below the current level.
    """
    if not 0.0 < x_min < x_max:
        raise ValueError("need 0 < x_min < x_max")
    starts = [x_min]
    levels = [rng.exponential(1.0 / x_min)]
    t = x_min
    while True:
        t = t + rng.exponential(1.0 / levels[-1])
        if t >= x_max:
            break
        starts.append(t)
        levels.append(levels[-1] * rng.random())
    return EnvelopeProcess(
        np.array(starts, dtype=np.float64), np.array(levels, dtype=np.float64), float(x_min), float(x_max)
    )


def envelope_from_points(xs, ys, x_min, x_max) -> EnvelopeProcess:
    """Brute-force envelope of explicit planar points (oracle for tests)."""
    order = np.argsort(xs)
    xs = np.asarray(xs, dtype=np.float64)[order]
    ys = np.asarray(ys, dtype=np.float64)[order]
    starts = [x_min]
    levels = [np.inf]
    for x, y in zip(xs, ys):
        if y < levels[-1]:
            if x <= x_min:
                levels[-1] = y
            elif x <= x_max:
                starts.append(x)
                levels.append(y)
    return EnvelopeProcess(
        np.array(starts, dtype=np.float64), np.array(levels, dtype=np.float64), float(x_min), float(x_max)
    )


def fixed_envelope(level, x_min, x_max) -> EnvelopeProcess:
    """Deterministic one-level envelope (test helper)."""
    return EnvelopeProcess(
        np.array([x_min], dtype=np.float64), np.array([float(level)], dtype=np.float64), float(x_min), float(x_max)
    )


def structural_ipc_branches(k_max, rng, envelope=None):
    """Branches of the invasion-cluster surrogate at indices 1..k_max.

    Branch k is a subcritical cluster with the dual parameter
    (1 - E(k/k_max)/k_max)/2, clipped at 0 when the envelope exceeds k_max
    (the near-root regime where the surrogate branch degenerates to the
    bare root).
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if envelope is None:
        envelope = sample_envelope(1.0 / (2.0 * k_max * k_max), 1.0, rng)
    ks = np.arange(1, k_max + 1, dtype=np.float64) / k_max
    ptilde = np.clip((1.0 - envelope.value(ks) / k_max) / 2.0, 0.0, 0.5)
    branches = []
    for p in ptilde:
        if p <= 0.0:
            branches.append(OrderedTree.from_offspring(np.array([0], dtype=np.int64)))
        else:
            branches.append(sample_cluster(PercolationParams(float(p), Substrate.TSTAR), rng))
    return branches


def structural_ipc_branch_sizes(k_max, n_rep, rng, envelope=None, cap=10**6):
    """Sizes-only version of structural_ipc_branches, vectorized across replicates.

    Returns an (n_rep, k_max) array; entries cap+1 mean "> cap".
    """
    from .clusters import sample_cluster_sizes

    if envelope is None:
        envelope = sample_envelope(1.0 / (2.0 * k_max * k_max), 1.0, rng)
    ks = np.arange(1, k_max + 1, dtype=np.float64) / k_max
    ptilde = np.clip((1.0 - envelope.value(ks) / k_max) / 2.0, 1e-12, 0.5)
    out = np.empty((n_rep, k_max), dtype=np.int64)
    for k in range(k_max):
        out[:, k] = sample_cluster_sizes(float(ptilde[k]), n_rep, cap, rng)
    return out
