"""Random walks on trees: local times, excursion/exit durations, projections,
and the randomly-trapped-random-walk engine."""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from . import _kernels
from .rng import kernel_seed
from .trees import OrderedTree, ReducedSubtreeIndex


@dataclass(frozen=True, eq=False)
class WalkPath:
    """Nearest-neighbour trajectory; vertices[t] is the position at time t."""

    vertices: np.ndarray

    @property
    def step_count(self):
        return self.vertices.shape[0] - 1


def walk(tree: OrderedTree, steps, rng) -> WalkPath:
    """Symmetric nearest-neighbour walk from the root, uniform over neighbours."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if steps == 0 or tree.n == 1:
        return WalkPath(np.zeros(steps + 1, dtype=np.int32))
    indptr, nbrs = tree.adjacency()
    return WalkPath(_kernels.walk_path(indptr, nbrs, int(steps), kernel_seed(rng)))


@dataclass(frozen=True, eq=False)
class LocalTimeCurve:
    """samples[t] = number of root visits among Y_0..Y_t (starts at 1)."""

    samples: np.ndarray

    def inverse(self):
        """l^{-1}(t) = min{s : l_s > t} for t = 0..max-1; the subordinator view."""
        counts = self.samples
        lmax = int(counts[-1])
        out = np.searchsorted(counts, np.arange(1, lmax + 1), side="left")
        return out.astype(np.int64)


def local_time_root(path: WalkPath) -> LocalTimeCurve:
    return LocalTimeCurve(np.cumsum(path.vertices == 0).astype(np.int64))


def sample_sigma(tree: OrderedTree, rng, size=None):
    """Durations of excursions from the root (first return times).

    Single-vertex trees return the reflection convention value 2.
    """
    count = 1 if size is None else int(size)
    indptr, nbrs = tree.adjacency()
    out = _kernels.sigma_batch(indptr, nbrs, count, kernel_seed(rng))
    return int(out[0]) if size is None else out


def sample_sigma_tilde(tree: OrderedTree, rng, size=None):
    """Exit time through two extra vertices glued to the root."""
    count = 1 if size is None else int(size)
    indptr, nbrs = tree.adjacency()
    out = _kernels.sigma_tilde_batch(indptr, nbrs, count, 2, kernel_seed(rng))
    return int(out[0]) if size is None else out


def expected_exit_time_exact(tree: OrderedTree) -> float:
    """Mean exit time through the two glued vertices, by the first-passage solve.

    Independent of the sampler; equals the vertex count up to solver error.
    """
    n = tree.n
    indptr, nbrs = tree.adjacency()
    deg = np.diff(indptr).astype(np.float64)
    deg[0] += 2.0  # two absorbing exits at the root
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
    data = -1.0 / deg[rows]
    mat = scipy.sparse.coo_matrix((data, (rows, nbrs)), shape=(n, n)).tocsr()
    mat = mat + scipy.sparse.identity(n, format="csr")
    h = scipy.sparse.linalg.spsolve(mat, np.ones(n))
    h = np.atleast_1d(h)
    return float(h[0])


def project_walk(path: WalkPath, index) -> np.ndarray:
    """Backbone/reduced-subtree projection of a trajectory at integer times.

    `index` is a ReducedSubtreeIndex or any vertex->label integer array.
    """
    proj = index.projection if isinstance(index, ReducedSubtreeIndex) else np.asarray(index)
    if path.vertices.max(initial=0) >= proj.shape[0]:
        raise ValueError("projection does not cover all visited vertices")
    return proj[path.vertices]


class TrappingLandscape:
    """Site-indexed holding-time laws on a reflecting segment 0..n_sites-1.

    Subclasses provide sample_holding(site, rng) and mean_depth(site);
    mean_depth must equal the true mean when it is finite.
    """

    def __init__(self, n_sites):
        self.n_sites = int(n_sites)

    def sample_holding(self, site, rng) -> float:
        raise NotImplementedError

    def mean_depth(self, site) -> float:
        raise NotImplementedError


class UnitLandscape(TrappingLandscape):
    """Deterministic unit holding times: the trapped walk is a simple walk."""

    def sample_holding(self, site, rng):
        return 1.0

    def mean_depth(self, site):
        return 1.0


class SingleTrapLandscape(TrappingLandscape):
    """Unit holding everywhere except a geometric trap of mean `depth` at site 0."""

    def __init__(self, n_sites, depth):
        super().__init__(n_sites)
        self.depth = float(depth)

    def sample_holding(self, site, rng):
        if site == 0:
            return float(rng.geometric(1.0 / self.depth))
        return 1.0

    def mean_depth(self, site):
        return self.depth if site == 0 else 1.0


class BranchLandscape(TrappingLandscape):
    """Quenched critical branches; holding times are fresh exit experiments.

    Branch at site x is a critical cluster on the degree-1-root substrate,
    sampled once per site; mean_depth(x) is its vertex count.
    """

    def __init__(self, n_sites, rng, p=0.5, cap=10**7):
        super().__init__(n_sites)
        from .clusters import PercolationParams, Substrate, sample_cluster

        self._branches = [
            sample_cluster(PercolationParams(p, Substrate.TSTAR), rng, max_vertices=cap)
            for _ in range(self.n_sites)
        ]
        self._adj = [tree.adjacency() for tree in self._branches]

    def sample_holding(self, site, rng):
        indptr, nbrs = self._adj[site]
        out = _kernels.sigma_tilde_batch(indptr, nbrs, 1, 2, kernel_seed(rng))
        return float(out[0])

    def mean_depth(self, site):
        return float(self._branches[site].n)


@dataclass(frozen=True, eq=False)
class RTRWTrajectory:
    """Sites and strictly increasing departure times of a trapped walk."""

    sites: np.ndarray
    departure_times: np.ndarray

    def position_at(self, times):
        """Right-continuous position at the given times."""
        times = np.asarray(times, dtype=np.float64)
        idx = np.searchsorted(self.departure_times, times, side="right")
        idx = np.minimum(idx, self.sites.shape[0] - 1)
        return self.sites[idx]


def rtrw(landscape: TrappingLandscape, horizon, rng) -> RTRWTrajectory:
    """Randomly trapped walk on 0..n_sites-1, reflecting at both ends.

    Moves to -1 (or n_sites) are resampled, which matches restriction of the
    walk to the segment.  Fresh holding time on each visit.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    sites = [0]
    times = []
    t = 0.0
    x = 0
    n = landscape.n_sites
    while t <= horizon:
        t += landscape.sample_holding(x, rng)
        times.append(t)
        if x == 0:
            x = 1 if n > 1 else 0
        elif x == n - 1:
            x -= 1
        else:
            x = x + 1 if rng.random() < 0.5 else x - 1
        sites.append(x)
    return RTRWTrajectory(np.array(sites[:-1], dtype=np.int64), np.array(times, dtype=np.float64))


# ---------------------------------------------------------------------------
# projected walks on the lazily generated infinite trees


def _check_queries(queries):
    q = np.ascontiguousarray(queries, dtype=np.int64)
    if q.size == 0 or np.any(np.diff(q) < 0) or q[0] < 0:
        raise ValueError("queries must be a nondecreasing nonnegative sequence")
    return q


def iic_projected_walk(queries, rng, via_rtrw=False):
    """Backbone projection of the walk on the incipient infinite cluster.

    Returns (positions, running_max) at the query steps.  With via_rtrw the
    trajectory is generated as a trapped walk with per-visit fresh exit
    experiments on quenched branches; the law is the same.
    """
    q = _check_queries(queries)
    n_table = int(8 * math.sqrt(float(q[-1]))) + 64
    ptilde = np.full(n_table, 0.5)
    kern = _kernels.rtrw_backbone_walk if via_rtrw else _kernels.projected_trap_walk
    pos, rmax, status = kern(q, ptilde, kernel_seed(rng))
    if status != 0:
        raise RuntimeError("walk outran the backbone table; increase the table size")
    return pos, rmax


def ipc_projected_walk(queries, rng, scale=1000, envelope=None):
    """Backbone projection of the walk on the invasion-cluster surrogate.

    Branch at backbone site k is the subcritical dual with parameter
    (1 - E(k/scale)/scale)/2 clipped at 0, with E a lower-envelope draw;
    this is the limit form of the invasion branch environment.
    """
    from .infinite import sample_envelope

    q = _check_queries(queries)
    n_table = int(8 * math.sqrt(float(q[-1]))) + 64
    if envelope is None:
        envelope = sample_envelope(1.0 / (scale * n_table), n_table / scale, rng)
    ks = np.arange(1, n_table + 1, dtype=np.float64) / scale
    ptilde = np.clip((1.0 - envelope.value(ks) / scale) / 2.0, 0.0, 0.5)
    pos, rmax, status = _kernels.projected_trap_walk(q, np.ascontiguousarray(ptilde), kernel_seed(rng))
    if status != 0:
        raise RuntimeError("walk outran the backbone table; increase the table size")
    return pos, rmax


def srw_running_max(queries, rng):
    """Running maximum of the simple walk on Z (diffusive null for the slope fit)."""
    q = _check_queries(queries)
    return _kernels.srw_running_max(q, kernel_seed(rng))
