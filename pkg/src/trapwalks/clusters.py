"""Percolation clusters on the rooted binary tree and its degree-1-root variant.

Substrate T has a degree-2 root and degree-3 interior, so every vertex owns
two child slots; substrate TSTAR differs only in that the root owns a single
slot.  A cluster is the connected component of the root when each slot opens
independently with probability p.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .trees import OrderedTree


class Substrate(enum.Enum):
    T = "T"
    TSTAR = "TStar"


@dataclass(frozen=True)
class PercolationParams:
    p: float
    substrate: Substrate = Substrate.TSTAR

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError("p must lie in (0, 1]")


class CapExceededError(RuntimeError):
    """Cluster growth passed the configured vertex cap."""


def _root_slots(substrate):
    return 1 if substrate is Substrate.TSTAR else 2


def sample_cluster(params: PercolationParams, rng, max_vertices=None) -> OrderedTree:
    """Cluster of the root; requires a vertex cap for supercritical p.

    The returned tree records occupied child slots in `slots` (bit 1 =
    first slot, bit 2 = second).  Raises CapExceededError when the cluster
    outgrows max_vertices.
    """
    if params.p > 0.5 and max_vertices is None:
        raise ValueError("supercritical sampling requires an explicit vertex cap")
    cap = math.inf if max_vertices is None else int(max_vertices)
    p = params.p
    counts = []
    slot_masks = []
    todo = 1
    first = True
    while todo:
        todo -= 1
        nslots = _root_slots(params.substrate) if first else 2
        first = False
        mask = 0
        for s in range(nslots):
            if rng.random() < p:
                mask |= 1 << s
        c = (mask & 1) + (mask >> 1)
        counts.append(c)
        slot_masks.append(mask)
        todo += c
        if len(counts) + todo > cap:
            raise CapExceededError(f"cluster exceeded {max_vertices} vertices")
    return OrderedTree.from_offspring(
        np.array(counts, dtype=np.int64), slots=np.array(slot_masks, dtype=np.uint8)
    )


def sample_cluster_sizes(p, count, cap, rng, substrate=Substrate.TSTAR):
    """Vectorized cluster sizes, clipped at cap (values cap+1 mean "> cap").

    Runs the exploration queues of all clusters in lockstep, which keeps the
    critical case affordable: the work per cluster is min(size, cap).
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    cap = int(cap)
    sizes = np.zeros(count, dtype=np.int64)
    idx = np.arange(count, dtype=np.int64)
    if substrate is Substrate.TSTAR:
        pending = rng.binomial(1, p, size=count).astype(np.int64)
    else:
        pending = rng.binomial(2, p, size=count).astype(np.int64)
    size = np.ones(count, dtype=np.int64)
    while idx.size:
        alive = pending > 0
        done = ~alive
        if done.any():
            sizes[idx[done]] = size[done]
            idx, pending, size = idx[alive], pending[alive], size[alive]
            if idx.size == 0:
                break
        size += 1
        pending += rng.binomial(2, p, size=idx.size) - 1
        over = size > cap
        if over.any():
            sizes[idx[over]] = cap + 1
            keep = ~over
            idx, pending, size = idx[keep], pending[keep], size[keep]
    return sizes


def cluster_size_laplace(p, lam):
    """Closed-form E[exp(-lam * N_p)] for the degree-1-root cluster, p <= 1/2."""
    if not 0.0 < p <= 0.5:
        raise ValueError("the closed form is the subcritical/critical branch: p <= 1/2")
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    return (1.0 - math.sqrt(1.0 - 4.0 * p * (1.0 - p) * math.exp(-lam))) / (2.0 * p)


def cluster_size_pmf(p, k_max):
    """Exact P[N_p = k] for k = 1..k_max on the degree-1-root substrate.

    Uses the first-passage decomposition of the exploration walk: the
    progeny below the root's child has the Borel-type law
    P[T = m] = C(2m, m-1) p^(m-1) (1-p)^(m+1) / m.
    Valid for every p in (0, 1); for p > 1/2 the total mass is the
    probability that the cluster is finite.
    """
    out = np.zeros(k_max, dtype=np.float64)
    out[0] = 1.0 - p
    if k_max == 1:
        return out
    m = np.arange(1, k_max, dtype=np.float64)
    logc = gammaln(2 * m + 1) - gammaln(m) - gammaln(m + 2)
    logp = logc + (m - 1) * math.log(p) + (m + 1) * math.log1p(-p) - np.log(m)
    out[1:] = p * np.exp(logp)
    return out


def extinction_probability(p):
    """Finiteness probability of the degree-1-root cluster (oracle for duality)."""
    if p <= 0.5:
        return 1.0
    return (1.0 - p) / p


def dual_parameter(p):
    """Subcritical parameter whose cluster law equals the supercritical
    cluster conditioned to stay finite; exact on the binary tree."""
    if not 0.5 < p < 1.0:
        raise ValueError("dual parameter is defined for p in (1/2, 1)")
    return 1.0 - p


def scales(epsilon):
    """Space/time scales (d, q) = (eps^-2 / pi, pi eps^3) of the critical-branch regime."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return epsilon**-2 / math.pi, math.pi * epsilon**3


def _binary_offspring_counts(m, rng):
    """Offspring counts of m Binomial(2, 1/2) draws conditioned on sum m-1.

    Table-driven: with n2 two-child vertices, the composition is forced to
    (n0, n1, n2) = (n2+1, m-1-2*n2, n2); n2 is drawn from the exact
    multinomial weights, the multiset is shuffled uniformly.
    """
    if m == 1:
        return np.zeros(1, dtype=np.int64)
    n2 = np.arange((m - 1) // 2 + 1, dtype=np.float64)
    n1 = m - 1 - 2 * n2
    n0 = n2 + 1
    logw = (
        gammaln(m + 1)
        - gammaln(n0 + 1)
        - gammaln(n1 + 1)
        - gammaln(n2 + 1)
        + n1 * math.log(0.5)
        + (n0 + n2) * math.log(0.25)
    )
    w = np.exp(logw - logw.max())
    w /= w.sum()
    k2 = int(rng.choice(len(w), p=w))
    counts = np.concatenate(
        [
            np.zeros(k2 + 1, dtype=np.int64),
            np.ones(m - 1 - 2 * k2, dtype=np.int64),
            np.full(k2, 2, dtype=np.int64),
        ]
    )
    return rng.permutation(counts)


def _rotate_to_tree(counts, rng=None):
    """Cycle-lemma rotation: start right after the first minimal prefix sum."""
    steps = counts - 1
    prefix = np.cumsum(steps)
    j = int(np.argmin(prefix))
    return np.roll(counts, -(j + 1))


def sample_conditioned_cluster(n, rng) -> OrderedTree:
    """Uniform n-vertex subtree of the degree-1-root substrate (exact, O(n)).

    The part below the root is a Binomial(2, 1/2) Galton-Watson tree
    conditioned on n-1 vertices, realized by the cycle lemma; single-child
    vertices then pick their occupied slot uniformly, which refines the
    plane-tree law to the uniform law on embedded subtrees.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return OrderedTree.from_offspring(
            np.array([0], dtype=np.int64), slots=np.array([0], dtype=np.uint8)
        )
    inner = _rotate_to_tree(_binary_offspring_counts(n - 1, rng))
    counts = np.concatenate([[1], inner])
    slots = np.empty(n, dtype=np.uint8)
    slots[0] = 1
    one_child = counts[1:] == 1
    picks = np.where(rng.random(n - 1) < 0.5, 1, 2).astype(np.uint8)
    slots[1:] = np.where(one_child, picks, np.where(counts[1:] == 2, 3, 0))
    return OrderedTree.from_offspring(counts, slots=slots)


def sample_uniform_tree(n, rng) -> OrderedTree:
    """Poisson(1) Galton-Watson tree conditioned on n vertices (uniform tree)."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return OrderedTree.from_offspring(np.array([0], dtype=np.int64))
    counts = rng.multinomial(n - 1, np.full(n, 1.0 / n)).astype(np.int64)
    return OrderedTree.from_offspring(_rotate_to_tree(counts))
