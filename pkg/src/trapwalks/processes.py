"""Subordinators, trap point processes, Laplace-exponent transforms, and the
lattice surrogate of reflected Brownian motion with its local-time field."""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .rng import kernel_seed


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Sorted atoms (x_i, y_i) with strictly positive masses.

    mass_deficit bounds the mean mass removed by truncation in the sampler
    that produced the measure (0 for exact measures).
    """

    x: np.ndarray
    y: np.ndarray
    mass_deficit: float = 0.0

    def __post_init__(self):
        if self.x.shape != self.y.shape:
            raise ValueError("locations and masses must align")
        if np.any(self.y <= 0):
            raise ValueError("masses must be strictly positive")
        if np.any(np.diff(self.x) < 0):
            raise ValueError("locations must be sorted")
        self.x.setflags(write=False)
        self.y.setflags(write=False)

    @property
    def total_mass(self):
        return float(self.y.sum())

    def restricted(self, lo, hi):
        keep = (self.x > lo) & (self.x <= hi)
        return AtomicMeasure(self.x[keep], self.y[keep], self.mass_deficit)


def merge_atoms(x, y, deficit=0.0) -> AtomicMeasure:
    """Sort by location and sum masses at coinciding locations."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    if x.size:
        uniq, inv = np.unique(x, return_inverse=True)
        summed = np.zeros(uniq.size)
        np.add.at(summed, inv, y)
        x, y = uniq, summed
    return AtomicMeasure(x, y, deficit)


@dataclass(frozen=True, eq=False)
class SubordinatorPath:
    """Nondecreasing right-continuous step path plus an optional linear drift.

    value(t) = drift * t + jumps accumulated on [0, t]; value(0) = 0 when the
    first jump time is positive.
    """

    times: np.ndarray
    values: np.ndarray
    drift: float = 0.0

    def __post_init__(self):
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must align")
        if np.any(np.diff(self.times) < 0) or np.any(np.diff(self.values) < -1e-12):
            raise ValueError("subordinator paths are nondecreasing")
        self.times.setflags(write=False)
        self.values.setflags(write=False)

    def value(self, t):
        t = np.asarray(t, dtype=np.float64)
        idx = np.searchsorted(self.times, t, side="right") - 1
        base = np.where(idx >= 0, self.values[np.maximum(idx, 0)], 0.0)
        out = base + self.drift * t
        return float(out) if out.ndim == 0 else out


def drift_path(rate=1.0) -> SubordinatorPath:
    """Pure-drift subordinator S(t) = rate * t."""
    return SubordinatorPath(np.zeros(1), np.zeros(1), drift=float(rate))


# ---------------------------------------------------------------------------
# stable trap fields


def stable_tail_mean(a, gamma, h):
    """Mean atom count per unit length above mass h: integral of the intensity."""
    return a * h**-gamma


def sample_stable_ppp(x_min, x_max, h_min, a, gamma, rng) -> AtomicMeasure:
    """Poisson trap field with intensity a * gamma * y^(-1-gamma) dy dx.

    Atoms with mass below h_min are truncated; the recorded mass_deficit is
    the exact mean of the removed mass, (x_max-x_min) * a * gamma/(1-gamma)
    * h_min^(1-gamma).
    """
    if h_min <= 0:
        raise ValueError("h_min must be positive")
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if x_max < x_min:
        raise ValueError("empty x-range must still be ordered")
    length = x_max - x_min
    mean_count = length * stable_tail_mean(a, gamma, h_min)
    count = int(rng.poisson(mean_count))
    xs = rng.uniform(x_min, x_max, size=count)
    ys = h_min * rng.random(count) ** (-1.0 / gamma)
    deficit = length * a * gamma / (1.0 - gamma) * h_min ** (1.0 - gamma)
    return merge_atoms(xs, ys, deficit)


def stable_total_mass_transform(lam, a, gamma):
    """Closed-form E[exp(-lam V_1)] = exp(-a Gamma(1-gamma) lam^gamma) for the
    untruncated field over a unit x-interval."""
    return math.exp(-a * math.gamma(1.0 - gamma) * lam**gamma)


# ---------------------------------------------------------------------------
# inverse Gaussian subordinators


def ig_laplace(delta, gamma_param, t, lam):
    """E[exp(-lam I_t)] = exp(-t delta (sqrt(2 lam + gamma^2) - gamma))."""
    return math.exp(-t * delta * (math.sqrt(2.0 * lam + gamma_param**2) - gamma_param))


def sample_inverse_gaussian(delta, gamma_param, t, rng, size=None):
    """Increment I_t of the (delta, gamma) subordinator over time t.

    Uses the transformation method with a uniform tie-break; parameters map
    to mean t*delta/gamma and shape (t*delta)^2.  gamma_param == 0 is the
    one-sided stable boundary (infinite mean), sampled as (t delta)^2 / Z^2.
    """
    if delta <= 0 or t < 0:
        raise ValueError("delta must be positive and t nonnegative")
    if t == 0:
        return 0.0 if size is None else np.zeros(size)
    shape = () if size is None else (size if isinstance(size, tuple) else (size,))
    z = rng.standard_normal(shape)
    if gamma_param == 0.0:
        out = (t * delta) ** 2 / z**2
        return float(out) if size is None else out
    mu = t * delta / gamma_param
    lam_shape = (t * delta) ** 2
    y = z * z
    x1 = mu + mu * mu * y / (2.0 * lam_shape) - (mu / (2.0 * lam_shape)) * np.sqrt(
        4.0 * mu * lam_shape * y + mu * mu * y * y
    )
    u = rng.random(shape)
    out = np.where(u <= mu / (mu + x1), x1, mu * mu / x1)
    return float(out) if size is None else out


def sample_inverse_gaussian_path(delta, gamma_param, horizon, time_grid, rng) -> SubordinatorPath:
    """Independent exact increments of the (delta, gamma) subordinator per grid cell."""
    if gamma_param == 0.0:
        warnings.warn("gamma = 0 is the one-sided stable boundary: increments have infinite mean")
    grid = np.asarray(time_grid, dtype=np.float64)
    if grid.size == 0 or grid[0] < 0 or np.any(np.diff(grid) <= 0) or grid[-1] > horizon:
        raise ValueError("time grid must be increasing within [0, horizon]")
    if grid[0] != 0.0:
        grid = np.concatenate([[0.0], grid])
    incs = np.array(
        [sample_inverse_gaussian(delta, gamma_param, dt, rng) for dt in np.diff(grid)]
    )
    values = np.concatenate([[0.0], np.cumsum(incs)])
    return SubordinatorPath(grid, values)


def _ig_jump_tail(c, h):
    """integral_h^inf y^(-3/2) exp(-c y) dy (by parts, erfc form)."""
    if c == 0.0:
        return 2.0 / math.sqrt(h)
    return 2.0 * math.exp(-c * h) / math.sqrt(h) - 2.0 * math.sqrt(math.pi * c) * erfc(math.sqrt(c * h))


def ig_atoms_on_interval(delta, gamma_param, length, h_min, rng):
    """Masses of the (delta, gamma) subordinator jumps above h_min over `length`.

    The jump intensity is delta/sqrt(2 pi) y^(-3/2) exp(-gamma^2 y / 2) dy;
    masses are drawn by inverting the closed-form tail with bisection.
    Returns (masses, mean_deficit_below_h).
    """
    c = gamma_param**2 / 2.0
    rate = delta / math.sqrt(2.0 * math.pi)
    total = rate * _ig_jump_tail(c, h_min) * length
    count = int(rng.poisson(total))
    masses = np.empty(count)
    tail_h = _ig_jump_tail(c, h_min)
    for i in range(count):
        target = rng.random() * tail_h
        lo, hi = h_min, max(2.0 * h_min, 1.0)
        while _ig_jump_tail(c, hi) > target:
            hi *= 2.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if _ig_jump_tail(c, mid) > target:
                lo = mid
            else:
                hi = mid
        masses[i] = 0.5 * (lo + hi)
    # mean mass below h: integral_0^h y * intensity <= rate * 2 sqrt(h) * length
    deficit = rate * 2.0 * math.sqrt(h_min) * length
    return masses, deficit


def mu_ipc(envelope, rng, mass_cut=1e-4) -> AtomicMeasure:
    """Atomic trap measure of the invasion limit: on each envelope level set
    an inverse Gaussian subordinator with delta = 1/sqrt(2), gamma = sqrt(2) * level.

    Atoms below mass_cut are dropped; mass_deficit records their exact mean
    plus the bound length * delta / gamma for the unexplored (0, x_min] part.
    """
    delta = 1.0 / math.sqrt(2.0)
    xs = []
    ys = []
    # on (0, x_min] the envelope is at least its first sampled level, so the
    # unexplored mass is at most x_min * delta / gamma(level[0])
    deficit = envelope.x_min * delta / (math.sqrt(2.0) * envelope.levels[0])
    bounds = np.concatenate([envelope.starts, [envelope.x_max]])
    for i in range(envelope.levels.shape[0]):
        lo, hi = bounds[i], bounds[i + 1]
        gamma_param = math.sqrt(2.0) * envelope.levels[i]
        masses, d = ig_atoms_on_interval(delta, gamma_param, hi - lo, mass_cut, rng)
        deficit += d
        xs.append(rng.uniform(lo, hi, size=masses.shape[0]))
        ys.append(masses)
    return merge_atoms(np.concatenate(xs), np.concatenate(ys), deficit)


# ---------------------------------------------------------------------------
# Laplace-exponent transform of holding-time laws


def psi_epsilon(duration_samples, epsilon, lambda_grid):
    """Plug-in rescaled Laplace exponent eps^-1 (1 - nu_hat(q(eps) lam)).

    q(eps) = pi eps^3, the critical-branch time scale.  Returns the curve on
    lambda_grid plus its standard errors.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    samples = np.asarray(duration_samples, dtype=np.float64)
    if samples.size == 0:
        raise ValueError("need at least one sample")
    lams = np.asarray(lambda_grid, dtype=np.float64)
    q = math.pi * epsilon**3
    expo = np.exp(-np.outer(lams, samples) * q)
    mean = expo.mean(axis=1)
    se = expo.std(axis=1, ddof=1) / math.sqrt(samples.size) if samples.size > 1 else np.zeros_like(mean)
    return (1.0 - mean) / epsilon, se / epsilon


# ---------------------------------------------------------------------------
# lattice reflected Brownian motion


@dataclass(frozen=True, eq=False)
class LatticeReflectedPath:
    """|simple walk| on the grid {0, dx, 2dx, ...} with time step dx^2.

    positions[k] is the site index after k steps; local time of site s up to
    grid time t is dx * (#visits among the first floor(t/dx^2)+1 positions).
    """

    grid_step: float
    positions: np.ndarray

    @property
    def time_step(self):
        return self.grid_step**2

    def local_time(self, site, t=None):
        upto = self.positions.shape[0] if t is None else min(
            int(t / self.time_step) + 1, self.positions.shape[0]
        )
        return self.grid_step * int(np.count_nonzero(self.positions[:upto] == site))

    def local_time_field(self, t=None):
        upto = self.positions.shape[0] if t is None else min(
            int(t / self.time_step) + 1, self.positions.shape[0]
        )
        return self.grid_step * np.bincount(self.positions[:upto])


def reflected_lattice_bm(grid_step, horizon, rng) -> LatticeReflectedPath:
    """Diffusively scaled reflected walk: |cumsum of unit steps| on the grid."""
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    steps = int(round(horizon / grid_step**2))
    moves = rng.integers(0, 2, size=steps, dtype=np.int64) * 2 - 1
    pos = np.empty(steps + 1, dtype=np.int64)
    pos[0] = 0
    np.cumsum(moves, out=pos[1:])
    np.abs(pos, out=pos)
    return LatticeReflectedPath(float(grid_step), pos)
