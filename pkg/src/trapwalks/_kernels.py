"""Jitted inner loops: tree codecs, random walks, invasion, trap clocks.

All kernels draw randomness from an explicit splitmix64 state passed in a
one-element uint64 array, so results are reproducible from a single seed
and independent of global RNG state.
"""

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True, inline="always")
def _next_u64(state):
    s = state[0] + _GOLDEN
    state[0] = s
    z = (s ^ (s >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _uniform(state):
    return (_next_u64(state) >> _S11) * _INV53


@njit(cache=True, inline="always")
def _randint(state, n):
    # float construction: bias O(n / 2^53), negligible for n << 2^40
    r = int(_uniform(state) * n)
    if r >= n:
        r = n - 1
    return r


@njit(cache=True)
def uniforms(count, seed):
    state = np.empty(1, np.uint64)
    state[0] = seed
    out = np.empty(count, np.float64)
    for i in range(count):
        out[i] = _uniform(state)
    return out


# ---------------------------------------------------------------------------
# tree codec


@njit(cache=True)
def tree_from_offspring(counts):
    """parent array from preorder offspring counts (ids in discovery order)."""
    n = counts.shape[0]
    parent = np.empty(n, np.int32)
    parent[0] = -1
    remaining = counts.copy()
    stack = np.empty(n + 1, np.int32)
    top = 0
    stack[0] = 0
    for i in range(1, n):
        while remaining[stack[top]] == 0:
            top -= 1
        p = stack[top]
        remaining[p] -= 1
        parent[i] = p
        top += 1
        stack[top] = i
    return parent


@njit(cache=True)
def vertex_depths(parent):
    n = parent.shape[0]
    d = np.zeros(n, np.int32)
    for i in range(1, n):
        d[i] = d[parent[i]] + 1
    return d


@njit(cache=True)
def search_depth_curve(child_ptr, child_arr, depth):
    """Depth sequence of the clockwise depth-first walk, 2n+1 grid values."""
    n = depth.shape[0]
    values = np.zeros(2 * n + 1, np.int32)
    stack = np.empty(n + 1, np.int32)
    cursor = np.empty(n + 1, np.int64)
    top = 0
    stack[0] = 0
    cursor[0] = child_ptr[0]
    pos = 1
    while top >= 0:
        v = stack[top]
        c = cursor[top]
        if c < child_ptr[v + 1]:
            w = child_arr[c]
            cursor[top] = c + 1
            top += 1
            stack[top] = w
            cursor[top] = child_ptr[w]
            pos += 1
            values[pos] = depth[w]
        else:
            top -= 1
            if top >= 0:
                pos += 1
                values[pos] = depth[stack[top]]
    return values


@njit(cache=True)
def offspring_from_curve(values):
    """Inverse codec; returns empty array when the curve is structurally invalid."""
    ln = values.shape[0]
    n = (ln - 1) // 2
    counts = np.zeros(n, np.int64)
    bad = counts[:0]
    stack = np.empty(n + 1, np.int32)
    top = 0
    stack[0] = 0
    nxt = 1
    for t in range(1, 2 * n - 1):
        dv = values[t + 1] - values[t]
        if dv == 1:
            if nxt >= n:
                return bad
            counts[stack[top]] += 1
            top += 1
            stack[top] = nxt
            nxt += 1
        elif dv == -1:
            top -= 1
            if top < 0:
                return bad
        else:
            return bad
    if nxt != n or top != 0:
        return bad
    return counts


# ---------------------------------------------------------------------------
# random walks on fixed CSR graphs


@njit(cache=True)
def walk_path(indptr, nbrs, steps, seed):
    state = np.empty(1, np.uint64)
    state[0] = seed
    pos = np.empty(steps + 1, np.int32)
    v = 0
    pos[0] = 0
    for s in range(1, steps + 1):
        lo = indptr[v]
        deg = indptr[v + 1] - lo
        v = nbrs[lo + _randint(state, deg)]
        pos[s] = v
    return pos


@njit(cache=True)
def walk_value_at(indptr, nbrs, value, queries, seed):
    """Record value[v] and its running max at the query steps (ascending)."""
    state = np.empty(1, np.uint64)
    state[0] = seed
    nq = queries.shape[0]
    out_val = np.empty(nq, np.float64)
    out_max = np.empty(nq, np.float64)
    v = 0
    vmax = value[0]
    qi = 0
    while qi < nq and queries[qi] == 0:
        out_val[qi] = value[0]
        out_max[qi] = vmax
        qi += 1
    s = 0
    last = queries[nq - 1]
    while s < last:
        s += 1
        lo = indptr[v]
        deg = indptr[v + 1] - lo
        v = nbrs[lo + _randint(state, deg)]
        x = value[v]
        if x > vmax:
            vmax = x
        while qi < nq and queries[qi] == s:
            out_val[qi] = x
            out_max[qi] = vmax
            qi += 1
    return out_val, out_max


@njit(cache=True)
def root_visits_at(indptr, nbrs, queries, seed):
    """Local time at the root (visit count, Y_0 included) at the query steps."""
    state = np.empty(1, np.uint64)
    state[0] = seed
    nq = queries.shape[0]
    out = np.empty(nq, np.int64)
    v = 0
    visits = 1
    qi = 0
    while qi < nq and queries[qi] == 0:
        out[qi] = visits
        qi += 1
    s = 0
    last = queries[nq - 1]
    while s < last:
        s += 1
        lo = indptr[v]
        deg = indptr[v + 1] - lo
        v = nbrs[lo + _randint(state, deg)]
        if v == 0:
            visits += 1
        while qi < nq and queries[qi] == s:
            out[qi] = visits
            qi += 1
    return out


@njit(cache=True)
def sigma_batch(indptr, nbrs, count, seed):
    """First-return times to the root; single-vertex trees use the value 2."""
    state = np.empty(1, np.uint64)
    state[0] = seed
    out = np.empty(count, np.int64)
    root_deg = indptr[1] - indptr[0]
    for i in range(count):
        if root_deg == 0:
            out[i] = 2
            continue
        v = nbrs[indptr[0] + _randint(state, root_deg)]
        steps = 1
        while v != 0:
            lo = indptr[v]
            deg = indptr[v + 1] - lo
            v = nbrs[lo + _randint(state, deg)]
            steps += 1
        out[i] = steps
    return out


@njit(cache=True)
def sigma_tilde_batch(indptr, nbrs, count, n_exits, seed):
    """Exit times through n_exits extra vertices glued to the root."""
    state = np.empty(1, np.uint64)
    state[0] = seed
    out = np.empty(count, np.int64)
    root_deg = indptr[1] - indptr[0]
    for i in range(count):
        steps = 0
        v = 0
        while True:
            steps += 1
            if v == 0:
                r = _randint(state, root_deg + n_exits)
                if r < n_exits:
                    break
                v = nbrs[indptr[0] + (r - n_exits)]
            else:
                lo = indptr[v]
                deg = indptr[v + 1] - lo
                v = nbrs[lo + _randint(state, deg)]
        out[i] = steps
    return out


@njit(cache=True)
def root_arrivals(indptr, nbrs, arrivals, start_visit, v0, s0, max_steps, state):
    """Fill arrivals[k] = step count of root visit k+1; resumable.

    Returns (vertex, step, visits_recorded) so the caller can extend the
    arrivals buffer and continue the same trajectory.
    """
    k = start_visit
    target = arrivals.shape[0]
    v = v0
    s = s0
    while k < target and s < max_steps:
        s += 1
        lo = indptr[v]
        deg = indptr[v + 1] - lo
        v = nbrs[lo + _randint(state, deg)]
        if v == 0:
            arrivals[k] = s
            k += 1
    return v, s, k


# ---------------------------------------------------------------------------
# lazily generated infinite trees: backbone + branches


@njit(cache=True)
def projected_trap_walk(queries, ptilde, seed):
    """Walk on a backbone-with-branches tree, generated lazily along the way.

    Backbone vertex k carries an independent percolation branch on the
    degree-1-root substrate with parameter ptilde[k]; interior branch
    vertices open each of their two slots with the same parameter.  The
    recorded observable is the backbone projection of the walker and its
    running maximum, sampled at the query steps.
    Returns (positions, running_max, status); status 1 means the walk
    outran the ptilde table.
    """
    steps = queries[queries.shape[0] - 1]
    cap = 2 * steps + 16
    parent = np.empty(cap, np.int32)
    c0 = np.empty(cap, np.int32)
    c1 = np.empty(cap, np.int32)
    proj = np.empty(cap, np.int32)
    kind = np.empty(cap, np.uint8)
    state = np.empty(1, np.uint64)
    state[0] = seed
    parent[0] = -1
    c0[0] = -2
    c1[0] = -2
    proj[0] = 0
    kind[0] = 1
    nv = 1
    v = 0
    x = 0
    xmax = 0
    nq = queries.shape[0]
    out_x = np.empty(nq, np.int64)
    out_max = np.empty(nq, np.int64)
    qi = 0
    while qi < nq and queries[qi] == 0:
        out_x[qi] = 0
        out_max[qi] = 0
        qi += 1
    nbb = ptilde.shape[0]
    s = 0
    while s < steps:
        if c0[v] == -2:
            k = proj[v]
            if k + 1 >= nbb:
                return out_x, out_max, 1
            pb = ptilde[k]
            if kind[v] == 1:
                parent[nv] = v
                c0[nv] = -2
                c1[nv] = -2
                proj[nv] = k + 1
                kind[nv] = 1
                c0[v] = nv
                nv += 1
                if _uniform(state) < pb:
                    parent[nv] = v
                    c0[nv] = -2
                    c1[nv] = -2
                    proj[nv] = k
                    kind[nv] = 0
                    c1[v] = nv
                    nv += 1
                else:
                    c1[v] = -1
            else:
                if _uniform(state) < pb:
                    parent[nv] = v
                    c0[nv] = -2
                    c1[nv] = -2
                    proj[nv] = k
                    kind[nv] = 0
                    c0[v] = nv
                    nv += 1
                else:
                    c0[v] = -1
                if _uniform(state) < pb:
                    parent[nv] = v
                    c0[nv] = -2
                    c1[nv] = -2
                    proj[nv] = k
                    kind[nv] = 0
                    c1[v] = nv
                    nv += 1
                else:
                    c1[v] = -1
        deg = 0
        pa = parent[v]
        if pa >= 0:
            deg += 1
        if c0[v] >= 0:
            deg += 1
        if c1[v] >= 0:
            deg += 1
        r = _randint(state, deg)
        w = -1
        if pa >= 0:
            if r == 0:
                w = pa
            else:
                r -= 1
        if w < 0 and c0[v] >= 0:
            if r == 0:
                w = c0[v]
            else:
                r -= 1
        if w < 0:
            w = c1[v]
        v = w
        x = proj[v]
        if x > xmax:
            xmax = x
        s += 1
        while qi < nq and queries[qi] == s:
            out_x[qi] = x
            out_max[qi] = xmax
            qi += 1
    return out_x, out_max, 0


@njit(cache=True)
def rtrw_backbone_walk(queries, ptilde, seed):
    """Trapped walk on the backbone: fresh exit experiment per visit.

    Each backbone site k holds a quenched branch (sampled lazily, same law
    as in projected_trap_walk); the holding time per visit is a fresh exit
    experiment through the backbone neighbours (two exits at k >= 1, one
    exit at k = 0).  Clock units match the embedded walk exactly, so the
    recorded positions at integer times are distributed as the projected
    walk.  Returns (positions, running_max, status).
    """
    steps = queries[queries.shape[0] - 1]
    cap = 3 * steps + 32
    parent = np.empty(cap, np.int32)
    c0 = np.empty(cap, np.int32)
    c1 = np.empty(cap, np.int32)
    state = np.empty(1, np.uint64)
    state[0] = seed
    nbb = ptilde.shape[0]
    branch_root = np.full(nbb, -1, np.int64)
    nv = 0
    x = 0
    xmax = 0
    nq = queries.shape[0]
    out_x = np.empty(nq, np.int64)
    out_max = np.empty(nq, np.int64)
    qi = 0
    while qi < nq and queries[qi] == 0:
        out_x[qi] = 0
        out_max[qi] = 0
        qi += 1
    t = 0
    while qi < nq:
        if x + 1 >= nbb:
            return out_x, out_max, 1
        if branch_root[x] < 0:
            parent[nv] = -1
            c0[nv] = -2
            c1[nv] = -1
            branch_root[x] = nv
            nv += 1
        n_exits = 2 if x > 0 else 1
        v = np.int32(branch_root[x])
        held = 0
        exited = False
        aborted = False
        while not exited:
            if c0[v] == -2:
                pb = ptilde[x]
                slots = 2
                if parent[v] < 0:
                    slots = 1
                if _uniform(state) < pb:
                    parent[nv] = v
                    c0[nv] = -2
                    c1[nv] = -1
                    c0[v] = nv
                    nv += 1
                else:
                    c0[v] = -1
                if slots == 2:
                    if _uniform(state) < pb:
                        parent[nv] = v
                        c0[nv] = -2
                        c1[nv] = -1
                        c1[v] = nv
                        nv += 1
                    else:
                        c1[v] = -1
                else:
                    c1[v] = -1
            held += 1
            if t + held > steps:
                # every remaining query falls inside this holding interval
                exited = True
                aborted = True
                continue
            if parent[v] < 0:
                deg = 0
                if c0[v] >= 0:
                    deg += 1
                if c1[v] >= 0:
                    deg += 1
                r = _randint(state, deg + n_exits)
                if r < n_exits:
                    exited = True
                elif r == n_exits and c0[v] >= 0:
                    v = c0[v]
                else:
                    v = c1[v] if c1[v] >= 0 else c0[v]
            else:
                deg = 1
                if c0[v] >= 0:
                    deg += 1
                if c1[v] >= 0:
                    deg += 1
                r = _randint(state, deg)
                if r == 0:
                    v = parent[v]
                elif r == 1 and c0[v] >= 0:
                    v = c0[v]
                else:
                    v = c1[v] if c1[v] >= 0 else c0[v]
        t_jump = t + held
        # the projection sits at the old site during the whole holding interval
        while qi < nq and queries[qi] < t_jump:
            out_x[qi] = x
            out_max[qi] = xmax
            qi += 1
        if x == 0:
            x = 1
        else:
            x = x + 1 if _uniform(state) < 0.5 else x - 1
        if x > xmax:
            xmax = x
        t = t_jump
        while qi < nq and queries[qi] == t:
            out_x[qi] = x
            out_max[qi] = xmax
            qi += 1
    return out_x, out_max, 0


# ---------------------------------------------------------------------------
# invasion percolation on the binary tree


@njit(cache=True)
def invade_kernel(n_invade, seed):
    """Greedy invasion of the root-degree-2 binary tree.

    Candidate vertices are indexed by creation order; every invaded vertex
    spawns two children with fresh uniform weights on the boundary heap.
    Returns (parent, weight, depth, invaded, boundary_weights) where the
    first three are candidate-indexed, invaded lists candidate ids in
    invasion order, and boundary_weights are the weights left on the
    boundary (heap order).
    """
    state = np.empty(1, np.uint64)
    state[0] = seed
    cap = 2 * n_invade + 4
    parent = np.empty(cap, np.int32)
    weight = np.empty(cap, np.float64)
    depth = np.empty(cap, np.int32)
    heap_w = np.empty(cap, np.float64)
    heap_v = np.empty(cap, np.int32)
    invaded = np.empty(n_invade, np.int32)
    parent[0] = -1
    weight[0] = 0.0
    depth[0] = 0
    ncand = 1
    hsize = 0
    invaded[0] = 0
    for _ in range(2):
        w = _uniform(state)
        parent[ncand] = 0
        weight[ncand] = w
        depth[ncand] = 1
        i = hsize
        heap_w[i] = w
        heap_v[i] = ncand
        hsize += 1
        while i > 0:
            up = (i - 1) // 2
            if heap_w[up] <= heap_w[i]:
                break
            heap_w[i], heap_w[up] = heap_w[up], heap_w[i]
            heap_v[i], heap_v[up] = heap_v[up], heap_v[i]
            i = up
        ncand += 1
    for k in range(1, n_invade):
        v = heap_v[0]
        invaded[k] = v
        hsize -= 1
        heap_w[0] = heap_w[hsize]
        heap_v[0] = heap_v[hsize]
        i = 0
        while True:
            left = 2 * i + 1
            if left >= hsize:
                break
            small = left
            right = left + 1
            if right < hsize and heap_w[right] < heap_w[left]:
                small = right
            if heap_w[i] <= heap_w[small]:
                break
            heap_w[i], heap_w[small] = heap_w[small], heap_w[i]
            heap_v[i], heap_v[small] = heap_v[small], heap_v[i]
            i = small
        for _ in range(2):
            w = _uniform(state)
            parent[ncand] = v
            weight[ncand] = w
            depth[ncand] = depth[v] + 1
            i = hsize
            heap_w[i] = w
            heap_v[i] = ncand
            hsize += 1
            while i > 0:
                up = (i - 1) // 2
                if heap_w[up] <= heap_w[i]:
                    break
                heap_w[i], heap_w[up] = heap_w[up], heap_w[i]
                heap_v[i], heap_v[up] = heap_v[up], heap_v[i]
                i = up
            ncand += 1
    return parent[:ncand], weight[:ncand], depth[:ncand], invaded, heap_w[:hsize].copy()


# ---------------------------------------------------------------------------
# spatially subordinated walks: lattice walk with a trap clock


@njit(cache=True)
def trap_clock_walk(indptr, nbrs, site_depth, drift_per_visit, trap_id,
                    trap_inc, trap_off, queries, budget, seed):
    """Reflected lattice walk whose clock advances only through traps.

    drift_per_visit[s] is a deterministic clock increment per visit to s
    (mean compensation of unresolved small traps); trap_id[s] >= 0 points
    at a resolved trap whose per-visit increments are
    trap_inc[trap_off[i]:trap_off[i+1]].  Positions (site, running max of
    site_depth) are recorded when the clock first exceeds each query.
    status: 0 ok, 1 step budget exhausted, 2 trap increments exhausted.
    """
    state = np.empty(1, np.uint64)
    state[0] = seed
    ntraps = trap_off.shape[0] - 1
    visits = np.zeros(ntraps, np.int64)
    nq = queries.shape[0]
    q_site = np.full(nq, -1, np.int32)
    q_max = np.zeros(nq, np.float64)
    clock = 0.0
    qi = 0
    v = 0
    dmax = site_depth[0]
    clock += drift_per_visit[0]
    tid = trap_id[0]
    if tid >= 0:
        if visits[tid] >= trap_off[tid + 1] - trap_off[tid]:
            return q_site, q_max, 2, 0, clock
        clock += trap_inc[trap_off[tid] + visits[tid]]
        visits[tid] += 1
    while qi < nq and clock > queries[qi]:
        q_site[qi] = v
        q_max[qi] = dmax
        qi += 1
    s = 0
    while qi < nq:
        if s >= budget:
            return q_site, q_max, 1, s, clock
        s += 1
        lo = indptr[v]
        deg = indptr[v + 1] - lo
        v = nbrs[lo + _randint(state, deg)]
        d = site_depth[v]
        if d > dmax:
            dmax = d
        clock += drift_per_visit[v]
        tid = trap_id[v]
        if tid >= 0:
            k = visits[tid]
            if k >= trap_off[tid + 1] - trap_off[tid]:
                return q_site, q_max, 2, s, clock
            clock += trap_inc[trap_off[tid] + k]
            visits[tid] += 1
        while qi < nq and clock > queries[qi]:
            q_site[qi] = v
            q_max[qi] = dmax
            qi += 1
    return q_site, q_max, 0, s, clock


@njit(cache=True)
def srw_running_max(queries, seed):
    """Running maximum of a simple random walk on Z at the query steps."""
    state = np.empty(1, np.uint64)
    state[0] = seed
    nq = queries.shape[0]
    out = np.empty(nq, np.int64)
    x = 0
    xmax = 0
    qi = 0
    while qi < nq and queries[qi] == 0:
        out[qi] = 0
        qi += 1
    s = 0
    last = queries[nq - 1]
    while s < last:
        s += 1
        if _uniform(state) < 0.5:
            x += 1
        else:
            x -= 1
        if x > xmax:
            xmax = x
        while qi < nq and queries[qi] == s:
            out[qi] = xmax
            qi += 1
    return out
