"""Compiled inner loops over flat-array trees.

Distances are accumulated axis by axis in index order, the same order
``model.euclidean_distance`` uses, so a leaf pair's box distance is
bit-identical to the instance distance.
"""

import math

import numpy as np
from numba import njit

# Cumulative weights count as having reached a target within this slack.
# Keeps alpha = 1 reachable despite summation roundoff.
REACH_TOL = 1e-12

TRACE_COLS = 9


@njit(cache=True, inline="always")
def _box_dmin(lo_a, hi_a, i, lo_b, hi_b, j):
    s = 0.0
    for k in range(lo_a.shape[1]):
        g = lo_a[i, k] - hi_b[j, k]
        h = lo_b[j, k] - hi_a[i, k]
        if h > g:
            g = h
        if g > 0.0:
            s += g * g
    return math.sqrt(s)


@njit(cache=True, inline="always")
def _box_dmax(lo_a, hi_a, i, lo_b, hi_b, j):
    s = 0.0
    for k in range(lo_a.shape[1]):
        g = abs(hi_a[i, k] - lo_b[j, k])
        h = abs(hi_b[j, k] - lo_a[i, k])
        if h > g:
            g = h
        s += g * g
    return math.sqrt(s)


@njit(cache=True)
def effective_weights(weight, child_ptr, child_idx, removed):
    n = weight.shape[0]
    dead = removed.copy()
    # parents have larger ids than their children
    for p in range(n - 1, -1, -1):
        if dead[p]:
            for t in range(child_ptr[p], child_ptr[p + 1]):
                dead[child_idx[t]] = True
    eff = np.zeros(n)
    for v in range(n):
        if dead[v]:
            continue
        if child_ptr[v] == child_ptr[v + 1]:
            eff[v] = weight[v]
        else:
            s = 0.0
            for t in range(child_ptr[v], child_ptr[v + 1]):
                s += eff[child_idx[t]]
            eff[v] = s
    return eff


@njit(cache=True)
def weighted_select(vals, w, idx, n, target):
    """Value at which the ascending cumulative weight of ``vals[idx[:n]]`` reaches ``target``.

    Weighted quickselect: ``idx[:n]`` is permuted in place, expected time is
    linear. Elements tied on value are interchangeable, since any order
    among them yields the same value. Returns ``(value, reached)``.
    """
    goal = target - REACH_TOL
    lo = 0
    hi = n
    below = 0.0
    while hi - lo > 24:
        a = vals[idx[lo]]
        b = vals[idx[(lo + hi) >> 1]]
        c = vals[idx[hi - 1]]
        if a > b:
            a, b = b, a
        if b > c:
            b = c
        pivot = a if a > b else b
        # three-way partition of idx[lo:hi] into < pivot, == pivot, > pivot
        lt = lo
        i = lo
        gt = hi
        w_lt = 0.0
        w_eq = 0.0
        while i < gt:
            t = idx[i]
            v = vals[t]
            if v < pivot:
                idx[i] = idx[lt]
                idx[lt] = t
                w_lt += w[t]
                lt += 1
                i += 1
            elif v > pivot:
                gt -= 1
                idx[i] = idx[gt]
                idx[gt] = t
            else:
                w_eq += w[t]
                i += 1
        if below + w_lt >= goal:
            hi = lt
        elif below + w_lt + w_eq >= goal:
            return pivot, True
        else:
            below += w_lt + w_eq
            lo = gt
    # short window: insertion sort, then scan
    for i in range(lo + 1, hi):
        t = idx[i]
        v = vals[t]
        j = i - 1
        while j >= lo and vals[idx[j]] > v:
            idx[j + 1] = idx[j]
            j -= 1
        idx[j + 1] = t
    for i in range(lo, hi):
        below += w[idx[i]]
        if below >= goal:
            return vals[idx[i]], True
    return np.nan, False


@njit(cache=True)
def lower_bound_scan(dmin, w, prev_lower, alpha):
    """Return (new lower bound, weight set aside below the previous bound)."""
    m = dmin.shape[0]
    keep = np.empty(m, dtype=np.int64)
    return _lower_bound(dmin, w, m, prev_lower, alpha, keep)


@njit(cache=True)
def _lower_bound(dmin, w, m, prev_lower, alpha, keep):
    theta = 0.0
    nk = 0
    for t in range(m):
        if dmin[t] < prev_lower:
            theta += w[t]
        else:
            keep[nk] = t
            nk += 1
    target = alpha - theta
    if target <= 0.0:
        return prev_lower, theta
    v, reached = weighted_select(dmin, w, keep, nk, target)
    if reached:
        return v, theta
    return prev_lower, theta


@njit(cache=True)
def upper_bound_scan(dmax, w, prev_upper, alpha):
    """Return (new upper bound, whether the scan reached alpha)."""
    m = dmax.shape[0]
    keep = np.empty(m, dtype=np.int64)
    return _upper_bound(dmax, w, m, prev_upper, alpha, keep)


@njit(cache=True)
def _upper_bound(dmax, w, m, prev_upper, alpha, keep):
    nk = 0
    for t in range(m):
        if dmax[t] <= prev_upper:
            keep[nk] = t
            nk += 1
    v, reached = weighted_select(dmax, w, keep, nk, alpha)
    if reached:
        return v, True
    return prev_upper, False


@njit(cache=True)
def _alive_children(ptr, kids, w, v, out):
    n = 0
    for t in range(ptr[v], ptr[v + 1]):
        c = kids[t]
        if w[c] > 0.0:
            out[n] = c
            n += 1
    return n


@njit(cache=True)
def _leaves_alive(ptr, w, n_nodes):
    n = 0
    for v in range(n_nodes):
        if ptr[v] == ptr[v + 1] and w[v] > 0.0:
            n += 1
    return n


@njit(cache=True, nogil=True)
def alpha_distance_filtered(
    lo_a, hi_a, ptr_a, kids_a, w_a, root_a, lo_b, hi_b, ptr_b, kids_b, w_b, root_b, alpha, trace
):
    """Level-wise filter/refine alpha-distance between two (possibly trimmed) trees.

    ``w_a``/``w_b`` are per-node weights with trimmed subtrees zeroed. Returns
    ``(distance, instance_pairs_enumerated, levels)``; distance is ``inf`` when
    the remaining pair weight cannot reach ``alpha``. When ``trace`` has rows,
    one row per level is written:
    lower, upper, alpha_residual, theta, survivor_weight, theta_total,
    dropped_total, survivor_count, prev_lower.
    """
    total = w_a[root_a] * w_b[root_b]
    if total < alpha - REACH_TOL:
        return np.inf, 0, 0
    lower = _box_dmin(lo_a, hi_a, root_a, lo_b, hi_b, root_b)
    upper = _box_dmax(lo_a, hi_a, root_a, lo_b, hi_b, root_b)
    prev_lower = lower
    prev_upper = upper
    alpha_r = alpha
    # no level holds more entry pairs than there are live leaf pairs
    cap = _leaves_alive(ptr_a, w_a, w_a.shape[0]) * _leaves_alive(ptr_b, w_b, w_b.shape[0])
    pa = np.empty(cap, dtype=np.int64)
    pb = np.empty(cap, dtype=np.int64)
    ca = np.empty(cap, dtype=np.int64)
    cb = np.empty(cap, dtype=np.int64)
    cw = np.empty(cap)
    cmin = np.empty(cap)
    cmax = np.empty(cap)
    scratch = np.empty(cap, dtype=np.int64)
    pa[0] = root_a
    pb[0] = root_b
    m = 1
    theta_total = 0.0
    dropped_total = 0.0
    leaf_a_root = ptr_a[root_a] == ptr_a[root_a + 1]
    leaf_b_root = ptr_b[root_b] == ptr_b[root_b + 1]
    n_inst = 1 if (leaf_a_root and leaf_b_root) else 0
    buf_a = np.empty(kids_a.shape[0] + 1, dtype=np.int64)
    buf_b = np.empty(kids_b.shape[0] + 1, dtype=np.int64)
    level = 0
    while True:
        all_leaf = True
        cnt = 0
        for k in range(m):
            la = ptr_a[pa[k]] == ptr_a[pa[k] + 1]
            lb = ptr_b[pb[k]] == ptr_b[pb[k] + 1]
            if la and lb:
                buf_a[0] = pa[k]
                buf_b[0] = pb[k]
                ca[cnt] = pa[k]
                cb[cnt] = pb[k]
                cw[cnt] = w_a[pa[k]] * w_b[pb[k]]
                d = _box_dmin(lo_a, hi_a, pa[k], lo_b, hi_b, pb[k])
                cmin[cnt] = d
                cmax[cnt] = d
                cnt += 1
                continue
            all_leaf = False
            if la:
                buf_a[0] = pa[k]
                na = 1
            else:
                na = _alive_children(ptr_a, kids_a, w_a, pa[k], buf_a)
            if lb:
                buf_b[0] = pb[k]
                nb = 1
            else:
                nb = _alive_children(ptr_b, kids_b, w_b, pb[k], buf_b)
            for x in range(na):
                u = buf_a[x]
                lu = ptr_a[u] == ptr_a[u + 1]
                for y in range(nb):
                    v = buf_b[y]
                    ca[cnt] = u
                    cb[cnt] = v
                    cw[cnt] = w_a[u] * w_b[v]
                    if lu and ptr_b[v] == ptr_b[v + 1]:
                        d = _box_dmin(lo_a, hi_a, u, lo_b, hi_b, v)
                        cmin[cnt] = d
                        cmax[cnt] = d
                        n_inst += 1
                    else:
                        cmin[cnt] = _box_dmin(lo_a, hi_a, u, lo_b, hi_b, v)
                        cmax[cnt] = _box_dmax(lo_a, hi_a, u, lo_b, hi_b, v)
                    cnt += 1
        if all_leaf:
            break
        lower, _ = _lower_bound(cmin, cw, cnt, prev_lower, alpha_r, scratch)
        upper, _ = _upper_bound(cmax, cw, cnt, prev_upper, alpha_r, scratch)
        theta = 0.0
        dropped = 0.0
        survivors = 0.0
        nk = 0
        for s in range(cnt):
            if cmin[s] > upper:
                dropped += cw[s]
            elif cmax[s] < lower:
                theta += cw[s]
            else:
                survivors += cw[s]
                pa[nk] = ca[s]
                pb[nk] = cb[s]
                nk += 1
        m = nk
        alpha_r -= theta
        theta_total += theta
        dropped_total += dropped
        if level < trace.shape[0]:
            trace[level, 0] = lower
            trace[level, 1] = upper
            trace[level, 2] = alpha_r
            trace[level, 3] = theta
            trace[level, 4] = survivors
            trace[level, 5] = theta_total
            trace[level, 6] = dropped_total
            trace[level, 7] = nk
            trace[level, 8] = prev_lower
        prev_lower = lower
        prev_upper = upper
        level += 1

    if m == 0:
        return np.inf, n_inst, level
    # the leaf pairs sit in ca/cb/cw with their exact distances in cmin
    for k in range(m):
        scratch[k] = k
    d, reached = weighted_select(cmin, cw, scratch, m, alpha_r)
    if reached:
        return d, n_inst, level
    return np.inf, n_inst, level


@njit(cache=True, nogil=True)
def pruning_walk(lo, hi, ptr, kids, w, root, box_lo, box_hi, eps, stop, out_ids):
    """Collect maximal Eps-pruning entries of a local tree against one box.

    Level-order from the root. An entry whose min distance to the box
    exceeds ``eps`` is recorded and not descended; entries whose max
    distance is within ``eps`` cannot contain pruning entries and are not
    descended either. Stops once the recorded weight exceeds ``stop``.
    Returns ``(stopped, recorded_weight, n_recorded)``.
    """
    n = w.shape[0]
    blo = box_lo.reshape(1, -1)
    bhi = box_hi.reshape(1, -1)
    cur = np.empty(n, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    cur[0] = root
    ncur = 1
    delta = 0.0
    nrec = 0
    while ncur > 0:
        nn = 0
        for k in range(ncur):
            e = cur[k]
            if _box_dmin(lo, hi, e, blo, bhi, 0) > eps:
                out_ids[nrec] = e
                nrec += 1
                delta += w[e]
                if delta > stop:
                    return True, delta, nrec
            elif _box_dmax(lo, hi, e, blo, bhi, 0) > eps:
                for t in range(ptr[e], ptr[e + 1]):
                    nxt[nn] = kids[t]
                    nn += 1
        cur, nxt = nxt, cur
        ncur = nn
    return False, delta, nrec
