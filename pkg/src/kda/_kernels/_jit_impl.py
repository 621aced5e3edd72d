"""Numba-compiled kernel twins of ``_numpy_impl``.

Explicit loops, identical tie-break and repair semantics. Compiled lazily on
first call; cache=True persists the machine code across processes.
"""

import numpy as np
from numba import njit

EUCLIDEAN = 0
MANHATTAN = 1


@njit(cache=True)
def pairwise_dist(X, metric):
    n, d = X.shape
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            if metric == EUCLIDEAN:
                for m in range(d):
                    t = X[i, m] - X[j, m]
                    acc += t * t
                acc = np.sqrt(acc)
            else:
                for m in range(d):
                    acc += abs(X[i, m] - X[j, m])
            out[i, j] = acc
            out[j, i] = acc
    return out


@njit(cache=True)
def lloyd_run(X, centroids0, max_steps, metric):
    n, d = X.shape
    k = centroids0.shape[0]
    cents = centroids0.copy()
    assign = np.full(n, -1, dtype=np.int64)
    hist = np.zeros(max_steps, dtype=np.float64)
    new_assign = np.zeros(n, dtype=np.int64)
    own = np.zeros(n, dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    sums = np.zeros((k, d), dtype=np.float64)
    iters = 0
    for step in range(max_steps):
        counts[:] = 0
        for i in range(n):
            best = np.inf
            bj = 0
            for j in range(k):
                acc = 0.0
                if metric == EUCLIDEAN:
                    for m in range(d):
                        t = X[i, m] - cents[j, m]
                        acc += t * t
                else:
                    for m in range(d):
                        acc += abs(X[i, m] - cents[j, m])
                if acc < best:  # strict: ties keep the lowest cluster index
                    best = acc
                    bj = j
            new_assign[i] = bj
            own[i] = best
            counts[bj] += 1
        for j in range(k):
            if counts[j] != 0:
                continue
            pick = -1
            best_d = -1.0
            for idx in range(n):
                if counts[new_assign[idx]] <= 1:
                    continue
                if own[idx] > best_d:
                    best_d = own[idx]
                    pick = idx
            counts[new_assign[pick]] -= 1
            new_assign[pick] = j
            counts[j] = 1
        sums[:, :] = 0.0
        for i in range(n):
            c = new_assign[i]
            for m in range(d):
                sums[c, m] += X[i, m]
        for j in range(k):
            for m in range(d):
                cents[j, m] = sums[j, m] / counts[j]
        sse = 0.0
        for i in range(n):
            c = new_assign[i]
            for m in range(d):
                t = X[i, m] - cents[c, m]
                sse += t * t
        hist[step] = sse
        iters = step + 1
        same = True
        for i in range(n):
            if new_assign[i] != assign[i]:
                same = False
                break
        if same:
            break
        assign[:] = new_assign
    return cents, assign.copy(), hist, iters


@njit(cache=True)
def dbscan_labels(D, eps, min_pts):
    n = D.shape[0]
    core = np.zeros(n, dtype=np.bool_)
    for i in range(n):
        cnt = 0
        for j in range(n):
            if D[i, j] <= eps:
                cnt += 1
        core[i] = cnt >= min_pts
    labels = np.full(n, -2, dtype=np.int64)
    stack = np.zeros(n, dtype=np.int64)
    cid = 0
    for i in range(n):
        if labels[i] != -2 or not core[i]:
            if labels[i] == -2 and not core[i]:
                labels[i] = -1
            continue
        labels[i] = cid
        stack[0] = i
        top = 1
        while top > 0:
            top -= 1
            q = stack[top]
            for j in range(n):
                if D[q, j] <= eps and labels[j] < 0:
                    labels[j] = cid
                    if core[j]:
                        stack[top] = j
                        top += 1
        cid += 1
    return labels


@njit(cache=True)
def lof_from_dmat(D, k):
    n = D.shape[0]
    if n == 1:
        return np.ones(1, dtype=np.float64)
    kdist = np.empty(n, dtype=np.float64)
    for i in range(n):
        row = D[i].copy()
        row[i] = np.inf
        row.sort()
        kdist[i] = row[k - 1]
    lrd = np.empty(n, dtype=np.float64)
    for i in range(n):
        s = 0.0
        cnt = 0
        for j in range(n):
            if j != i and D[i, j] <= kdist[i]:
                r = kdist[j] if kdist[j] > D[i, j] else D[i, j]
                s += r
                cnt += 1
        lrd[i] = cnt / s if s > 0.0 else np.inf
    lof = np.empty(n, dtype=np.float64)
    for i in range(n):
        if np.isinf(lrd[i]):
            lof[i] = 1.0
        else:
            s = 0.0
            cnt = 0
            for j in range(n):
                if j != i and D[i, j] <= kdist[i]:
                    s += lrd[j]
                    cnt += 1
            lof[i] = (s / cnt) / lrd[i]
    return lof


@njit(cache=True)
def average_link(D):
    n = D.shape[0]
    merge_a = np.zeros(n - 1, dtype=np.int64)
    merge_b = np.zeros(n - 1, dtype=np.int64)
    heights = np.zeros(n - 1, dtype=np.float64)
    if n == 1:
        return merge_a, merge_b, heights
    W = D.copy()
    for i in range(n):
        W[i, i] = np.inf
    active = np.ones(n, dtype=np.bool_)
    node_id = np.arange(n).astype(np.int64)
    size = np.ones(n, dtype=np.int64)
    min_leaf = np.arange(n).astype(np.int64)
    for t in range(n - 1):
        best_d = np.inf
        bi = -1
        bj = -1
        b_lo = -1
        b_hi = -1
        for i in range(n):
            if not active[i]:
                continue
            for j in range(i + 1, n):
                if not active[j]:
                    continue
                dv = W[i, j]
                if dv > best_d:
                    continue
                lo = min_leaf[i]
                hi = min_leaf[j]
                if lo > hi:
                    lo, hi = hi, lo
                if dv < best_d or lo < b_lo or (lo == b_lo and hi < b_hi):
                    best_d = dv
                    bi = i
                    bj = j
                    b_lo = lo
                    b_hi = hi
        if min_leaf[bi] <= min_leaf[bj]:
            a, b = bi, bj
        else:
            a, b = bj, bi
        merge_a[t] = node_id[a]
        merge_b[t] = node_id[b]
        heights[t] = best_d
        sa = size[a]
        sb = size[b]
        for kk in range(n):
            if active[kk] and kk != a and kk != b:
                dnew = (sa * W[a, kk] + sb * W[b, kk]) / (sa + sb)
                W[a, kk] = dnew
                W[kk, a] = dnew
        active[b] = False
        node_id[a] = n + t
        size[a] = sa + sb
    return merge_a, merge_b, heights
