"""Pure-numpy kernel implementations.

The numba twins in ``_jit_impl`` mirror these function-for-function; both
backends must keep identical tie-break and repair semantics so results agree
across the ``KDA_NUMBA`` switch.
"""

import numpy as np

EUCLIDEAN = 0
MANHATTAN = 1

_INF = np.inf


def pairwise_dist(X, metric):
    """Full symmetric distance matrix over the rows of X."""
    diff = X[:, None, :] - X[None, :, :]
    if metric == EUCLIDEAN:
        return np.sqrt((diff * diff).sum(axis=2))
    return np.abs(diff).sum(axis=2)


def _point_centroid_dist(X, cents, metric):
    diff = X[:, None, :] - cents[None, :, :]
    if metric == EUCLIDEAN:
        # squared distances: same argmin, cheaper
        return (diff * diff).sum(axis=2)
    return np.abs(diff).sum(axis=2)


def lloyd_run(X, centroids0, max_steps, metric):
    """One Lloyd run from the given initial centroids.

    Returns (centroids, assignment, sse_history, n_iters). The SSE history is
    the squared-Euclidean objective recorded after each recenter step;
    entries past ``n_iters`` are unused. Empty clusters are repaired by
    stealing the point farthest from its assigned centroid (ascending empty
    index, never emptying another cluster).
    """
    n = X.shape[0]
    k = centroids0.shape[0]
    cents = centroids0.copy()
    assign = np.full(n, -1, dtype=np.int64)
    hist = np.zeros(max_steps, dtype=np.float64)
    iters = 0
    for step in range(max_steps):
        D = _point_centroid_dist(X, cents, metric)
        new_assign = np.argmin(D, axis=1).astype(np.int64)  # ties: lowest index
        counts = np.bincount(new_assign, minlength=k)
        if (counts == 0).any():
            own = D[np.arange(n), new_assign]
            for j in range(k):
                if counts[j] != 0:
                    continue
                pick = -1
                best_d = -1.0
                for idx in range(n):
                    # stolen points become singletons and are shielded by the
                    # counts > 1 rule, so no separate bookkeeping is needed
                    if counts[new_assign[idx]] <= 1:
                        continue
                    if own[idx] > best_d:  # strict: ties keep the lowest index
                        best_d = own[idx]
                        pick = idx
                counts[new_assign[pick]] -= 1
                new_assign[pick] = j
                counts[j] = 1
        for j in range(k):
            cents[j] = X[new_assign == j].mean(axis=0)
        resid = X - cents[new_assign]
        hist[step] = (resid * resid).sum()
        iters = step + 1
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return cents, assign, hist, iters


def dbscan_labels(D, eps, min_pts):
    """Density clustering labels from a distance matrix; -1 marks noise.

    A point is core when it has >= min_pts neighbors within eps, itself
    included. Clusters are numbered in order of discovery scanning points by
    ascending index.
    """
    n = D.shape[0]
    neigh = D <= eps
    core = neigh.sum(axis=1) >= min_pts
    labels = np.full(n, -2, dtype=np.int64)  # -2 = unvisited
    cid = 0
    for i in range(n):
        if labels[i] != -2 or not core[i]:
            if labels[i] == -2 and not core[i]:
                labels[i] = -1
            continue
        labels[i] = cid
        queue = [i]
        while queue:
            q = queue.pop()
            for j in np.flatnonzero(neigh[q]):
                if labels[j] >= 0:
                    continue
                labels[j] = cid
                if core[j]:
                    queue.append(j)
        cid += 1
    return labels


def lof_from_dmat(D, k):
    """Local outlier factor for every point given the distance matrix.

    k-distance counts the k-th nearest point excluding self; the
    neighborhood includes every point at distance <= k-distance, so ties
    widen it. Points whose reachability sum is zero (all neighbors
    coincident) score 1.0 by convention; their finite-density neighbors
    inherit +inf.
    """
    n = D.shape[0]
    if n == 1:
        return np.ones(1, dtype=np.float64)
    kdist = np.empty(n, dtype=np.float64)
    for i in range(n):
        row = D[i].copy()
        row[i] = _INF
        row.sort()
        kdist[i] = row[k - 1]
    neigh = []
    for i in range(n):
        mask = D[i] <= kdist[i]
        mask[i] = False
        neigh.append(np.flatnonzero(mask))
    lrd = np.empty(n, dtype=np.float64)
    for i in range(n):
        nb = neigh[i]
        s = np.maximum(kdist[nb], D[i, nb]).sum()
        lrd[i] = len(nb) / s if s > 0.0 else _INF
    lof = np.empty(n, dtype=np.float64)
    for i in range(n):
        if np.isinf(lrd[i]):
            lof[i] = 1.0
        else:
            lof[i] = lrd[neigh[i]].mean() / lrd[i]
    return lof


def average_link(D):
    """Average-linkage merge sequence from a distance matrix.

    Returns (merge_a, merge_b, heights) with scipy-style node ids: leaves are
    0..n-1, the merge at step t creates node n+t. Ties on linkage distance
    resolve to the pair with the lexicographically smallest (min leaf of a,
    min leaf of b); merge_a is always the smaller-min-leaf side. Uses the
    Lance-Williams update, which is exact for average linkage.
    """
    n = D.shape[0]
    merge_a = np.zeros(n - 1, dtype=np.int64)
    merge_b = np.zeros(n - 1, dtype=np.int64)
    heights = np.zeros(n - 1, dtype=np.float64)
    if n == 1:
        return merge_a, merge_b, heights
    W = D.astype(np.float64).copy()
    np.fill_diagonal(W, _INF)
    active = np.ones(n, dtype=bool)
    node_id = np.arange(n, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    min_leaf = np.arange(n, dtype=np.int64)
    for t in range(n - 1):
        W_act = np.where(active[:, None] & active[None, :], W, _INF)
        m = W_act.min()
        ii, jj = np.nonzero(W_act == m)
        best = None
        for i, j in zip(ii, jj):
            if i >= j:
                continue
            lo, hi = min_leaf[i], min_leaf[j]
            if lo > hi:
                lo, hi = hi, lo
            key = (lo, hi)
            if best is None or key < best[0]:
                best = (key, i, j)
        _, bi, bj = best
        # slot a keeps the merged cluster; a is the smaller-min-leaf side
        a, b = (bi, bj) if min_leaf[bi] <= min_leaf[bj] else (bj, bi)
        merge_a[t] = node_id[a]
        merge_b[t] = node_id[b]
        heights[t] = m
        sa, sb = size[a], size[b]
        for kk in range(n):
            if active[kk] and kk != a and kk != b:
                d = (sa * W[a, kk] + sb * W[b, kk]) / (sa + sb)
                W[a, kk] = d
                W[kk, a] = d
        active[b] = False
        node_id[a] = n + t
        size[a] = sa + sb
    return merge_a, merge_b, heights
