"""Compiled CART internals: split search, tree growth, and leaf lookup.

Everything here operates on plain float64/int64 arrays so the numba-compiled
code stays bit-reproducible for a fixed seed (no threading, no fastmath).
"""

import numpy as np
from numba import njit


@njit(cache=True)
def best_split_scan(X, y, w, order, lo, hi, feats, n_classes, min_leaf):
    """Best (feature, threshold, decrease) over samples order[lo:hi].

    Thresholds are midpoints between consecutive distinct sorted values; the
    left side takes values <= threshold. Candidate features must be ascending;
    ties keep the first (lowest feature, then lowest threshold) candidate.
    Returns (found, feature, threshold, decrease).
    """
    n = hi - lo
    parent = np.zeros(n_classes, np.float64)
    total_w = 0.0
    for p in range(lo, hi):
        i = order[p]
        parent[y[i]] += w[i]
        total_w += w[i]
    g_parent = 1.0
    for c in range(n_classes):
        pc = parent[c] / total_w
        g_parent -= pc * pc

    best_found = False
    best_f = -1
    best_thr = 0.0
    best_dec = 0.0
    v = np.empty(n, np.float64)
    vs = np.empty(n, np.float64)
    wcls = np.empty((n + 1, n_classes), np.float64)
    for fi in range(feats.shape[0]):
        f = feats[fi]
        for p in range(n):
            v[p] = X[order[lo + p], f]
        srt = np.argsort(v)
        for c in range(n_classes):
            wcls[0, c] = 0.0
        for p in range(n):
            i = order[lo + srt[p]]
            for c in range(n_classes):
                wcls[p + 1, c] = wcls[p, c]
            wcls[p + 1, y[i]] += w[i]
            vs[p] = v[srt[p]]
        for p in range(n - 1):
            if vs[p] == vs[p + 1]:
                continue
            thr = (vs[p] + vs[p + 1]) / 2.0
            q = p + 1
            if thr == vs[p + 1]:
                # midpoint rounded up onto the next value: <= thr absorbs its run
                while q < n and vs[q] == vs[p + 1]:
                    q += 1
                if q == n:
                    continue
            if q < min_leaf or n - q < min_leaf:
                continue
            wl = 0.0
            wr = 0.0
            for c in range(n_classes):
                wl += wcls[q, c]
                wr += wcls[n, c] - wcls[q, c]
            gl = 1.0
            gr = 1.0
            for c in range(n_classes):
                pl = wcls[q, c] / wl
                pr = (wcls[n, c] - wcls[q, c]) / wr
                gl -= pl * pl
                gr -= pr * pr
            dec = g_parent - (wl * gl + wr * gr) / total_w
            if dec > 0.0 and (not best_found or dec > best_dec):
                best_found = True
                best_f = f
                best_thr = thr
                best_dec = dec
    return best_found, best_f, best_thr, best_dec


@njit(cache=True)
def grow_tree(X, y, w, n_classes, max_depth, min_leaf, m_try, seed, bootstrap):
    """Grow one CART tree; returns (feature, threshold, left, right, counts).

    feature[i] == -1 marks a leaf. max_depth < 0 means unlimited. With
    bootstrap, the sample is drawn here so the whole tree depends only on the
    seed; per-node feature subsets are drawn from the same stream.
    """
    np.random.seed(seed)
    n_total = X.shape[0]
    d = X.shape[1]
    order = np.empty(n_total, np.int64)
    if bootstrap:
        for i in range(n_total):
            order[i] = np.random.randint(0, n_total)
    else:
        for i in range(n_total):
            order[i] = i

    max_nodes = 2 * n_total + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    counts = np.zeros((max_nodes, n_classes), np.float64)
    stack = np.empty((max_nodes, 4), np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n_total
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    feats_all = np.arange(d)
    buf = np.empty(n_total, np.int64)

    while top > 0:
        top -= 1
        node = stack[top, 0]
        lo = stack[top, 1]
        hi = stack[top, 2]
        depth = stack[top, 3]
        for p in range(lo, hi):
            counts[node, y[order[p]]] += w[order[p]]
        n_present = 0
        for c in range(n_classes):
            if counts[node, c] > 0.0:
                n_present += 1
        n_samp = hi - lo
        if (
            n_present <= 1
            or n_samp < 2
            or n_samp < 2 * min_leaf
            or (max_depth >= 0 and depth >= max_depth)
        ):
            continue
        if m_try >= d:
            feats = feats_all
        else:
            fc = feats_all.copy()
            for i in range(m_try):
                j = i + np.random.randint(0, d - i)
                tmp = fc[i]
                fc[i] = fc[j]
                fc[j] = tmp
            feats = np.sort(fc[:m_try])
        found, f, thr, dec = best_split_scan(
            X, y, w, order, lo, hi, feats, n_classes, min_leaf
        )
        if not found:
            continue
        a = 0
        nl = 0
        for p in range(lo, hi):
            if X[order[p], f] <= thr:
                nl += 1
        b = nl
        for p in range(lo, hi):
            i = order[p]
            if X[i, f] <= thr:
                buf[a] = i
                a += 1
            else:
                buf[b] = i
                b += 1
        for p in range(n_samp):
            order[lo + p] = buf[p]
        feature[node] = f
        threshold[node] = thr
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        left[node] = lid
        right[node] = rid
        stack[top, 0] = rid
        stack[top, 1] = lo + nl
        stack[top, 2] = hi
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = lid
        stack[top, 1] = lo
        stack[top, 2] = lo + nl
        stack[top, 3] = depth + 1
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        counts[:n_nodes].copy(),
    )


@njit(cache=True)
def apply_tree(feature, threshold, left, right, X):
    """Leaf node index for every row of X."""
    n = X.shape[0]
    out = np.empty(n, np.int64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out
