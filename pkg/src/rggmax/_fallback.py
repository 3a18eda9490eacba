"""Numpy implementations of the compiled kernels.

Signatures and results match :mod:`rggmax._kernels` exactly: distances are
accumulated coordinate by coordinate as ``x_j - x_i`` in the same order, so
the floats agree bit for bit.
"""

import itertools

import numpy as np


def pair_distances(pts, ii, jj, norm):
    """Norm of ``pts[jj] - pts[ii]`` row by row, accumulated per coordinate."""
    s = np.zeros(len(ii), dtype=np.float64)
    for c in range(pts.shape[1]):
        t = pts[jj, c] - pts[ii, c]
        if norm == 0:
            s += t * t
        elif norm == 1:
            np.maximum(s, np.abs(t), out=s)
        else:
            s += np.abs(t)
    if norm == 0:
        np.sqrt(s, out=s)
    return s


def _keys(pts, cell, cmin, strides):
    cells = np.floor(pts / cell).astype(np.int64) - cmin
    return cells, cells @ strides


def layout_from_cells(pts, cell, cmin, dims, strides):
    n = pts.shape[0]
    if n == 0:
        return np.zeros(1, dtype=np.int64), np.empty(0, dtype=np.int64)
    ncells = int(np.prod(dims))
    _, keys = _keys(pts, cell, cmin, strides)
    order = np.argsort(keys, kind="stable").astype(np.int64)
    start = np.zeros(ncells + 1, dtype=np.int64)
    np.cumsum(np.bincount(keys, minlength=ncells), out=start[1:])
    return start, order


def _reach(pts, cell, r):
    # Largest cell offset any point's search box can touch, using the same
    # rounding margin as the compiled box computation.
    rr = r * (1.0 + 1e-12) + 1e-15 * (np.abs(pts) + r)
    base = np.floor(pts / cell)
    lo = base - np.floor((pts - rr) / cell)
    hi = np.floor((pts + rr) / cell) - base
    return int(max(lo.max(), hi.max()))


def _candidates(pts, cell, cmin, dims, strides, start, order, r):
    """Yield index arrays ``(I, J)`` covering every pair ``i < j`` whose cells are within reach."""
    n, d = pts.shape
    m = _reach(pts, cell, r)
    counts = np.diff(start)
    occupied = np.flatnonzero(counts)
    # unravel occupied keys into cell coordinates
    coords = np.empty((len(occupied), d), dtype=np.int64)
    rem = occupied.copy()
    for c in range(d):
        coords[:, c] = rem // strides[c]
        rem = rem % strides[c]
    for off in itertools.product(range(-m, m + 1), repeat=d):
        nb = coords + np.asarray(off, dtype=np.int64)
        ok = np.all((nb >= 0) & (nb < dims), axis=1)
        a = occupied[ok]
        b = nb[ok] @ strides
        ca = counts[a]
        cb = counts[b]
        tot = ca * cb
        keep = tot > 0
        a, b, ca, cb, tot = a[keep], b[keep], ca[keep], cb[keep], tot[keep]
        if len(a) == 0:
            continue
        g = np.repeat(np.arange(len(a)), tot)
        first = np.concatenate(([0], np.cumsum(tot)[:-1]))
        local = np.arange(int(tot.sum()), dtype=np.int64) - first[g]
        ii = order[start[a[g]] + local // cb[g]]
        jj = order[start[b[g]] + local % cb[g]]
        sel = ii < jj
        yield ii[sel], jj[sel]


def range_pairs(pts, cell, cmin, dims, strides, start, order, r, norm):
    out_i, out_j, out_d = [], [], []
    if pts.shape[0] > 0:
        for ii, jj in _candidates(pts, cell, cmin, dims, strides, start, order, r):
            dd = pair_distances(pts, ii, jj, norm)
            hit = dd <= r
            out_i.append(ii[hit])
            out_j.append(jj[hit])
            out_d.append(dd[hit])
    if not out_i:
        return np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.float64)
    ii = np.concatenate(out_i)
    jj = np.concatenate(out_j)
    dd = np.concatenate(out_d)
    perm = np.lexsort((jj, ii))
    return ii[perm], jj[perm], dd[perm]


def range_count(pts, cell, cmin, dims, strides, start, order, r, norm):
    n = pts.shape[0]
    ii, jj, _ = range_pairs(pts, cell, cmin, dims, strides, start, order, r, norm)
    return (np.bincount(ii, minlength=n) + np.bincount(jj, minlength=n)).astype(np.int64)


def _row(pts, i, norm):
    n = pts.shape[0]
    others = np.concatenate((np.arange(i), np.arange(i + 1, n))).astype(np.int64)
    return others, pair_distances(pts, np.full(len(others), i), others, norm)


def range_query(pts, cell, cmin, dims, strides, start, order, i, r, norm):
    others, dd = _row(pts, i, norm)
    return others[dd <= r]


def knn_distance(pts, cell, cmin, dims, strides, start, order, i, k, norm):
    others, dd = _row(pts, i, norm)
    if k > len(dd):
        return np.inf
    return float(np.partition(dd, k - 1)[k - 1])


def threshold_radius(pts, cell, cmin, dims, strides, start, order, k, norm):
    n = pts.shape[0]
    if k > n - 1:
        return np.inf
    # Any single point's k-NN distance bounds S_k from above; a few probes tighten it.
    probe = np.linspace(0, n - 1, min(n, 64)).astype(np.int64)
    r0 = min(knn_distance(pts, cell, cmin, dims, strides, start, order, int(p), k, norm)
             for p in probe)
    ii, jj, dd = range_pairs(pts, cell, cmin, dims, strides, start, order, r0, norm)
    owner = np.concatenate((ii, jj))
    dist = np.concatenate((dd, dd))
    perm = np.lexsort((dist, owner))
    owner, dist = owner[perm], dist[perm]
    counts = np.bincount(owner, minlength=n)
    first = np.concatenate(([0], np.cumsum(counts)[:-1]))
    full = np.flatnonzero(counts >= k)
    return float(dist[first[full] + k - 1].min())


def canonical_codes(codes, srcpos):
    codes = np.asarray(codes, dtype=np.int64)
    npairs = srcpos.shape[1]
    best = codes.copy()
    weights = np.left_shift(np.int64(1), np.arange(npairs - 1, -1, -1, dtype=np.int64))
    for row in srcpos:
        v = np.zeros_like(codes)
        for q in range(npairs):
            v |= ((codes >> row[q]) & 1) * weights[q]
        np.minimum(best, v, out=best)
    return best
