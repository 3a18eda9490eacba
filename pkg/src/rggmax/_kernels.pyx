# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for the cell-list index and small-graph canonicalization.

Every function here has a numpy twin in :mod:`rggmax._fallback` with the same
signature and bitwise-identical results.  Distances are always evaluated as
``x_j - x_i`` coordinate by coordinate in ascending order, so both backends
(and any brute-force oracle written the same way) produce identical floats.
No fast-math: closed-ball tests must agree exactly.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, floor, INFINITY
from libc.stdint cimport int64_t
from libc.stdlib cimport malloc, free

cnp.import_array()

DEF MAXDIM = 16


cdef inline double _dist(const double* p, Py_ssize_t i, Py_ssize_t j, int d, int norm) noexcept nogil:
    cdef double s = 0.0
    cdef double t
    cdef int c
    if norm == 0:
        for c in range(d):
            t = p[j * d + c] - p[i * d + c]
            s += t * t
        return sqrt(s)
    elif norm == 1:
        for c in range(d):
            t = fabs(p[j * d + c] - p[i * d + c])
            if t > s:
                s = t
        return s
    else:
        for c in range(d):
            s += fabs(p[j * d + c] - p[i * d + c])
        return s


cdef inline bint _cell_box(const double* x, int d, double cell, double r,
                           const int64_t* cmin, const int64_t* dims,
                           int64_t* lo, int64_t* hi) noexcept nogil:
    # Cell range covering [x - r, x + r] per axis with a rounding margin;
    # returns False when the box misses the grid.
    cdef int c
    cdef double rr, a, b
    for c in range(d):
        rr = r * (1.0 + 1e-12) + 1e-15 * (fabs(x[c]) + r)
        a = floor((x[c] - rr) / cell) - <double>cmin[c]
        b = floor((x[c] + rr) / cell) - <double>cmin[c]
        if a < 0.0:
            a = 0.0
        if b > <double>(dims[c] - 1):
            b = <double>(dims[c] - 1)
        if a > b:
            return False
        lo[c] = <int64_t>a
        hi[c] = <int64_t>b
    return True


def layout_from_cells(double[:, ::1] pts, double cell, int64_t[::1] cmin,
                      int64_t[::1] dims, int64_t[::1] strides):
    """Counting sort of points into cells; returns ``(cell_start, order)``."""
    cdef Py_ssize_t n = pts.shape[0]
    cdef int d = pts.shape[1]
    cdef int64_t ncells = 1
    cdef int c
    for c in range(d):
        ncells *= dims[c]
    if n == 0:
        ncells = 0
    cdef cnp.ndarray[int64_t, ndim=1] start_arr = np.zeros(ncells + 1, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] order_arr = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] keys_arr = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] start = start_arr
    cdef int64_t[::1] order = order_arr
    cdef int64_t[::1] keys = keys_arr
    cdef Py_ssize_t i
    cdef int64_t key, pos
    with nogil:
        for i in range(n):
            key = 0
            for c in range(d):
                key += (<int64_t>floor(pts[i, c] / cell) - cmin[c]) * strides[c]
            keys[i] = key
            start[key + 1] += 1
        for key in range(ncells):
            start[key + 1] += start[key]
        # stable placement: ascending index within each cell
        for i in range(n):
            key = keys[i]
            pos = start[key]
            order[pos] = i
            start[key] = pos + 1
        for key in range(ncells, 0, -1):
            start[key] = start[key - 1]
        if ncells > 0:
            start[0] = 0
    return start_arr, order_arr


def range_count(double[:, ::1] pts, double cell, int64_t[::1] cmin, int64_t[::1] dims,
                int64_t[::1] strides, int64_t[::1] start, int64_t[::1] order,
                double r, int norm):
    """Number of ``j != i`` with ``||x_j - x_i|| <= r`` for every ``i``."""
    cdef Py_ssize_t n = pts.shape[0]
    cdef int d = pts.shape[1]
    cdef cnp.ndarray[int64_t, ndim=1] out_arr = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    if n == 0:
        return out_arr
    cdef const double* p = &pts[0, 0]
    cdef int64_t lo[MAXDIM]
    cdef int64_t hi[MAXDIM]
    cdef int64_t cur[MAXDIM]
    cdef Py_ssize_t i, idx, j
    cdef int64_t key, cnt
    cdef int c
    with nogil:
        for i in range(n):
            if not _cell_box(p + i * d, d, cell, r, &cmin[0], &dims[0], lo, hi):
                continue
            cnt = 0
            for c in range(d):
                cur[c] = lo[c]
            while True:
                key = 0
                for c in range(d):
                    key += cur[c] * strides[c]
                for idx in range(start[key], start[key + 1]):
                    j = order[idx]
                    if j != i and _dist(p, i, j, d, norm) <= r:
                        cnt += 1
                c = d - 1
                while c >= 0:
                    cur[c] += 1
                    if cur[c] <= hi[c]:
                        break
                    cur[c] = lo[c]
                    c -= 1
                if c < 0:
                    break
            out[i] = cnt
    return out_arr


cdef Py_ssize_t _pairs_pass(const double* p, Py_ssize_t n, int d, double cell,
                            const int64_t* cmin, const int64_t* dims, const int64_t* strides,
                            const int64_t* start, const int64_t* order, double r, int norm,
                            int64_t* out_i, int64_t* out_j, double* out_d) noexcept nogil:
    cdef int64_t lo[MAXDIM]
    cdef int64_t hi[MAXDIM]
    cdef int64_t cur[MAXDIM]
    cdef Py_ssize_t i, idx, j, m = 0
    cdef int64_t key
    cdef int c
    cdef double dd
    for i in range(n):
        if not _cell_box(p + i * d, d, cell, r, cmin, dims, lo, hi):
            continue
        for c in range(d):
            cur[c] = lo[c]
        while True:
            key = 0
            for c in range(d):
                key += cur[c] * strides[c]
            for idx in range(start[key], start[key + 1]):
                j = order[idx]
                if j > i:
                    dd = _dist(p, i, j, d, norm)
                    if dd <= r:
                        if out_i != NULL:
                            out_i[m] = i
                            out_j[m] = j
                            out_d[m] = dd
                        m += 1
            c = d - 1
            while c >= 0:
                cur[c] += 1
                if cur[c] <= hi[c]:
                    break
                cur[c] = lo[c]
                c -= 1
            if c < 0:
                break
    return m


def range_pairs(double[:, ::1] pts, double cell, int64_t[::1] cmin, int64_t[::1] dims,
                int64_t[::1] strides, int64_t[::1] start, int64_t[::1] order,
                double r, int norm):
    """All pairs ``i < j`` within distance ``r``, sorted by ``(i, j)``, with distances."""
    cdef Py_ssize_t n = pts.shape[0]
    cdef int d = pts.shape[1]
    if n == 0:
        return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.float64))
    cdef const double* p = &pts[0, 0]
    cdef Py_ssize_t m
    with nogil:
        m = _pairs_pass(p, n, d, cell, &cmin[0], &dims[0], &strides[0], &start[0], &order[0],
                        r, norm, NULL, NULL, NULL)
    cdef cnp.ndarray[int64_t, ndim=1] ii = np.empty(m, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] jj = np.empty(m, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] dd = np.empty(m, dtype=np.float64)
    if m > 0:
        with nogil:
            _pairs_pass(p, n, d, cell, &cmin[0], &dims[0], &strides[0], &start[0], &order[0],
                        r, norm, <int64_t*>cnp.PyArray_DATA(ii), <int64_t*>cnp.PyArray_DATA(jj),
                        <double*>cnp.PyArray_DATA(dd))
    # cells are visited out of index order; sort for a canonical result
    perm = np.lexsort((jj, ii))
    return ii[perm], jj[perm], dd[perm]


def range_query(double[:, ::1] pts, double cell, int64_t[::1] cmin, int64_t[::1] dims,
                int64_t[::1] strides, int64_t[::1] start, int64_t[::1] order,
                Py_ssize_t i, double r, int norm):
    """Sorted indices ``j != i`` within distance ``r`` of point ``i``."""
    cdef int d = pts.shape[1]
    cdef const double* p = &pts[0, 0]
    cdef int64_t lo[MAXDIM]
    cdef int64_t hi[MAXDIM]
    cdef int64_t cur[MAXDIM]
    cdef Py_ssize_t idx, j
    cdef int64_t key
    cdef int c
    found = []
    if not _cell_box(p + i * d, d, cell, r, &cmin[0], &dims[0], lo, hi):
        return np.empty(0, dtype=np.int64)
    for c in range(d):
        cur[c] = lo[c]
    while True:
        key = 0
        for c in range(d):
            key += cur[c] * strides[c]
        for idx in range(start[key], start[key + 1]):
            j = order[idx]
            if j != i and _dist(p, i, j, d, norm) <= r:
                found.append(j)
        c = d - 1
        while c >= 0:
            cur[c] += 1
            if cur[c] <= hi[c]:
                break
            cur[c] = lo[c]
            c -= 1
        if c < 0:
            break
    return np.sort(np.asarray(found, dtype=np.int64))


cdef double _knn(const double* p, int d, double cell, const int64_t* cmin, const int64_t* dims,
                 const int64_t* strides, const int64_t* start, const int64_t* order,
                 Py_ssize_t i, int k, int norm, double bound, double* buf) noexcept nogil:
    # Expanding Chebyshev shells of cells around the cell of point i.  Returns the
    # k-th smallest distance, or INFINITY once it is certain to be >= bound.
    cdef int64_t c0[MAXDIM]
    cdef int64_t lo[MAXDIM]
    cdef int64_t hi[MAXDIM]
    cdef int64_t cur[MAXDIM]
    cdef const double* x = p + i * d
    cdef int c, q
    cdef int cnt = 0
    cdef int64_t s = 0, key, off, cheb
    cdef Py_ssize_t idx, j
    cdef double dd, gap, g, xmax = 0.0
    cdef bint covered
    for c in range(d):
        c0[c] = <int64_t>floor(x[c] / cell) - cmin[c]
        if fabs(x[c]) > xmax:
            xmax = fabs(x[c])
    while True:
        for c in range(d):
            lo[c] = c0[c] - s if c0[c] - s > 0 else 0
            hi[c] = c0[c] + s if c0[c] + s < dims[c] - 1 else dims[c] - 1
            cur[c] = lo[c]
        while True:
            cheb = 0
            for c in range(d):
                off = cur[c] - c0[c]
                if off < 0:
                    off = -off
                if off > cheb:
                    cheb = off
            if cheb == s:
                key = 0
                for c in range(d):
                    key += cur[c] * strides[c]
                for idx in range(start[key], start[key + 1]):
                    j = order[idx]
                    if j == i:
                        continue
                    dd = _dist(p, i, j, d, norm)
                    if cnt < k:
                        q = cnt
                        cnt += 1
                    elif dd < buf[k - 1]:
                        q = k - 1
                    else:
                        continue
                    while q > 0 and buf[q - 1] > dd:
                        buf[q] = buf[q - 1]
                        q -= 1
                    buf[q] = dd
            c = d - 1
            while c >= 0:
                cur[c] += 1
                if cur[c] <= hi[c]:
                    break
                cur[c] = lo[c]
                c -= 1
            if c < 0:
                break
        covered = True
        gap = INFINITY
        for c in range(d):
            if c0[c] - s > 0:
                covered = False
                g = x[c] - <double>(c0[c] - s + cmin[c]) * cell
                if g < gap:
                    gap = g
            if c0[c] + s < dims[c] - 1:
                covered = False
                g = <double>(c0[c] + s + 1 + cmin[c]) * cell - x[c]
                if g < gap:
                    gap = g
        if covered:
            break
        # conservative: unexplored points are at least this far away
        gap = gap * (1.0 - 1e-12) - 1e-14 * (1.0 + xmax + cell)
        if cnt == k and buf[k - 1] <= gap:
            break
        if gap >= bound and (cnt < k or buf[k - 1] >= bound):
            return INFINITY
        s += 1
    if cnt < k:
        return INFINITY
    return buf[k - 1]


def knn_distance(double[:, ::1] pts, double cell, int64_t[::1] cmin, int64_t[::1] dims,
                 int64_t[::1] strides, int64_t[::1] start, int64_t[::1] order,
                 Py_ssize_t i, int k, int norm):
    """k-th smallest distance from point ``i`` to the other points."""
    cdef int d = pts.shape[1]
    cdef double* buf = <double*>malloc(k * sizeof(double))
    cdef double out
    try:
        with nogil:
            out = _knn(&pts[0, 0], d, cell, &cmin[0], &dims[0], &strides[0], &start[0],
                       &order[0], i, k, norm, INFINITY, buf)
    finally:
        free(buf)
    return out


def threshold_radius(double[:, ::1] pts, double cell, int64_t[::1] cmin, int64_t[::1] dims,
                     int64_t[::1] strides, int64_t[::1] start, int64_t[::1] order,
                     int k, int norm):
    """``min_i`` of the k-th nearest-neighbour distance, pruned by the running minimum."""
    cdef Py_ssize_t n = pts.shape[0]
    cdef int d = pts.shape[1]
    cdef double* buf = <double*>malloc(k * sizeof(double))
    cdef double best = INFINITY, v
    cdef Py_ssize_t idx
    try:
        with nogil:
            for idx in range(n):
                v = _knn(&pts[0, 0], d, cell, &cmin[0], &dims[0], &strides[0], &start[0],
                         &order[0], order[idx], k, norm, best, buf)
                if v < best:
                    best = v
    finally:
        free(buf)
    return best


def canonical_codes(int64_t[::1] codes, int64_t[:, ::1] srcpos):
    """Minimum permuted adjacency code for each labeled code.

    ``srcpos[p, q]`` is the bit position (from the least significant bit) in the
    original code of the pair that lands on pair slot ``q`` under permutation
    ``p``; slot 0 is the most significant bit of the result.
    """
    cdef Py_ssize_t m = codes.shape[0]
    cdef Py_ssize_t nperm = srcpos.shape[0]
    cdef int npairs = srcpos.shape[1]
    cdef cnp.ndarray[int64_t, ndim=1] out_arr = np.empty(m, dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    cdef Py_ssize_t a, pi
    cdef int q
    cdef int64_t code, best, v
    cdef bint worse
    with nogil:
        for a in range(m):
            code = codes[a]
            best = code
            for pi in range(nperm):
                v = 0
                worse = False
                for q in range(npairs):
                    v = (v << 1) | ((code >> srcpos[pi, q]) & 1)
                    if v > (best >> (npairs - 1 - q)):
                        worse = True
                        break
                if not worse and v < best:
                    best = v
            out[a] = best
    return out_arr
