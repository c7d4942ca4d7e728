# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: B-spline basis evaluation and CART tree growth/traversal.

Mirrors _pykernels operation for operation (same expressions, same scan and
tie-break order, exact integer split tests) so the two backends return
bit-identical arrays. Keep the two files in sync.
"""

from libc.math cimport floor
from libc.stdlib cimport free, malloc

import numpy as np

MAX_TREE_ROWS = 40_000

cdef unsigned long long _GOLD = 0x9E3779B97F4A7C15ULL
cdef unsigned long long _MIX1 = 0xBF58476D1CE4E5B9ULL
cdef unsigned long long _MIX2 = 0x94D049BB133111EBULL


# ---------------------------------------------------------------------------
# B-spline basis

cdef void _basis_point(double xraw, double lo, double hi, double h,
                       int grid_size, int order, double* prevlvl,
                       double* out, double* buf_a, double* buf_b) noexcept nogil:
    """Evaluate all degree-`order` basis functions at one point.

    Writes grid_size+order values to `out` and, when order >= 1, the
    grid_size+order+1 values of the degree-(order-1) level to `prevlvl`.
    buf_a/buf_b are scratch of length grid_size + 2*order.
    """
    cdef int n_int = grid_size + 2 * order
    cdef int j, k, i, m
    cdef double xc, kh, t_i, t_ik1, leftc, rightc
    cdef double* prev = buf_a
    cdef double* cur = buf_b
    cdef double* tmp

    xc = xraw
    if xc < lo:
        xc = lo
    if xc > hi:
        xc = hi
    j = <int>floor((xc - lo) / h)
    if j < 0:
        j = 0
    if j > grid_size - 1:
        j = grid_size - 1
    j += order
    for i in range(n_int):
        prev[i] = 0.0
    prev[j] = 1.0

    for k in range(1, order + 1):
        m = n_int - k
        kh = k * h
        for i in range(m):
            t_i = lo + (i - order) * h
            t_ik1 = lo + (i + k + 1 - order) * h
            leftc = (xc - t_i) / kh
            rightc = (t_ik1 - xc) / kh
            cur[i] = leftc * prev[i] + rightc * prev[i + 1]
        if k == order:
            for i in range(n_int - order + 1):
                prevlvl[i] = prev[i]
        tmp = prev
        prev = cur
        cur = tmp

    for i in range(grid_size + order):
        out[i] = prev[i]


def bspline_basis_batch(x, double lo, double hi, int grid_size, int order):
    """B-spline basis values for each element of `x`, shape (len(x), grid_size+order).

    Inputs are clamped to [lo, hi]; the right boundary belongs to the last
    interior interval so the basis sums to 1 on the closed range.
    """
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t n = xv.shape[0]
    cdef int c = grid_size + order
    out_arr = np.empty((n, c), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double h = (hi - lo) / grid_size
    cdef int n_int = grid_size + 2 * order
    cdef double* buf_a = <double*>malloc(n_int * sizeof(double))
    cdef double* buf_b = <double*>malloc(n_int * sizeof(double))
    cdef double* plvl = <double*>malloc((n_int + 1) * sizeof(double))
    cdef Py_ssize_t e
    if buf_a == NULL or buf_b == NULL or plvl == NULL:
        free(buf_a); free(buf_b); free(plvl)
        raise MemoryError()
    try:
        with nogil:
            for e in range(n):
                _basis_point(xv[e], lo, hi, h, grid_size, order,
                             plvl, &out[e, 0], buf_a, buf_b)
    finally:
        free(buf_a); free(buf_b); free(plvl)
    return out_arr


def bspline_basis_deriv_batch(x, double lo, double hi, int grid_size, int order):
    """Basis values and derivatives w.r.t. the clamped coordinate.

    Returns (basis, deriv), each (len(x), grid_size+order). Callers zero the
    derivative where the raw input fell outside [lo, hi].
    """
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t n = xv.shape[0]
    cdef int c = grid_size + order
    basis_arr = np.empty((n, c), dtype=np.float64)
    deriv_arr = np.zeros((n, c), dtype=np.float64)
    cdef double[:, ::1] basis = basis_arr
    cdef double[:, ::1] deriv = deriv_arr
    cdef double h = (hi - lo) / grid_size
    cdef int n_int = grid_size + 2 * order
    cdef double* buf_a = <double*>malloc(n_int * sizeof(double))
    cdef double* buf_b = <double*>malloc(n_int * sizeof(double))
    cdef double* plvl = <double*>malloc((n_int + 1) * sizeof(double))
    cdef Py_ssize_t e
    cdef int i
    if buf_a == NULL or buf_b == NULL or plvl == NULL:
        free(buf_a); free(buf_b); free(plvl)
        raise MemoryError()
    if order == 0:
        try:
            with nogil:
                for e in range(n):
                    _basis_point(xv[e], lo, hi, h, grid_size, order,
                                 plvl, &basis[e, 0], buf_a, buf_b)
        finally:
            free(buf_a); free(buf_b); free(plvl)
        return basis_arr, deriv_arr
    try:
        with nogil:
            for e in range(n):
                _basis_point(xv[e], lo, hi, h, grid_size, order,
                             plvl, &basis[e, 0], buf_a, buf_b)
                for i in range(c):
                    deriv[e, i] = (plvl[i] - plvl[i + 1]) / h
    finally:
        free(buf_a); free(buf_b); free(plvl)
    return basis_arr, deriv_arr


# ---------------------------------------------------------------------------
# CART tree

def grow_tree(X, y, int max_depth, int min_leaf, int mtry, node_seed):
    """Fit one CART classification tree on binary targets.

    Same contract and output as the numpy fallback: Gini impurity, midpoint
    thresholds over sorted distinct values among mtry per-node sampled
    features (splitmix64 keyed on (node_seed, preorder node id)), >= min_leaf
    rows per side, exact strict impurity improvement. Split decisions depend
    only on class counts at distinct-value boundaries, so this presorted scan
    reproduces the fallback's per-node argsort bit for bit. Returns (feature,
    threshold, left, right, value, count); feature == -1 marks a leaf.
    """
    Xc = np.ascontiguousarray(X, dtype=np.float64)
    yc = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[:, ::1] xv = Xc
    cdef const double[::1] yv = yc
    cdef long n = xv.shape[0]
    cdef int d = <int>xv.shape[1]
    if n > MAX_TREE_ROWS:
        raise ValueError(f"tree kernels support at most {MAX_TREE_ROWS} rows, got {n}")
    cdef long cap = 2 * n + 1
    if max_depth < 62 and (<long>1 << (max_depth + 2)) < cap:
        cap = <long>1 << (max_depth + 2)

    feature_arr = np.full(cap, -1, dtype=np.int32)
    threshold_arr = np.zeros(cap, dtype=np.float64)
    left_arr = np.full(cap, -1, dtype=np.int32)
    right_arr = np.full(cap, -1, dtype=np.int32)
    value_arr = np.zeros(cap, dtype=np.float64)
    count_arr = np.zeros(cap, dtype=np.int32)
    cdef int[::1] feature = feature_arr
    cdef double[::1] threshold = threshold_arr
    cdef int[::1] left = left_arr
    cdef int[::1] right = right_arr
    cdef double[::1] value = value_arr
    cdef int[::1] count = count_arr

    # rows of each node, kept sorted per feature (stable partitions preserve
    # the order established by the initial stable argsort)
    order_arr = np.argsort(Xc, axis=0, kind="stable").astype(np.int32).T.copy()
    cdef int[:, ::1] order = order_arr

    # explicit stack: start, end, depth, parent, is_right
    cdef long* st_start = <long*>malloc((cap + 2) * sizeof(long))
    cdef long* st_end = <long*>malloc((cap + 2) * sizeof(long))
    cdef int* st_depth = <int*>malloc((cap + 2) * sizeof(int))
    cdef long* st_parent = <long*>malloc((cap + 2) * sizeof(long))
    cdef int* st_right = <int*>malloc((cap + 2) * sizeof(int))
    cdef int* tmp = <int*>malloc(n * sizeof(int))
    cdef unsigned char* goes_left = <unsigned char*>malloc(n * sizeof(unsigned char))
    cdef int* arr = <int*>malloc(d * sizeof(int))
    cdef int* feats = <int*>malloc((mtry if mtry > 0 else 1) * sizeof(int))
    if (st_start == NULL or st_end == NULL or st_depth == NULL or
            st_parent == NULL or st_right == NULL or tmp == NULL or
            goes_left == NULL or arr == NULL or feats == NULL):
        free(st_start); free(st_end); free(st_depth); free(st_parent)
        free(st_right); free(tmp); free(goes_left); free(arr); free(feats)
        raise MemoryError()

    cdef unsigned long long seed_u64 = <unsigned long long>(int(node_seed) & 0xFFFFFFFFFFFFFFFF)
    cdef unsigned long long state, z
    cdef long sp, n_nodes, node, start, end, parent, q, m, pos, b
    cdef long nl, nr, pl, pr, best_nl, best_pl, n_l, n_r, pos_l, pos_r
    cdef long a_parent, a_l, a_r
    cdef int depth, is_right, t, i, j, f, best_f, row
    cdef double score, best_score, v1, v2, thr, best_thr, vq

    with nogil:
        sp = 0
        st_start[sp] = 0; st_end[sp] = n; st_depth[sp] = 0
        st_parent[sp] = -1; st_right[sp] = 0
        sp += 1
        n_nodes = 0
        while sp > 0:
            sp -= 1
            start = st_start[sp]; end = st_end[sp]; depth = st_depth[sp]
            parent = st_parent[sp]; is_right = st_right[sp]
            node = n_nodes
            n_nodes += 1
            if parent >= 0:
                if is_right:
                    right[parent] = <int>node
                else:
                    left[parent] = <int>node
            m = end - start
            pos = 0
            for q in range(start, end):
                pos += <long>yv[order[0, q]]
            value[node] = (<double>pos) / m
            count[node] = <int>m
            if depth >= max_depth or m < 2 * min_leaf or pos == 0 or pos == m:
                continue

            a_parent = pos * pos + (m - pos) * (m - pos)
            best_score = -1.0
            best_f = -1
            best_thr = 0.0
            best_nl = 0
            best_pl = 0

            # sample mtry features: splitmix64 Fisher-Yates over range(d)
            for i in range(d):
                arr[i] = i
            state = seed_u64 ^ (<unsigned long long>node * _GOLD)
            for t in range(mtry):
                i = d - 1 - t
                state = state + _GOLD
                z = state
                z = (z ^ (z >> 30)) * _MIX1
                z = (z ^ (z >> 27)) * _MIX2
                z = z ^ (z >> 31)
                j = <int>(z % <unsigned long long>(i + 1))
                feats[t] = arr[j]
                arr[j] = arr[i]
                arr[i] = feats[t]

            for t in range(mtry):
                f = feats[t]
                pl = 0
                for b in range(m - 1):
                    row = order[f, start + b]
                    pl += <long>yv[row]
                    v1 = xv[row, f]
                    v2 = xv[order[f, start + b + 1], f]
                    if v1 == v2:
                        continue
                    nl = b + 1
                    nr = m - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    pr = pos - pl
                    score = ((<double>(pl * pl + (nl - pl) * (nl - pl))) / nl
                             + (<double>(pr * pr + (nr - pr) * (nr - pr))) / nr)
                    if score > best_score:
                        best_score = score
                        best_f = f
                        thr = v1 + 0.5 * (v2 - v1)
                        if thr >= v2:
                            thr = v1
                        best_thr = thr
                        best_nl = nl
                        best_pl = pl

            if best_f < 0:
                continue
            n_l = best_nl
            pos_l = best_pl
            a_l = pos_l * pos_l + (n_l - pos_l) * (n_l - pos_l)
            pos_r = pos - pos_l
            n_r = m - n_l
            a_r = pos_r * pos_r + (n_r - pos_r) * (n_r - pos_r)
            if a_l * n_r * m + a_r * n_l * m - a_parent * n_l * n_r <= 0:
                continue

            # stable-partition every feature's segment on the chosen split
            for q in range(start, end):
                row = order[best_f, q]
                goes_left[row] = 1 if xv[row, best_f] <= best_thr else 0
            for f in range(d):
                nl = 0
                for q in range(start, end):
                    row = order[f, q]
                    if goes_left[row]:
                        tmp[nl] = row
                        nl += 1
                nr = nl
                for q in range(start, end):
                    row = order[f, q]
                    if not goes_left[row]:
                        tmp[nr] = row
                        nr += 1
                for q in range(m):
                    order[f, start + q] = tmp[q]

            feature[node] = best_f
            threshold[node] = best_thr
            st_start[sp] = start + n_l; st_end[sp] = end
            st_depth[sp] = depth + 1; st_parent[sp] = node; st_right[sp] = 1
            sp += 1
            st_start[sp] = start; st_end[sp] = start + n_l
            st_depth[sp] = depth + 1; st_parent[sp] = node; st_right[sp] = 0
            sp += 1

    free(st_start); free(st_end); free(st_depth); free(st_parent)
    free(st_right); free(tmp); free(goes_left); free(arr); free(feats)
    return (
        feature_arr[:n_nodes].copy(),
        threshold_arr[:n_nodes].copy(),
        left_arr[:n_nodes].copy(),
        right_arr[:n_nodes].copy(),
        value_arr[:n_nodes].copy(),
        count_arr[:n_nodes].copy(),
    )


def tree_apply(feature, threshold, left, right, value, X):
    """Leaf value (class-1 fraction) for each row of `X`."""
    Xc = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] xv = Xc
    cdef const int[::1] fv = np.ascontiguousarray(feature, dtype=np.int32)
    cdef const double[::1] tv = np.ascontiguousarray(threshold, dtype=np.float64)
    cdef const int[::1] lv = np.ascontiguousarray(left, dtype=np.int32)
    cdef const int[::1] rv = np.ascontiguousarray(right, dtype=np.int32)
    cdef const double[::1] vv = np.ascontiguousarray(value, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t r
    cdef long node
    with nogil:
        for r in range(n):
            node = 0
            while fv[node] >= 0:
                if xv[r, fv[node]] <= tv[node]:
                    node = lv[node]
                else:
                    node = rv[node]
            out[r] = vv[node]
    return out_arr
