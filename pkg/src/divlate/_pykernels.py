"""Numpy fallback kernels.

Same contracts, arithmetic and tie-breaking as the compiled module so either
backend yields bit-identical results: integer class counts are exact in
float64, split scores are formed with the same operation order, and ties keep
the first candidate (sampled feature order, then lowest threshold index).
"""

import numpy as np

_M64 = (1 << 64) - 1
_GOLD = 0x9E3779B97F4A7C15

# exact int64 split arithmetic holds to this size (2*n^4 < 2^63)
MAX_TREE_ROWS = 40_000


def _knots(lo, hi, grid_size, order):
    h = (hi - lo) / grid_size
    return lo + (np.arange(grid_size + 2 * order + 1, dtype=np.float64) - order) * h


def _basis_levels(x, lo, hi, grid_size, order):
    """Run the recurrence, returning the last two levels (order-1 and order)."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    h = (hi - lo) / grid_size
    t = _knots(lo, hi, grid_size, order)
    xc = np.minimum(np.maximum(x, lo), hi)

    # degree-0: one-hot on the interior interval index
    j = np.floor((xc - lo) / h).astype(np.int64)
    np.clip(j, 0, grid_size - 1, out=j)
    j += order
    n_int = grid_size + 2 * order
    b = np.zeros((x.shape[0], n_int), dtype=np.float64)
    b[np.arange(x.shape[0]), j] = 1.0

    prev = b
    for k in range(1, order + 1):
        m = prev.shape[1] - 1
        kh = k * h
        leftc = (xc[:, None] - t[None, :m]) / kh
        rightc = (t[None, k + 1 : k + 1 + m] - xc[:, None]) / kh
        cur = leftc * prev[:, :m] + rightc * prev[:, 1 : m + 1]
        prev, b = cur, prev
    return b, prev, h  # (order-1 level, order level, spacing)


def bspline_basis_batch(x, lo, hi, grid_size, order):
    """B-spline basis values for each element of `x`, shape (len(x), grid_size+order).

    Inputs are clamped to [lo, hi]; the right boundary belongs to the last
    interior interval so the basis sums to 1 on the closed range.
    """
    _, cur, _ = _basis_levels(x, lo, hi, grid_size, order)
    return cur


def bspline_basis_deriv_batch(x, lo, hi, grid_size, order):
    """Basis values and derivatives w.r.t. the clamped coordinate.

    Returns (basis, deriv), each (len(x), grid_size+order). Callers are
    responsible for zeroing the derivative where the raw input fell outside
    [lo, hi] (the clamp is flat there).
    """
    prevlvl, cur, h = _basis_levels(x, lo, hi, grid_size, order)
    if order == 0:
        return cur, np.zeros_like(cur)
    deriv = (prevlvl[:, :-1] - prevlvl[:, 1:]) / h
    return cur, deriv


def _feature_sample(seed, node_id, d, mtry):
    """First `mtry` entries of a splitmix64-driven Fisher-Yates shuffle of range(d)."""
    state = (seed ^ ((node_id * _GOLD) & _M64)) & _M64
    arr = list(range(d))
    out = []
    for t in range(mtry):
        i = d - 1 - t
        state = (state + _GOLD) & _M64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        z = z ^ (z >> 31)
        j = z % (i + 1)
        arr[i], arr[j] = arr[j], arr[i]
        out.append(arr[i])
    return out


def grow_tree(X, y, max_depth, min_leaf, mtry, node_seed):
    """Fit one CART classification tree on binary targets.

    Gini impurity, exhaustive scan over midpoints of sorted distinct values
    among `mtry` features sampled per node (splitmix64 stream keyed on
    (node_seed, preorder node id)). A split must leave >= min_leaf rows per
    side and strictly reduce impurity (exact integer test). Returns flat
    arrays (feature, threshold, left, right, value, count); feature == -1
    marks a leaf.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, d = X.shape
    if n > MAX_TREE_ROWS:
        raise ValueError(f"tree kernels support at most {MAX_TREE_ROWS} rows, got {n}")
    cap = min(2 * n + 1, 2 ** (max_depth + 2))
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    value = np.zeros(cap, dtype=np.float64)
    count = np.zeros(cap, dtype=np.int32)

    idx = np.arange(n, dtype=np.int64)
    node_seed = int(node_seed) & _M64
    stack = [(0, n, 0, -1, False)]
    n_nodes = 0
    while stack:
        start, end, depth, parent, is_right = stack.pop()
        node = n_nodes
        n_nodes += 1
        if parent >= 0:
            if is_right:
                right[parent] = node
            else:
                left[parent] = node
        sub = idx[start:end]
        m = end - start
        ysub = y[sub]
        pos = int(ysub.sum())
        value[node] = pos / m
        count[node] = m
        if depth >= max_depth or m < 2 * min_leaf or pos == 0 or pos == m:
            continue

        a_parent = pos * pos + (m - pos) * (m - pos)
        best_score = -1.0
        best_f = -1
        best_i = -1
        best_thr = 0.0
        best_counts = (0, 0)
        for f in _feature_sample(node_seed, node, d, mtry):
            vals = X[sub, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            cpos = np.cumsum(ysub[order])
            nl = np.arange(1, m, dtype=np.float64)
            pl = cpos[:-1]
            nr = m - nl
            pr = pos - pl
            score = (pl * pl + (nl - pl) * (nl - pl)) / nl + (
                pr * pr + (nr - pr) * (nr - pr)
            ) / nr
            valid = (sv[:-1] != sv[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
            if not valid.any():
                continue
            score = np.where(valid, score, -np.inf)
            i = int(np.argmax(score))
            if score[i] > best_score:
                best_score = score[i]
                best_f = f
                best_i = i
                v1, v2 = sv[i], sv[i + 1]
                thr = v1 + 0.5 * (v2 - v1)
                if thr >= v2:  # adjacent floats: keep the left value itself
                    thr = v1
                best_thr = thr
                best_counts = (int(pl[i]), i + 1)

        if best_f < 0:
            continue
        pos_l, n_l = best_counts
        a_l = pos_l * pos_l + (n_l - pos_l) * (n_l - pos_l)
        pos_r, n_r = pos - pos_l, m - n_l
        a_r = pos_r * pos_r + (n_r - pos_r) * (n_r - pos_r)
        # exact strict-improvement gate (python ints, no rounding)
        if a_l * n_r * m + a_r * n_l * m - a_parent * n_l * n_r <= 0:
            continue

        sel = X[sub, best_f] <= best_thr
        idx[start:end] = np.concatenate([sub[sel], sub[~sel]])
        feature[node] = best_f
        threshold[node] = best_thr
        stack.append((start + n_l, end, depth + 1, node, True))
        stack.append((start, start + n_l, depth + 1, node, False))

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        count[:n_nodes].copy(),
    )


def tree_apply(feature, threshold, left, right, value, X):
    """Leaf value (class-1 fraction) for each row of `X`."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    rows = np.nonzero(feature[node] >= 0)[0]
    while rows.size:
        cur = node[rows]
        f = feature[cur]
        go_left = X[rows, f] <= threshold[cur]
        node[rows] = np.where(go_left, left[cur], right[cur])
        rows = rows[feature[node[rows]] >= 0]
    return value[node]
