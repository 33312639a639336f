"""Pure-numpy kernels: reference backend for the compiled core.

The compiled extension (lcas._core) implements exactly these operations with
scalar loops. Both backends must produce bit-identical outputs: integer
arithmetic is exact, float operations are elementwise IEEE doubles applied in
the same order, ties resolve to the first maximum, and the node-level RNG is
the shared splitmix64 scheme from lcas.rng. Keep the two files in lockstep.
"""

from __future__ import annotations

import numpy as np

BACKEND = "pure"

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z):
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def fuzzify_batch(x, mf_feature, mf_breaks):
    """Evaluate trapezoidal memberships for a batch of feature rows.

    x: (n, F) float64 feature values (already clipped to their ranges).
    mf_feature: (M,) int32, source feature column of each membership function.
    mf_breaks: (M, 4) float64 breakpoints a1 <= a2 <= a3 <= a4.
    Returns (n, M) float64 membership degrees in [0, 1].
    """
    xv = x[:, mf_feature]  # (n, M)
    a1 = mf_breaks[:, 0]
    a2 = mf_breaks[:, 1]
    a3 = mf_breaks[:, 2]
    a4 = mf_breaks[:, 3]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.select(
            [
                (xv < a1) | (xv > a4),
                (xv >= a2) & (xv <= a3),
                xv < a2,
            ],
            [
                np.zeros_like(xv),
                np.ones_like(xv),
                (xv - a1) / (a2 - a1),
            ],
            default=(a4 - xv) / (a4 - a3),
        )
    return out


def tree_build(x, y, sample_idx, n_classes, max_depth, min_leaf, mtry, seed):
    """Grow one Gini-greedy decision tree on a bootstrap sample.

    x: (n, D) float64, y: (n,) int32 class labels, sample_idx: (m,) row indices
    (duplicates allowed). Split thresholds are midpoints between adjacent
    distinct sorted values; candidate features are drawn per node from a
    splitmix64 stream keyed by (seed, node id). Returns
    (feature, threshold, left, right, leaf) arrays of length n_nodes where
    feature == -1 marks a leaf.
    """
    n, ndim = x.shape
    m = len(sample_idx)
    if m == 0:
        raise ValueError("empty sample")
    cap = 2 * m + 1
    feat = np.full(cap, -1, np.int32)
    thr = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int32)
    right = np.full(cap, -1, np.int32)
    leaf = np.full(cap, -1, np.int32)
    idx = np.asarray(sample_idx, dtype=np.int64).copy()
    mtry = min(mtry, ndim)
    seed = int(seed) & _MASK

    node_count = 0
    stack = [(-1, 0, 0, m, 0)]  # parent id, child slot, lo, hi, depth
    while stack:
        parent, slot, lo, hi, depth = stack.pop()
        node_id = node_count
        node_count += 1
        if parent >= 0:
            if slot == 0:
                left[parent] = node_id
            else:
                right[parent] = node_id
        seg = idx[lo:hi]
        ycls = y[seg]
        counts = np.bincount(ycls, minlength=n_classes).astype(np.int64)
        mlen = hi - lo
        if depth >= max_depth or mlen < 2 * min_leaf or counts.max() == mlen:
            leaf[node_id] = int(np.argmax(counts))
            continue

        h = _mix64(seed + (node_id + 1) * _GOLDEN)
        perm = list(range(ndim))
        for t in range(mtry):
            r = _mix64(h + (t + 1) * _GOLDEN) % (ndim - t)
            j = t + r
            perm[t], perm[j] = perm[j], perm[t]

        best_proxy = -np.inf
        best_f = -1
        best_thr = 0.0
        for f in perm[:mtry]:
            vals = x[seg, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            if sv[0] == sv[mlen - 1]:
                continue
            sc = ycls[order]
            onehot = np.zeros((mlen, n_classes), np.int64)
            onehot[np.arange(mlen), sc] = 1
            cum = np.cumsum(onehot, axis=0)
            nl = np.arange(1, mlen, dtype=np.int64)
            nr = mlen - nl
            cl = cum[:-1]
            cr = counts[None, :] - cl
            sl = np.sum(cl * cl, axis=1)
            sr = np.sum(cr * cr, axis=1)
            proxy = sl / nl + sr / nr
            valid = (nl >= min_leaf) & (nr >= min_leaf) & (sv[:-1] != sv[1:])
            proxy = np.where(valid, proxy, -np.inf)
            kbest = int(np.argmax(proxy))
            p = float(proxy[kbest])
            if p > best_proxy:
                best_proxy = p
                best_f = f
                best_thr = (float(sv[kbest]) + float(sv[kbest + 1])) * 0.5

        if best_f < 0:
            leaf[node_id] = int(np.argmax(counts))
            continue
        feat[node_id] = best_f
        thr[node_id] = best_thr
        go_left = x[seg, best_f] <= best_thr
        lefts = seg[go_left]
        rights = seg[~go_left]
        nleft = len(lefts)
        idx[lo : lo + nleft] = lefts
        idx[lo + nleft : hi] = rights
        # push right first so the left child is numbered next (preorder ids)
        stack.append((node_id, 1, lo + nleft, hi, depth + 1))
        stack.append((node_id, 0, lo, lo + nleft, depth + 1))

    sl_ = slice(0, node_count)
    return (feat[sl_].copy(), thr[sl_].copy(), left[sl_].copy(), right[sl_].copy(), leaf[sl_].copy())


def forest_votes(feat, thr, left, right, leaf, offsets, x, n_classes):
    """Per-class vote counts of a packed forest over feature rows.

    offsets: (T+1,) int64 tree boundaries into the node arrays; child indices
    are relative to each tree's own base. Traversal goes left iff
    value <= threshold.
    """
    n = x.shape[0]
    ntrees = len(offsets) - 1
    votes = np.zeros((n, n_classes), np.int64)
    rows = np.arange(n)
    for t in range(ntrees):
        base = int(offsets[t])
        cur = np.zeros(n, np.int64)
        while True:
            f = feat[base + cur]
            internal = f >= 0
            if not internal.any():
                break
            fi = np.where(internal, f, 0)
            xv = x[rows, fi]
            go_left = xv <= thr[base + cur]
            nxt = np.where(go_left, left[base + cur], right[base + cur])
            cur = np.where(internal, nxt, cur)
        cls = leaf[base + cur]
        votes[rows, cls] += 1
    return votes
