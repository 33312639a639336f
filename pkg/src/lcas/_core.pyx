# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: scalar-loop twins of lcas._pure.

Outputs must stay bit-identical to the pure backend: same IEEE double
operations in the same order, integer-exact counting, first-maximum ties,
and the shared splitmix64 node RNG. Any change here needs the matching
change in _pure.py and a parity-test run.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc

cnp.import_array()

BACKEND = "compiled"

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t lcas_mix64(uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    """
    cnp.uint64_t lcas_mix64(cnp.uint64_t z) nogil

DEF GOLDEN = 0x9E3779B97F4A7C15


def fuzzify_batch(cnp.ndarray[cnp.float64_t, ndim=2] x,
                  cnp.ndarray[cnp.int32_t, ndim=1] mf_feature,
                  cnp.ndarray[cnp.float64_t, ndim=2] mf_breaks):
    """Trapezoidal membership degrees; see _pure.fuzzify_batch."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = mf_feature.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, m), np.float64)
    cdef Py_ssize_t i, j
    cdef double xv, a1, a2, a3, a4
    for i in range(n):
        for j in range(m):
            xv = x[i, mf_feature[j]]
            a1 = mf_breaks[j, 0]
            a2 = mf_breaks[j, 1]
            a3 = mf_breaks[j, 2]
            a4 = mf_breaks[j, 3]
            if xv < a1 or xv > a4:
                out[i, j] = 0.0
            elif xv >= a2 and xv <= a3:
                out[i, j] = 1.0
            elif xv < a2:
                out[i, j] = (xv - a1) / (a2 - a1)
            else:
                out[i, j] = (a4 - xv) / (a4 - a3)
    return out


cdef void _sort_pairs(double* v, cnp.int64_t* p, Py_ssize_t n) nogil:
    # heapsort on (value, position) pairs: unique total order, so the output
    # permutation equals numpy's stable argsort by value
    cdef Py_ssize_t start, end, root, child
    cdef double tv
    cdef cnp.int64_t tp
    if n < 2:
        return
    start = (n - 2) // 2
    while True:
        root = start
        while 2 * root + 1 < n:
            child = 2 * root + 1
            if child + 1 < n and (v[child] < v[child + 1] or (v[child] == v[child + 1] and p[child] < p[child + 1])):
                child += 1
            if v[root] < v[child] or (v[root] == v[child] and p[root] < p[child]):
                tv = v[root]; v[root] = v[child]; v[child] = tv
                tp = p[root]; p[root] = p[child]; p[child] = tp
                root = child
            else:
                break
        if start == 0:
            break
        start -= 1
    end = n - 1
    while end > 0:
        tv = v[0]; v[0] = v[end]; v[end] = tv
        tp = p[0]; p[0] = p[end]; p[end] = tp
        root = 0
        while 2 * root + 1 < end:
            child = 2 * root + 1
            if child + 1 < end and (v[child] < v[child + 1] or (v[child] == v[child + 1] and p[child] < p[child + 1])):
                child += 1
            if v[root] < v[child] or (v[root] == v[child] and p[root] < p[child]):
                tv = v[root]; v[root] = v[child]; v[child] = tv
                tp = p[root]; p[root] = p[child]; p[child] = tp
                root = child
            else:
                break
        end -= 1


def tree_build(cnp.ndarray[cnp.float64_t, ndim=2] x,
               cnp.ndarray[cnp.int32_t, ndim=1] y,
               cnp.ndarray[cnp.int64_t, ndim=1] sample_idx,
               int n_classes, int max_depth, int min_leaf, int mtry,
               object seed):
    """Gini-greedy tree on a bootstrap sample; see _pure.tree_build."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t ndim = x.shape[1]
    cdef Py_ssize_t m = sample_idx.shape[0]
    if m == 0:
        raise ValueError("empty sample")
    if mtry > ndim:
        mtry = ndim
    cdef Py_ssize_t cap = 2 * m + 1
    cdef cnp.ndarray[cnp.int32_t, ndim=1] feat = np.full(cap, -1, np.int32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] thr = np.zeros(cap, np.float64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] left = np.full(cap, -1, np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] right = np.full(cap, -1, np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] leaf = np.full(cap, -1, np.int32)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] idx = sample_idx.copy()
    cdef cnp.uint64_t useed = <cnp.uint64_t> (int(seed) & ((1 << 64) - 1))

    # task stack (parent, slot, lo, hi, depth); worst case one open task per node
    cdef cnp.int64_t* st_parent = <cnp.int64_t*> malloc(cap * sizeof(cnp.int64_t))
    cdef cnp.int64_t* st_slot = <cnp.int64_t*> malloc(cap * sizeof(cnp.int64_t))
    cdef cnp.int64_t* st_lo = <cnp.int64_t*> malloc(cap * sizeof(cnp.int64_t))
    cdef cnp.int64_t* st_hi = <cnp.int64_t*> malloc(cap * sizeof(cnp.int64_t))
    cdef cnp.int64_t* st_depth = <cnp.int64_t*> malloc(cap * sizeof(cnp.int64_t))
    cdef double* w_vals = <double*> malloc(m * sizeof(double))
    cdef cnp.int64_t* w_pos = <cnp.int64_t*> malloc(m * sizeof(cnp.int64_t))
    cdef cnp.int64_t* w_cls = <cnp.int64_t*> malloc(m * sizeof(cnp.int64_t))
    cdef cnp.int64_t* scratch = <cnp.int64_t*> malloc(m * sizeof(cnp.int64_t))
    cdef cnp.int64_t* counts = <cnp.int64_t*> malloc(n_classes * sizeof(cnp.int64_t))
    cdef cnp.int64_t* lcounts = <cnp.int64_t*> malloc(n_classes * sizeof(cnp.int64_t))
    cdef cnp.int64_t* perm = <cnp.int64_t*> malloc(ndim * sizeof(cnp.int64_t))
    if (st_parent == NULL or st_slot == NULL or st_lo == NULL or st_hi == NULL
            or st_depth == NULL or w_vals == NULL or w_pos == NULL or w_cls == NULL
            or scratch == NULL or counts == NULL or lcounts == NULL or perm == NULL):
        free(st_parent); free(st_slot); free(st_lo); free(st_hi); free(st_depth)
        free(w_vals); free(w_pos); free(w_cls); free(scratch)
        free(counts); free(lcounts); free(perm)
        raise MemoryError()

    cdef Py_ssize_t sp = 0, node_count = 0
    cdef Py_ssize_t parent, slot, lo, hi, depth, node_id, mlen
    cdef Py_ssize_t i, j, k, t, f, c, nleft, kk
    cdef cnp.int64_t best_count, r, si, sl_sum, sr_sum, nl, nr
    cdef cnp.uint64_t h
    cdef double best_proxy, best_thr, proxy, xv
    cdef int best_f, argc
    st_parent[0] = -1; st_slot[0] = 0; st_lo[0] = 0; st_hi[0] = m; st_depth[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        parent = st_parent[sp]; slot = st_slot[sp]
        lo = st_lo[sp]; hi = st_hi[sp]; depth = st_depth[sp]
        node_id = node_count
        node_count += 1
        if parent >= 0:
            if slot == 0:
                left[parent] = <cnp.int32_t> node_id
            else:
                right[parent] = <cnp.int32_t> node_id
        mlen = hi - lo
        for c in range(n_classes):
            counts[c] = 0
        for k in range(lo, hi):
            counts[y[idx[k]]] += 1
        best_count = 0
        argc = 0
        for c in range(n_classes):
            if counts[c] > best_count:
                best_count = counts[c]
                argc = <int> c
        if depth >= max_depth or mlen < 2 * min_leaf or best_count == mlen:
            leaf[node_id] = argc
            continue

        h = lcas_mix64(useed + (<cnp.uint64_t> (node_id + 1)) * (<cnp.uint64_t> GOLDEN))
        for i in range(ndim):
            perm[i] = i
        for t in range(mtry):
            r = <cnp.int64_t> (lcas_mix64(h + (<cnp.uint64_t> (t + 1)) * (<cnp.uint64_t> GOLDEN)) % (<cnp.uint64_t> (ndim - t)))
            j = t + r
            si = perm[t]; perm[t] = perm[j]; perm[j] = si
        best_proxy = -np.inf
        best_f = -1
        best_thr = 0.0
        for t in range(mtry):
            f = perm[t]
            for k in range(mlen):
                si = idx[lo + k]
                w_vals[k] = x[si, f]
                w_pos[k] = k
                w_cls[k] = y[si]
            _sort_pairs(w_vals, w_pos, mlen)
            if w_vals[0] == w_vals[mlen - 1]:
                continue
            for c in range(n_classes):
                lcounts[c] = 0
            for k in range(mlen - 1):
                lcounts[w_cls[w_pos[k]]] += 1
                nl = k + 1
                nr = mlen - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                if w_vals[k] == w_vals[k + 1]:
                    continue
                sl_sum = 0
                sr_sum = 0
                for c in range(n_classes):
                    sl_sum += lcounts[c] * lcounts[c]
                    sr_sum += (counts[c] - lcounts[c]) * (counts[c] - lcounts[c])
                proxy = (<double> sl_sum) / (<double> nl) + (<double> sr_sum) / (<double> nr)
                if proxy > best_proxy:
                    best_proxy = proxy
                    best_f = <int> f
                    best_thr = (w_vals[k] + w_vals[k + 1]) * 0.5

        if best_f < 0:
            leaf[node_id] = argc
            continue
        feat[node_id] = best_f
        thr[node_id] = best_thr
        # stable partition of idx[lo:hi] on value <= threshold
        nleft = 0
        kk = 0
        for k in range(lo, hi):
            si = idx[k]
            if x[si, best_f] <= best_thr:
                idx[lo + nleft] = si
                nleft += 1
            else:
                scratch[kk] = si
                kk += 1
        for k in range(kk):
            idx[lo + nleft + k] = scratch[k]
        st_parent[sp] = node_id; st_slot[sp] = 1
        st_lo[sp] = lo + nleft; st_hi[sp] = hi; st_depth[sp] = depth + 1
        sp += 1
        st_parent[sp] = node_id; st_slot[sp] = 0
        st_lo[sp] = lo; st_hi[sp] = lo + nleft; st_depth[sp] = depth + 1
        sp += 1

    free(st_parent); free(st_slot); free(st_lo); free(st_hi); free(st_depth)
    free(w_vals); free(w_pos); free(w_cls); free(scratch)
    free(counts); free(lcounts); free(perm)
    sl = slice(0, node_count)
    return (feat[sl].copy(), thr[sl].copy(), left[sl].copy(), right[sl].copy(), leaf[sl].copy())


def forest_votes(cnp.ndarray[cnp.int32_t, ndim=1] feat,
                 cnp.ndarray[cnp.float64_t, ndim=1] thr,
                 cnp.ndarray[cnp.int32_t, ndim=1] left,
                 cnp.ndarray[cnp.int32_t, ndim=1] right,
                 cnp.ndarray[cnp.int32_t, ndim=1] leaf,
                 cnp.ndarray[cnp.int64_t, ndim=1] offsets,
                 cnp.ndarray[cnp.float64_t, ndim=2] x,
                 int n_classes):
    """Packed-forest vote counts; see _pure.forest_votes."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t ntrees = offsets.shape[0] - 1
    cdef cnp.ndarray[cnp.int64_t, ndim=2] votes = np.zeros((n, n_classes), np.int64)
    cdef Py_ssize_t i, t, base, cur
    cdef int f
    for i in range(n):
        for t in range(ntrees):
            base = offsets[t]
            cur = 0
            f = feat[base + cur]
            while f >= 0:
                if x[i, f] <= thr[base + cur]:
                    cur = left[base + cur]
                else:
                    cur = right[base + cur]
                f = feat[base + cur]
            votes[i, leaf[base + cur]] += 1
    return votes
