# cython: language_level=3
# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled decision-forest kernel.

Implements exactly the algorithm of _forest_py (see the determinism contract
in its module docstring); the two backends must produce bit-identical trees.
"""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t

cnp.import_array()

cdef uint64_t GOLDEN = <uint64_t>0x9E3779B97F4A7C15
cdef uint64_t MIX1 = <uint64_t>0xBF58476D1CE4E5B9
cdef uint64_t MIX2 = <uint64_t>0x94D049BB133111EB


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


cdef inline uint64_t next_u64(uint64_t* state) noexcept nogil:
    state[0] = state[0] + GOLDEN
    return mix64(state[0])


cdef inline uint64_t next_below(uint64_t* state, uint64_t n) noexcept nogil:
    return next_u64(state) % n


cdef void sort_pairs(double* v, uint8_t* lab, int64_t lo, int64_t hi) noexcept nogil:
    """Sort v[lo:hi) ascending, permuting lab identically.

    Quicksort (median-of-three, Hoare partition, recurse into the smaller
    half) with insertion sort below 16 elements.  Label order inside runs of
    equal values is unspecified; split scoring never depends on it.
    """
    cdef int64_t i, j, mid
    cdef double pivot, tv
    cdef uint8_t tl
    while hi - lo > 16:
        mid = lo + (hi - lo) // 2
        if v[mid] < v[lo]:
            tv = v[lo]; v[lo] = v[mid]; v[mid] = tv
            tl = lab[lo]; lab[lo] = lab[mid]; lab[mid] = tl
        if v[hi - 1] < v[lo]:
            tv = v[lo]; v[lo] = v[hi - 1]; v[hi - 1] = tv
            tl = lab[lo]; lab[lo] = lab[hi - 1]; lab[hi - 1] = tl
        if v[hi - 1] < v[mid]:
            tv = v[mid]; v[mid] = v[hi - 1]; v[hi - 1] = tv
            tl = lab[mid]; lab[mid] = lab[hi - 1]; lab[hi - 1] = tl
        pivot = v[mid]
        i = lo - 1
        j = hi
        while True:
            i += 1
            while v[i] < pivot:
                i += 1
            j -= 1
            while v[j] > pivot:
                j -= 1
            if i >= j:
                break
            tv = v[i]; v[i] = v[j]; v[j] = tv
            tl = lab[i]; lab[i] = lab[j]; lab[j] = tl
        if j + 1 - lo < hi - j - 1:
            sort_pairs(v, lab, lo, j + 1)
            lo = j + 1
        else:
            sort_pairs(v, lab, j + 1, hi)
            hi = j + 1
    i = lo + 1
    while i < hi:
        tv = v[i]
        tl = lab[i]
        j = i - 1
        while j >= lo and v[j] > tv:
            v[j + 1] = v[j]
            lab[j + 1] = lab[j]
            j -= 1
        v[j + 1] = tv
        lab[j + 1] = tl
        i += 1


def train_forest(X, y, int n_trees, int max_depth, int min_leaf, seed):
    """Train ``n_trees`` bootstrap trees; ``max_depth`` 0 means unlimited."""
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef uint8_t[::1] yv = np.ascontiguousarray(y, dtype=np.uint8)
    cdef int64_t n = Xv.shape[0]
    cdef int64_t d = Xv.shape[1]
    if n == 0 or d == 0:
        raise ValueError("training data must be non-empty")
    cdef uint64_t base = <uint64_t>(seed & ((1 << 64) - 1))

    cdef int64_t k = 1
    while k * k < d:
        k += 1

    cdef int64_t cap = 2 * n
    feature_arr = np.empty(cap, dtype=np.int32)
    threshold_arr = np.empty(cap, dtype=np.float64)
    left_np = np.empty(cap, dtype=np.int32)
    right_np = np.empty(cap, dtype=np.int32)
    value_np = np.empty(cap, dtype=np.float64)
    cdef int32_t[::1] feature = feature_arr
    cdef double[::1] threshold = threshold_arr
    cdef int32_t[::1] left = left_np
    cdef int32_t[::1] right = right_np
    cdef double[::1] value = value_np

    Xb_np = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] Xb = Xb_np
    cdef uint8_t[::1] yb = np.empty(n, dtype=np.uint8)
    cdef int64_t[::1] samples = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] pool = np.empty(d, dtype=np.int64)
    cdef double[::1] sv = np.empty(n, dtype=np.float64)
    cdef uint8_t[::1] sl = np.empty(n, dtype=np.uint8)

    cdef int64_t stack_cap = 2 * n + 2
    cdef int32_t[::1] st_slot = np.empty(stack_cap, dtype=np.int32)
    cdef int32_t[::1] st_depth = np.empty(stack_cap, dtype=np.int32)
    cdef int64_t[::1] st_start = np.empty(stack_cap, dtype=np.int64)
    cdef int64_t[::1] st_end = np.empty(stack_cap, dtype=np.int64)

    cdef uint64_t state
    cdef int64_t t, i, c, row, top, next_slot, s0, s1, m, pos, jj, r, tmp
    cdef int64_t f, run_pos, nl, nr, pl, ql, pr, qr, p0, ls, rs
    cdef int32_t slot, dep
    cdef double best_score, score, thr, best_thr
    cdef int64_t best_feature

    trees = []
    for t in range(n_trees):
        state = mix64(base + (<uint64_t>(t + 1)) * GOLDEN)
        for i in range(n):
            row = <int64_t>next_below(&state, <uint64_t>n)
            for c in range(d):
                Xb[i, c] = Xv[row, c]
            yb[i] = yv[row]
        for i in range(n):
            samples[i] = i

        st_slot[0] = 0
        st_depth[0] = 0
        st_start[0] = 0
        st_end[0] = n
        top = 1
        next_slot = 1
        while top > 0:
            top -= 1
            slot = st_slot[top]
            dep = st_depth[top]
            s0 = st_start[top]
            s1 = st_end[top]
            m = s1 - s0
            pos = 0
            for i in range(s0, s1):
                pos += yb[samples[i]]
            value[slot] = <double>pos / <double>m
            feature[slot] = -1
            threshold[slot] = 0.0
            left[slot] = -1
            right[slot] = -1
            if pos == 0 or pos == m or (max_depth > 0 and dep >= max_depth) or m < 2 * min_leaf:
                continue

            for c in range(d):
                pool[c] = c
            for jj in range(k):
                r = jj + <int64_t>next_below(&state, <uint64_t>(d - jj))
                tmp = pool[jj]; pool[jj] = pool[r]; pool[r] = tmp

            best_score = -1.0
            best_feature = -1
            best_thr = 0.0
            for jj in range(k):
                f = pool[jj]
                for i in range(m):
                    row = samples[s0 + i]
                    sv[i] = Xb[row, f]
                    sl[i] = yb[row]
                sort_pairs(&sv[0], &sl[0], 0, m)
                run_pos = 0
                for i in range(m - 1):
                    run_pos += sl[i]
                    if sv[i] != sv[i + 1]:
                        nl = i + 1
                        nr = m - nl
                        if nl < min_leaf or nr < min_leaf:
                            continue
                        pl = run_pos
                        ql = nl - pl
                        pr = pos - pl
                        qr = nr - pr
                        score = (<double>(pl * pl + ql * ql) / <double>nl
                                 + <double>(pr * pr + qr * qr) / <double>nr)
                        if score > best_score:
                            best_score = score
                            best_feature = f
                            thr = (sv[i] + sv[i + 1]) / 2.0
                            if thr == sv[i + 1]:
                                thr = sv[i]
                            best_thr = thr

            if best_feature < 0:
                continue
            p0 = s0
            for i in range(s0, s1):
                if Xb[samples[i], best_feature] <= best_thr:
                    tmp = samples[p0]; samples[p0] = samples[i]; samples[i] = tmp
                    p0 += 1
            ls = next_slot
            rs = next_slot + 1
            next_slot += 2
            feature[slot] = <int32_t>best_feature
            threshold[slot] = best_thr
            left[slot] = <int32_t>ls
            right[slot] = <int32_t>rs
            st_slot[top] = <int32_t>rs
            st_depth[top] = dep + 1
            st_start[top] = p0
            st_end[top] = s1
            top += 1
            st_slot[top] = <int32_t>ls
            st_depth[top] = dep + 1
            st_start[top] = s0
            st_end[top] = p0
            top += 1

        trees.append(
            (
                feature_arr[:next_slot].copy(),
                threshold_arr[:next_slot].copy(),
                left_np[:next_slot].copy(),
                right_np[:next_slot].copy(),
                value_np[:next_slot].copy(),
            )
        )
    return trees


def predict_forest(trees, X):
    """Mean leaf value over all trees, one confidence per row of X."""
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef int64_t n = Xv.shape[0]
    out_np = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_np
    cdef int32_t[::1] feat, lft, rgt
    cdef double[::1] thr, val
    cdef int64_t i
    cdef int32_t node
    cdef int64_t n_trees = len(trees)
    for tree in trees:
        feat = tree[0]
        thr = tree[1]
        lft = tree[2]
        rgt = tree[3]
        val = tree[4]
        for i in range(n):
            node = 0
            while feat[node] >= 0:
                if Xv[i, feat[node]] <= thr[node]:
                    node = lft[node]
                else:
                    node = rgt[node]
            out[i] += val[node]
    for i in range(n):
        out[i] /= <double>n_trees
    return out_np
