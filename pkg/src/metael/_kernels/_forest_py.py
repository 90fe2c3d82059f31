"""NumPy implementation of the decision-forest training and prediction kernel.

This is the reference backend; the compiled kernel in _forest_cy.pyx runs the
identical algorithm and must produce bit-identical trees.  The shared
determinism contract:

* one SplitMix64 stream per tree, started from ``tree_seed(base, t)``;
* draws happen in a fixed order: n bootstrap draws, then one partial
  Fisher-Yates shuffle per processed node, in pop order of an explicit
  LIFO stack;
* child slots are reserved left-then-right at split time and the children
  are pushed right-then-left, so the left child is processed next;
* split scores use integer label counts, which makes the order of equal
  feature values irrelevant (candidate thresholds sit only between runs of
  distinct values), so the backends may sort differently;
* score comparisons are strict, keeping the first maximum in scan order.

Trees are 5-tuples of arrays (feature, threshold, left, right, value); leaves
have feature == -1 and every node's value is its positive-label fraction.
"""

from __future__ import annotations

import numpy as np

from metael._kernels._rng import GOLDEN, MASK64, SplitMix64, mix64

__all__ = ["train_forest", "predict_forest"]


def _grow_tree(Xb, yb, max_depth, min_leaf, k, rng):
    n, d = Xb.shape
    cap = 2 * n
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    value = np.zeros(cap, dtype=np.float64)

    stack = [(0, 0, np.arange(n, dtype=np.int64))]
    next_slot = 1
    while stack:
        slot, depth, samples = stack.pop()
        m = samples.size
        labels = yb[samples]
        pos = int(labels.sum())
        value[slot] = pos / m
        if pos == 0 or pos == m or (max_depth > 0 and depth >= max_depth) or m < 2 * min_leaf:
            continue

        # partial Fisher-Yates; the subset is scanned in draw order
        pool = list(range(d))
        for j in range(k):
            r = j + rng.next_below(d - j)
            pool[j], pool[r] = pool[r], pool[j]

        best_score = -1.0
        best_feature = -1
        best_threshold = 0.0
        for f in pool[:k]:
            vals = Xb[samples, f]
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            prefix_pos = np.cumsum(labels[order], dtype=np.int64)
            cand = np.nonzero(sv[:-1] != sv[1:])[0]
            if cand.size == 0:
                continue
            nl = cand + 1
            nr = m - nl
            ok = (nl >= min_leaf) & (nr >= min_leaf)
            cand, nl, nr = cand[ok], nl[ok], nr[ok]
            if cand.size == 0:
                continue
            pl = prefix_pos[cand]
            ql = nl - pl
            pr = pos - pl
            qr = nr - pr
            score = (pl * pl + ql * ql) / nl + (pr * pr + qr * qr) / nr
            i = int(np.argmax(score))
            if score[i] > best_score:
                best_score = float(score[i])
                best_feature = f
                a, b = float(sv[cand[i]]), float(sv[cand[i] + 1])
                thr = (a + b) / 2.0
                # adjacent doubles can round the midpoint up onto b itself
                best_threshold = a if thr == b else thr

        if best_feature < 0:
            continue
        go_left = Xb[samples, best_feature] <= best_threshold
        ls, rs = next_slot, next_slot + 1
        next_slot += 2
        feature[slot] = best_feature
        threshold[slot] = best_threshold
        left[slot] = ls
        right[slot] = rs
        stack.append((rs, depth + 1, samples[~go_left]))
        stack.append((ls, depth + 1, samples[go_left]))

    return (
        feature[:next_slot].copy(),
        threshold[:next_slot].copy(),
        left[:next_slot].copy(),
        right[:next_slot].copy(),
        value[:next_slot].copy(),
    )


def train_forest(X, y, n_trees, max_depth, min_leaf, seed):
    """Train ``n_trees`` bootstrap trees; ``max_depth`` 0 means unlimited."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.uint8)
    n, d = X.shape
    if n == 0 or d == 0:
        raise ValueError("training data must be non-empty")
    k = 1
    while k * k < d:
        k += 1
    trees = []
    for t in range(n_trees):
        rng = SplitMix64(mix64((seed + (t + 1) * GOLDEN) & MASK64))
        idx = np.empty(n, dtype=np.int64)
        for i in range(n):
            idx[i] = rng.next_below(n)
        trees.append(_grow_tree(X[idx], y[idx], max_depth, min_leaf, k, rng))
    return trees


def _predict_tree(feature, threshold, left, right, value, X):
    node = np.zeros(X.shape[0], dtype=np.int32)
    active = np.nonzero(feature[node] >= 0)[0]
    while active.size:
        nd = node[active]
        go_left = X[active, feature[nd]] <= threshold[nd]
        node[active] = np.where(go_left, left[nd], right[nd])
        active = active[feature[node[active]] >= 0]
    return value[node]


def predict_forest(trees, X):
    """Mean leaf value over all trees, one confidence per row of X."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    out = np.zeros(X.shape[0], dtype=np.float64)
    for feature, threshold, left, right, value in trees:
        out += _predict_tree(feature, threshold, left, right, value, X)
    out /= len(trees)
    return out
