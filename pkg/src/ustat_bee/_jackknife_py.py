"""Pure-Python jackknife core: exact subset accumulation, vectorized over replicates.

For each replicate row the core visits every m-subset once, adds the kernel
value into the U accumulator and into the leave-one-out accumulator of each
member index (so a subset contributes to m different q_i), giving
O(C(n,m) * m) work per replicate.  The loop over subsets is Python; the loop
over replicates is numpy, which is what keeps this fallback usable.
"""

from __future__ import annotations

import itertools
from math import comb

import numpy as np


def jackknife_batch(data: np.ndarray, kernel) -> tuple[np.ndarray, np.ndarray]:
    """Exact (U, Q) for a batch: data is (R, n) or (R, n, 2) for pair points.

    Returns U of shape (R,) and Q of shape (R, n) where Q[r, i] is the average
    of the kernel over the m-subsets containing i (the jackknife proxy q_i).
    """
    m = kernel.m
    R, n = data.shape[0], data.shape[1]
    if n < m:
        raise ValueError(f"need n >= m, got n={n} < m={m}")
    if m == 1:
        if kernel.vectorized:
            H = np.asarray(kernel.evaluate(data), dtype=float)
        else:
            H = np.empty((R, n))
            for r in range(R):
                for i in range(n):
                    H[r, i] = kernel.evaluate(data[r, i])
        return H.mean(axis=1), H

    U = np.zeros(R)
    Q = np.zeros((R, n))
    if kernel.vectorized:
        for subset in itertools.combinations(range(n), m):
            hs = np.asarray(kernel.evaluate(*(data[:, i] for i in subset)), dtype=float)
            U += hs
            for i in subset:
                Q[:, i] += hs
    else:
        for subset in itertools.combinations(range(n), m):
            cols = [data[:, i] for i in subset]
            hs = np.array([kernel.evaluate(*(c[r] for c in cols)) for r in range(R)])
            U += hs
            for i in subset:
                Q[:, i] += hs
    U /= comb(n, m)
    Q /= comb(n - 1, m - 1)
    return U, Q


def jackknife_batch_sampled(
    data: np.ndarray, kernel, n_subsets: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Incomplete estimator: average over uniformly sampled m-subsets.

    Subsets are drawn once and shared across all replicates.  q_i averages the
    sampled subsets containing i; an index that no subset hits falls back to
    the subset-mean (a neutral value for the jackknife spread).
    """
    m = kernel.m
    R, n = data.shape[0], data.shape[1]
    if n < m:
        raise ValueError(f"need n >= m, got n={n} < m={m}")
    scores = rng.random((n_subsets, n))
    subsets = np.argpartition(scores, m - 1, axis=1)[:, :m]

    U = np.zeros(R)
    qsum = np.zeros((R, n))
    hits = np.zeros(n, dtype=np.int64)
    for row in subsets:
        idx = tuple(int(i) for i in row)
        if kernel.vectorized:
            hs = np.asarray(kernel.evaluate(*(data[:, i] for i in idx)), dtype=float)
        else:
            cols = [data[:, i] for i in idx]
            hs = np.array([kernel.evaluate(*(c[r] for c in cols)) for r in range(R)])
        U += hs
        for i in idx:
            qsum[:, i] += hs
            hits[i] += 1
    U /= n_subsets
    Q = np.where(hits[None, :] > 0, qsum / np.maximum(hits, 1)[None, :], U[:, None])
    return U, Q
