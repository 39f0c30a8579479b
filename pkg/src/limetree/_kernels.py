"""Hot numeric kernels: split-gain search and batch tree routing.

Two interchangeable backends are provided. The numba backend compiles the
inner loops with ``@njit``; the numpy backend is pure vectorized numpy and
is selected by setting the environment variable ``LIMETREE_DISABLE_NUMBA=1``
(or when numba is unavailable). The backends agree to float rounding; see
``benchmarks/bench_kernels.py`` for a speed comparison.
"""

import os

import numpy as np

_DISABLE = os.environ.get("LIMETREE_DISABLE_NUMBA", "").strip() in ("1", "true", "yes")

try:
    if _DISABLE:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def _split_gains_numpy(X, Y, w, active):
    """Per-feature weighted-SSE decrease for the 0/1 split on each feature.

    X: (n, d) float64 with values in {0, 1}
    Y: (n, k) float64 targets
    w: (n,) float64 non-negative weights
    active: (d,) bool, False for features already used on this path

    Returns (d,) array of total weighted SSE decreases (summed over the k
    outputs); -1.0 marks features that are inactive or would leave an
    empty child.
    """
    n, d = X.shape
    k = Y.shape[1]
    wy = w[:, None] * Y
    W = w.sum()
    Sy = wy.sum(axis=0)
    Syy = (wy * Y).sum(axis=0)
    sse_parent = float((Syy - Sy * Sy / W).sum()) if W > 0 else 0.0

    Wr = w @ X                       # (d,) weight mass on the bit=1 side
    Sr = wy.T @ X                    # (k, d)
    Srr = (wy * Y).T @ X             # (k, d)
    gains = np.full(d, -1.0)
    for j in range(d):
        if not active[j]:
            continue
        wr = Wr[j]
        wl = W - wr
        if wr <= 0.0 or wl <= 0.0:
            continue
        sr = Sr[:, j]
        sl = Sy - sr
        srr = Srr[:, j]
        sll = Syy - srr
        sse = float((sll - sl * sl / wl).sum() + (srr - sr * sr / wr).sum())
        gains[j] = sse_parent - sse
    return gains


def _route_numpy(feature, left, right, X):
    """Leaf index for each row of X under the flat-array tree encoding."""
    n = X.shape[0]
    out = np.zeros(n, dtype=np.int64)
    todo = [(0, np.arange(n))]
    while todo:
        node, idx = todo.pop()
        f = feature[node]
        if f < 0:
            out[idx] = node
            continue
        mask = X[idx, f] >= 0.5
        l_idx = idx[~mask]
        r_idx = idx[mask]
        if l_idx.size:
            todo.append((left[node], l_idx))
        if r_idx.size:
            todo.append((right[node], r_idx))
    return out


if HAVE_NUMBA:

    @njit(cache=True)
    def _split_gains_numba(X, Y, w, active):  # pragma: no cover - numba
        n, d = X.shape
        k = Y.shape[1]
        W = 0.0
        for i in range(n):
            W += w[i]
        Sy = np.zeros(k)
        Syy = np.zeros(k)
        for i in range(n):
            wi = w[i]
            for c in range(k):
                y = Y[i, c]
                Sy[c] += wi * y
                Syy[c] += wi * y * y
        sse_parent = 0.0
        if W > 0.0:
            for c in range(k):
                sse_parent += Syy[c] - Sy[c] * Sy[c] / W

        gains = np.full(d, -1.0)
        sr = np.zeros(k)
        srr = np.zeros(k)
        for j in range(d):
            if not active[j]:
                continue
            wr = 0.0
            for c in range(k):
                sr[c] = 0.0
                srr[c] = 0.0
            for i in range(n):
                if X[i, j] >= 0.5:
                    wi = w[i]
                    wr += wi
                    for c in range(k):
                        y = Y[i, c]
                        sr[c] += wi * y
                        srr[c] += wi * y * y
            wl = W - wr
            if wr <= 0.0 or wl <= 0.0:
                continue
            sse = 0.0
            for c in range(k):
                sl = Sy[c] - sr[c]
                sll = Syy[c] - srr[c]
                sse += sll - sl * sl / wl
                sse += srr[c] - sr[c] * sr[c] / wr
            gains[j] = sse_parent - sse
        return gains

    @njit(cache=True)
    def _route_numba(feature, left, right, X):  # pragma: no cover - numba
        n = X.shape[0]
        out = np.zeros(n, dtype=np.int64)
        for i in range(n):
            node = 0
            while feature[node] >= 0:
                if X[i, feature[node]] >= 0.5:
                    node = right[node]
                else:
                    node = left[node]
            out[i] = node
        return out

    split_gains = _split_gains_numba
    route = _route_numba
else:
    split_gains = _split_gains_numpy
    route = _route_numpy


def backend_name():
    return "numba" if HAVE_NUMBA else "numpy"
