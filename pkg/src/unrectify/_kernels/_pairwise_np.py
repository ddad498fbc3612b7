"""Pure-numpy pairwise kernels; chunked so memory stays O(block * n)."""

import numpy as np

_BLOCK = 256


def max_pairwise_dist(x):
    """Largest Euclidean distance over all point pairs; 0.0 for n < 2."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        return 0.0
    sq = np.einsum("ij,ij->i", x, x)
    best = 0.0
    for start in range(0, n - 1, _BLOCK):
        stop = min(start + _BLOCK, n - 1)
        block = x[start:stop]
        d2 = sq[start:stop, None] + sq[None, start + 1 :] - 2.0 * (block @ x[start + 1 :].T)
        cols = np.arange(start + 1, n)
        mask = cols[None, :] > np.arange(start, stop)[:, None]
        if mask.any():
            best = max(best, float(d2[mask].max()))
    return float(np.sqrt(max(best, 0.0)))


def max_pair_gain(y, x):
    """Largest ||y_i - y_j|| / ||x_i - x_j|| over pairs with x_i != x_j."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        return 0.0
    sqx = np.einsum("ij,ij->i", x, x)
    sqy = np.einsum("ij,ij->i", y, y)
    best = 0.0
    for start in range(0, n - 1, _BLOCK):
        stop = min(start + _BLOCK, n - 1)
        bx, by = x[start:stop], y[start:stop]
        dx2 = sqx[start:stop, None] + sqx[None, start + 1 :] - 2.0 * (bx @ x[start + 1 :].T)
        dy2 = sqy[start:stop, None] + sqy[None, start + 1 :] - 2.0 * (by @ y[start + 1 :].T)
        cols = np.arange(start + 1, n)
        mask = (cols[None, :] > np.arange(start, stop)[:, None]) & (dx2 > 0.0)
        if mask.any():
            best = max(best, float((dy2[mask] / dx2[mask]).max()))
    return float(np.sqrt(max(best, 0.0)))
