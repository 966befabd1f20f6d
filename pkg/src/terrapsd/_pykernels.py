"""Pure numpy implementations of the hot loops.

These are the reference versions; the compiled module ``_ckernels`` must agree
with them to floating-point round-off.
"""
import numpy as np


def _bucket_keys(x, y, cell):
    bx = np.floor((x - x.min()) / cell).astype(np.int64)
    by = np.floor((y - y.min()) / cell).astype(np.int64)
    return bx, by


def window_moments(x, y, z, half):
    """Leave-one-out count, mean and std of ``z`` over a square xy window.

    Point ``j`` is a neighbour of ``i`` when ``|x_j - x_i| <= half`` and
    ``|y_j - y_i| <= half`` and ``j != i``. Std uses the population divisor.
    Points with no neighbours get mean 0 and std 0.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    npts = x.size
    count = np.zeros(npts, dtype=np.int64)
    s1 = np.zeros(npts)
    s2 = np.zeros(npts)
    if npts == 0:
        return count, s1, s2.copy()
    bx, by = _bucket_keys(x, y, half)
    nby = int(by.max()) + 1
    key = bx * nby + by
    order = np.argsort(key, kind="stable")
    skey = key[order]
    uniq, starts = np.unique(skey, return_index=True)
    ends = np.append(starts[1:], skey.size)
    lookup = {int(k): (int(s), int(e)) for k, s, e in zip(uniq, starts, ends)}

    for k, s, e in zip(uniq, starts, ends):
        own = order[s:e]
        kx, ky = divmod(int(k), nby)
        cand = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if not 0 <= ky + dy < nby:
                    continue
                hit = lookup.get((kx + dx) * nby + ky + dy)
                if hit is not None:
                    cand.append(order[hit[0]:hit[1]])
        cand = np.concatenate(cand)
        near = (np.abs(x[cand][None, :] - x[own][:, None]) <= half) & (
            np.abs(y[cand][None, :] - y[own][:, None]) <= half
        )
        near &= cand[None, :] != own[:, None]
        zc = z[cand]
        count[own] = near.sum(axis=1)
        s1[own] = near @ zc
        s2[own] = near @ (zc * zc)

    mean = np.divide(s1, count, out=np.zeros(npts), where=count > 0)
    var = np.divide(s2, count, out=np.zeros(npts), where=count > 0) - mean**2
    return count, mean, np.sqrt(np.clip(var, 0.0, None))


def bin_accumulate(row, col, z, nrows, ncols):
    """Per-cell sum and count of ``z`` for points already mapped to cells."""
    flat = np.asarray(row, dtype=np.int64) * ncols + np.asarray(col, dtype=np.int64)
    size = nrows * ncols
    sums = np.bincount(flat, weights=z, minlength=size).reshape(nrows, ncols)
    counts = np.bincount(flat, minlength=size).reshape(nrows, ncols)
    return sums, counts.astype(np.int64)


def fill_gaps(grid, valid, max_gap):
    """Linearly bridge interior runs of at most ``max_gap`` invalid cells per row.

    Returns new ``(grid, valid)`` arrays; runs touching a row end are left invalid.
    """
    grid = np.array(grid, dtype=np.float64)
    valid = np.array(valid, dtype=bool)
    for r in range(grid.shape[0]):
        ok = valid[r]
        if ok.all() or not ok.any():
            continue
        idx = np.flatnonzero(ok)
        left = idx[:-1]
        right = idx[1:]
        gap = right - left - 1
        bridge = (gap > 0) & (gap <= max_gap)
        for a, b in zip(left[bridge], right[bridge]):
            t = np.arange(1, b - a) / (b - a)
            grid[r, a + 1:b] = grid[r, a] + t * (grid[r, b] - grid[r, a])
            valid[r, a + 1:b] = True
    return grid, valid
