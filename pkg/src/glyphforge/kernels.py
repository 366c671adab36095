"""Inner loops for nearest-neighbour search and scanline filling.

Each kernel exists twice: a numba version and a vectorized numpy twin with
identical arithmetic. ``BACKEND`` names the one bound to the public names.
"""

from __future__ import annotations

import numpy as np

from ._backend import HAVE_NUMBA, USE_NUMBA, njit


# --- nearest neighbour -----------------------------------------------------------

def nearest_numpy(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact nearest neighbour in ``b`` for every row of ``a`` (brute force).

    Ties go to the lowest index in ``b``.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    n, m = len(a), len(b)
    dist = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    chunk = max(1, 4_000_000 // max(m, 1))
    for s in range(0, n, chunk):
        blk = a[s:s + chunk]
        dx = blk[:, 0:1] - b[None, :, 0]
        dy = blk[:, 1:2] - b[None, :, 1]
        d2 = dx * dx + dy * dy
        j = np.argmin(d2, axis=1)
        idx[s:s + chunk] = j
        dist[s:s + chunk] = np.sqrt(d2[np.arange(len(blk)), j])
    return dist, idx


@njit
def _nearest_grid(a, b):
    n = a.shape[0]
    m = b.shape[0]
    xmin = b[0, 0]
    xmax = b[0, 0]
    ymin = b[0, 1]
    ymax = b[0, 1]
    for j in range(m):
        xmin = min(xmin, b[j, 0])
        xmax = max(xmax, b[j, 0])
        ymin = min(ymin, b[j, 1])
        ymax = max(ymax, b[j, 1])
    extent = max(xmax - xmin, ymax - ymin)
    side = max(1, int(np.sqrt(m)))
    h = extent / side if extent > 0 else 1.0
    nx = int((xmax - xmin) / h) + 1
    ny = int((ymax - ymin) / h) + 1

    # counting sort of b into cells
    cell_of = np.empty(m, dtype=np.int64)
    counts = np.zeros(nx * ny + 1, dtype=np.int64)
    for j in range(m):
        cx = min(int((b[j, 0] - xmin) / h), nx - 1)
        cy = min(int((b[j, 1] - ymin) / h), ny - 1)
        c = cy * nx + cx
        cell_of[j] = c
        counts[c + 1] += 1
    for c in range(nx * ny):
        counts[c + 1] += counts[c]
    order = np.empty(m, dtype=np.int64)
    fill = counts[:-1].copy()
    for j in range(m):
        c = cell_of[j]
        order[fill[c]] = j
        fill[c] += 1

    dist = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    for i in range(n):
        px = a[i, 0]
        py = a[i, 1]
        qx = int(np.floor((px - xmin) / h))
        qy = int(np.floor((py - ymin) / h))
        rmax = max(max(abs(qx), abs(qx - (nx - 1))), max(abs(qy), abs(qy - (ny - 1))))
        best = np.inf
        bj = -1
        r = 0
        while r <= rmax:
            for cy in range(qy - r, qy + r + 1):
                if cy < 0 or cy >= ny:
                    continue
                ring_row = cy == qy - r or cy == qy + r
                step = 1 if ring_row else 2 * r
                cx = qx - r
                while cx <= qx + r:
                    if 0 <= cx < nx:
                        c = cy * nx + cx
                        for k in range(counts[c], counts[c + 1]):
                            j = order[k]
                            dx = px - b[j, 0]
                            dy = py - b[j, 1]
                            d2 = dx * dx + dy * dy
                            if d2 < best or (d2 == best and j < bj):
                                best = d2
                                bj = j
                    cx += step
            # every unvisited cell is at least r*h away
            if bj >= 0 and np.sqrt(best) < (r - 1e-7) * h:
                break
            r += 1
        dist[i] = np.sqrt(best)
        idx[i] = bj
    return dist, idx


def nearest_numba(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    return _nearest_grid(a, b)


# --- scanline crossings -----------------------------------------------------------

def crossings_numpy(edges: np.ndarray, height: int, width: int) -> np.ndarray:
    """Signed crossing counts for sample rows ``r + 0.5`` and columns ``c + 0.5``.

    ``edges`` holds rows (x0, y0, x1, y1) in sample coordinates. The result
    has shape (height, width + 1); its row-wise cumulative sum is the
    nonzero-winding number at each sample.
    """
    acc = np.zeros((height, width + 1), dtype=np.int32)
    e = np.asarray(edges, dtype=np.float64).reshape(-1, 4)
    e = e[e[:, 1] != e[:, 3]]
    if not len(e):
        return acc
    x0, y0, x1, y1 = e.T
    direction = np.where(y1 > y0, 1, -1).astype(np.int32)
    lo = np.minimum(y0, y1)
    hi = np.maximum(y0, y1)
    r_first = np.maximum(np.ceil(lo - 0.5), 0).astype(np.int64)
    r_stop = np.minimum(np.ceil(hi - 0.5), height).astype(np.int64)
    nrows = np.maximum(r_stop - r_first, 0)
    if not nrows.sum():
        return acc
    which = np.repeat(np.arange(len(e)), nrows)
    starts = np.repeat(r_first, nrows)
    offsets = np.arange(len(which)) - np.repeat(np.cumsum(nrows) - nrows, nrows)
    rows = starts + offsets
    y = rows + 0.5
    ex0, ey0, ex1, ey1 = x0[which], y0[which], x1[which], y1[which]
    x = ex0 + (y - ey0) * (ex1 - ex0) / (ey1 - ey0)
    col = np.floor(x - 0.5) + 1
    col = np.clip(col, 0, width).astype(np.int64)
    np.add.at(acc, (rows, col), direction[which])
    return acc


@njit
def _crossings_loop(e, height, width):
    acc = np.zeros((height, width + 1), dtype=np.int32)
    for k in range(e.shape[0]):
        x0 = e[k, 0]
        y0 = e[k, 1]
        x1 = e[k, 2]
        y1 = e[k, 3]
        if y0 == y1:
            continue
        d = 1 if y1 > y0 else -1
        lo = min(y0, y1)
        hi = max(y0, y1)
        r0 = max(int(np.ceil(lo - 0.5)), 0)
        r1 = min(int(np.ceil(hi - 0.5)), height)
        for r in range(r0, r1):
            y = r + 0.5
            x = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            c = np.floor(x - 0.5) + 1
            if c < 0:
                c = 0
            elif c > width:
                c = width
            acc[r, int(c)] += d
    return acc


def crossings_numba(edges: np.ndarray, height: int, width: int) -> np.ndarray:
    e = np.ascontiguousarray(np.asarray(edges, dtype=np.float64).reshape(-1, 4))
    return _crossings_loop(e, height, width)


IMPLEMENTATIONS = {"numpy": {"nearest": nearest_numpy, "crossings": crossings_numpy}}
if HAVE_NUMBA:
    IMPLEMENTATIONS["numba"] = {"nearest": nearest_numba, "crossings": crossings_numba}

BACKEND = "numba" if USE_NUMBA else "numpy"
nearest = IMPLEMENTATIONS[BACKEND]["nearest"]
crossings = IMPLEMENTATIONS[BACKEND]["crossings"]
