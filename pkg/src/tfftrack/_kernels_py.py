"""Grid inner loops, plain numpy implementation.

Signatures here mirror the optional compiled extension (_kernels);
kernels.py selects one of the two at import time. All grids are
C-contiguous float64 arrays shaped (height, width, channels) with pixel
(x, y) located at the continuous point (x, y).
"""

from __future__ import annotations

import math

import numpy as np


def ribbon_accumulate(sums, counts, ax, ay, vx, vy, lam, sigma, wx, wy):
    """Add the vector (wx, wy) to every pixel of a motion ribbon.

    The ribbon is the set of integer pixels p satisfying
    0 <= v.(p - a) <= lam and |v_perp.(p - a)| <= sigma for the unit
    direction v = (vx, vy) and v_perp = (-vy, vx). counts tracks how
    many ribbons cover each pixel so the caller can average overlaps.
    Zero-length motion contributes nothing.
    """
    if lam <= 0.0:
        return
    h, w = counts.shape
    bx = ax + vx * lam
    by = ay + vy * lam
    ex = abs(vy) * sigma
    ey = abs(vx) * sigma
    x0 = max(int(math.floor(min(ax, bx) - ex)), 0)
    x1 = min(int(math.ceil(max(ax, bx) + ex)), w - 1)
    y0 = max(int(math.floor(min(ay, by) - ey)), 0)
    y1 = min(int(math.ceil(max(ay, by) + ey)), h - 1)
    if x1 < x0 or y1 < y0:
        return
    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    dx = xs - ax
    dy = ys - ay
    t = vx * dx + vy * dy
    s = -vy * dx + vx * dy
    inside = (t >= 0.0) & (t <= lam) & (np.abs(s) <= sigma)
    sums[y0:y1 + 1, x0:x1 + 1, 0][inside] += wx
    sums[y0:y1 + 1, x0:x1 + 1, 1][inside] += wy
    counts[y0:y1 + 1, x0:x1 + 1][inside] += 1


def sample_bilinear(data, x, y):
    """Bilinear sample of an (H, W, 2) field; coordinates clamp to borders."""
    h, w = data.shape[0], data.shape[1]
    x = min(max(x, 0.0), float(w - 1))
    y = min(max(y, 0.0), float(h - 1))
    x0 = int(math.floor(x))
    y0 = int(math.floor(y))
    x1 = min(x0 + 1, w - 1)
    y1 = min(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    u = ((1.0 - fy) * ((1.0 - fx) * data[y0, x0, 0] + fx * data[y0, x1, 0])
         + fy * ((1.0 - fx) * data[y1, x0, 0] + fx * data[y1, x1, 0]))
    v = ((1.0 - fy) * ((1.0 - fx) * data[y0, x0, 1] + fx * data[y0, x1, 1])
         + fy * ((1.0 - fx) * data[y1, x0, 1] + fx * data[y1, x1, 1]))
    return float(u), float(v)


def line_integral(data, ax, ay, bx, by, steps):
    """Midpoint-rule integral of the field projected on the segment direction.

    Averages dot(T(i(o)), (b - a)/||b - a||) over `steps` midpoint samples
    o = (s + 0.5)/steps of the segment i(o) = (1 - o) a + o b, which equals
    the integral over o in [0, 1] up to quadrature error.
    """
    h, w = data.shape[0], data.shape[1]
    dx = bx - ax
    dy = by - ay
    norm = math.hypot(dx, dy)
    ux = dx / norm
    uy = dy / norm
    o = (np.arange(steps) + 0.5) / steps
    xs = np.clip(ax + o * dx, 0.0, float(w - 1))
    ys = np.clip(ay + o * dy, 0.0, float(h - 1))
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[:, None]
    fy = (ys - y0)[:, None]
    vals = ((1.0 - fy) * ((1.0 - fx) * data[y0, x0] + fx * data[y0, x1])
            + fy * ((1.0 - fx) * data[y1, x0] + fx * data[y1, x1]))
    return float(np.mean(vals[:, 0] * ux + vals[:, 1] * uy))


def gaussian_peak_max(grid, cx, cy, sigma, amplitude):
    """Max-composite an isotropic Gaussian bump into a 2D grid.

    The bump is truncated at 4 sigma; both backends share the cutoff so
    they agree to rounding error.
    """
    h, w = grid.shape
    r = 4.0 * sigma
    x0 = max(int(math.floor(cx - r)), 0)
    x1 = min(int(math.ceil(cx + r)), w - 1)
    y0 = max(int(math.floor(cy - r)), 0)
    y1 = min(int(math.ceil(cy + r)), h - 1)
    if x1 < x0 or y1 < y0:
        return
    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    d2 = (xs - cx) ** 2 + (ys - cy) ** 2
    bump = np.where(d2 <= r * r,
                    amplitude * np.exp(-d2 / (2.0 * sigma * sigma)), 0.0)
    region = grid[y0:y1 + 1, x0:x1 + 1]
    np.maximum(region, bump, out=region)


def disc_accumulate(sums, counts, cx, cy, radius, wx, wy):
    """Add (wx, wy) to every pixel within Euclidean radius of (cx, cy)."""
    h, w = counts.shape
    x0 = max(int(math.floor(cx - radius)), 0)
    x1 = min(int(math.ceil(cx + radius)), w - 1)
    y0 = max(int(math.floor(cy - radius)), 0)
    y1 = min(int(math.ceil(cy + radius)), h - 1)
    if x1 < x0 or y1 < y0:
        return
    ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
    inside = (xs - cx) ** 2 + (ys - cy) ** 2 <= radius * radius
    sums[y0:y1 + 1, x0:x1 + 1, 0][inside] += wx
    sums[y0:y1 + 1, x0:x1 + 1, 1][inside] += wy
    counts[y0:y1 + 1, x0:x1 + 1][inside] += 1
