# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the _kernels_py loops; see that module for semantics."""

from libc.math cimport ceil, exp, floor, hypot, sqrt


cdef inline double _fmin(double a, double b) nogil:
    return a if a < b else b


cdef inline double _fmax(double a, double b) nogil:
    return a if a > b else b


cdef inline Py_ssize_t _imin(Py_ssize_t a, Py_ssize_t b) nogil:
    return a if a < b else b


cdef inline Py_ssize_t _imax(Py_ssize_t a, Py_ssize_t b) nogil:
    return a if a > b else b


def ribbon_accumulate(double[:, :, ::1] sums, int[:, ::1] counts,
                      double ax, double ay, double vx, double vy,
                      double lam, double sigma, double wx, double wy):
    cdef Py_ssize_t h = counts.shape[0]
    cdef Py_ssize_t w = counts.shape[1]
    cdef double bx, by, ex, ey, dx, dy, t, s
    cdef Py_ssize_t x0, x1, y0, y1, x, y
    if lam <= 0.0:
        return
    bx = ax + vx * lam
    by = ay + vy * lam
    ex = (vy if vy >= 0 else -vy) * sigma
    ey = (vx if vx >= 0 else -vx) * sigma
    x0 = _imax(<Py_ssize_t>floor(_fmin(ax, bx) - ex), 0)
    x1 = _imin(<Py_ssize_t>ceil(_fmax(ax, bx) + ex), w - 1)
    y0 = _imax(<Py_ssize_t>floor(_fmin(ay, by) - ey), 0)
    y1 = _imin(<Py_ssize_t>ceil(_fmax(ay, by) + ey), h - 1)
    with nogil:
        for y in range(y0, y1 + 1):
            for x in range(x0, x1 + 1):
                dx = x - ax
                dy = y - ay
                t = vx * dx + vy * dy
                if t < 0.0 or t > lam:
                    continue
                s = -vy * dx + vx * dy
                if s < 0.0:
                    s = -s
                if s > sigma:
                    continue
                sums[y, x, 0] += wx
                sums[y, x, 1] += wy
                counts[y, x] += 1


cdef inline void _bilinear(double[:, :, ::1] data, Py_ssize_t h, Py_ssize_t w,
                           double x, double y, double* out) nogil:
    cdef Py_ssize_t x0, x1, y0, y1
    cdef double fx, fy
    x = _fmin(_fmax(x, 0.0), <double>(w - 1))
    y = _fmin(_fmax(y, 0.0), <double>(h - 1))
    x0 = <Py_ssize_t>floor(x)
    y0 = <Py_ssize_t>floor(y)
    x1 = _imin(x0 + 1, w - 1)
    y1 = _imin(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    out[0] = ((1.0 - fy) * ((1.0 - fx) * data[y0, x0, 0] + fx * data[y0, x1, 0])
              + fy * ((1.0 - fx) * data[y1, x0, 0] + fx * data[y1, x1, 0]))
    out[1] = ((1.0 - fy) * ((1.0 - fx) * data[y0, x0, 1] + fx * data[y0, x1, 1])
              + fy * ((1.0 - fx) * data[y1, x0, 1] + fx * data[y1, x1, 1]))


def sample_bilinear(double[:, :, ::1] data, double x, double y):
    cdef double out[2]
    _bilinear(data, data.shape[0], data.shape[1], x, y, out)
    return out[0], out[1]


def line_integral(double[:, :, ::1] data, double ax, double ay,
                  double bx, double by, Py_ssize_t steps):
    cdef Py_ssize_t h = data.shape[0]
    cdef Py_ssize_t w = data.shape[1]
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double norm = hypot(dx, dy)
    cdef double ux = dx / norm
    cdef double uy = dy / norm
    cdef double acc = 0.0
    cdef double o
    cdef double out[2]
    cdef Py_ssize_t s
    with nogil:
        for s in range(steps):
            o = (s + 0.5) / steps
            _bilinear(data, h, w, ax + o * dx, ay + o * dy, out)
            acc += out[0] * ux + out[1] * uy
    return acc / steps


def gaussian_peak_max(double[:, ::1] grid, double cx, double cy,
                      double sigma, double amplitude):
    cdef Py_ssize_t h = grid.shape[0]
    cdef Py_ssize_t w = grid.shape[1]
    cdef double r = 4.0 * sigma
    cdef Py_ssize_t x0 = _imax(<Py_ssize_t>floor(cx - r), 0)
    cdef Py_ssize_t x1 = _imin(<Py_ssize_t>ceil(cx + r), w - 1)
    cdef Py_ssize_t y0 = _imax(<Py_ssize_t>floor(cy - r), 0)
    cdef Py_ssize_t y1 = _imin(<Py_ssize_t>ceil(cy + r), h - 1)
    cdef Py_ssize_t x, y
    cdef double d2, val
    if x1 < x0 or y1 < y0:
        return
    with nogil:
        for y in range(y0, y1 + 1):
            for x in range(x0, x1 + 1):
                d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy)
                if d2 > r * r:
                    continue
                val = amplitude * exp(-d2 / (2.0 * sigma * sigma))
                if val > grid[y, x]:
                    grid[y, x] = val


def disc_accumulate(double[:, :, ::1] sums, int[:, ::1] counts,
                    double cx, double cy, double radius,
                    double wx, double wy):
    cdef Py_ssize_t h = counts.shape[0]
    cdef Py_ssize_t w = counts.shape[1]
    cdef Py_ssize_t x0 = _imax(<Py_ssize_t>floor(cx - radius), 0)
    cdef Py_ssize_t x1 = _imin(<Py_ssize_t>ceil(cx + radius), w - 1)
    cdef Py_ssize_t y0 = _imax(<Py_ssize_t>floor(cy - radius), 0)
    cdef Py_ssize_t y1 = _imin(<Py_ssize_t>ceil(cy + radius), h - 1)
    cdef Py_ssize_t x, y
    cdef double d2
    if x1 < x0 or y1 < y0:
        return
    with nogil:
        for y in range(y0, y1 + 1):
            for x in range(x0, x1 + 1):
                d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy)
                if d2 > radius * radius:
                    continue
                sums[y, x, 0] += wx
                sums[y, x, 1] += wy
                counts[y, x] += 1
